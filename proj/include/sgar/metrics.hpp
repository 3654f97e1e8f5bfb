#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sgar/inference.hpp"
#include "sgar/types.hpp"

namespace sgar {

// Everything the evaluation protocols need for one scene: the annotations
// plus the per-query predictions and the membership each group query
// resolves to (memberships[q] belongs to group_preds[q]).
struct SceneResult {
  Scene scene;
  std::vector<GroupPrediction> group_preds;
  std::vector<IndividualPrediction> individual_preds;
  std::vector<GroupMembership> memberships;
};

// Fraction of scenes whose top activity (global max over queries and
// classes) equals the first ground-truth group's activity class. Every
// scene must carry at least one group; empty input is an error.
double group_activity_accuracy(std::span<const SceneResult> results);

// Strict per-scene protocol: a scene is correct iff the top activity is
// right, the top query's decoded size equals the first group's size, and
// minimum-cost pairing of its resolved member boxes to the ground-truth
// member boxes on (1 - IoU) leaves every pair above the threshold.
double group_identification_accuracy(std::span<const SceneResult> results,
                                     double iou_threshold = 0.5);

// Detection-style protocol: one detection per group query (class = argmax
// activity, score = max activity), ranked by score across the dataset.
// A detection is a true positive when it matches a same-class, still
// unmatched ground-truth group in its scene with equal member count and
// all member-box IoUs above the threshold under minimum-cost pairing.
// per_class holds one average precision per class (NaN when the class has
// no ground truth); map averages the rest. Throws when the dataset has no
// groups at all.
struct MapResult {
  double map = 0.0;
  Vector per_class;
};
MapResult social_group_map(std::span<const SceneResult> results,
                           double iou_threshold = 0.5);

// Fraction of (group, trial) pairs whose member-point sort order under
// `order` changes after adding Gaussian noise (std sigma per coordinate) to
// every point. Groups with fewer than two members are skipped; 0 when no
// group qualifies. sigma must be positive.
double order_change_ratio(std::span<const Scene> scenes, PointOrder order,
                          double sigma, int trials, std::uint64_t seed);

}  // namespace sgar
