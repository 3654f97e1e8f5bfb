#pragma once

#include <span>

#include "sgar/assignment.hpp"
#include "sgar/types.hpp"

namespace sgar {

// Penalty-reduced focal term with focusing power 2 on a single probability.
// For a positive target: -(1-p)^2 ln p; for a negative one: -p^2 ln(1-p).
// p is clamped to [1e-7, 1-1e-7] before the logarithm; d_prob is the exact
// derivative of the clamped function, hence 0 outside the clamp interval.
struct FocalResult {
  double value = 0.0;
  double d_prob = 0.0;
};
FocalResult focal_term(double target, double p);

// Gradients of a weighted loss total with respect to every raw model
// output, sized (queries x per-query output width). Group and individual
// losses each fill their own block and leave the other empty; sum() merges.
struct PredictionGrads {
  Matrix d_activity;  // n_q x N_v
  Vector d_size;      // n_q
  Matrix d_points;    // n_q x 2M, interleaved (x, y)
  Vector d_score;     // n_q
  Matrix d_box;       // n_q x 4, (cx, cy, w, h)
  Matrix d_action;    // n_q x N_a
};
PredictionGrads sum(const PredictionGrads& a, const PredictionGrads& b);

// Per-term values (unweighted) plus the weighted total and its gradients.
struct LossBreakdown {
  double l_v = 0.0;  // activity focal
  double l_s = 0.0;  // size L1
  double l_u = 0.0;  // member-point L1
  double l_c = 0.0;  // person score focal
  double l_b = 0.0;  // box L1
  double l_o = 0.0;  // box overlap (1 - giou)
  double l_a = 0.0;  // action focal
  double total = 0.0;
  PredictionGrads grads;
};

// Group objective under a fixed matching. The activity term runs over every
// query (unmatched queries score against the all-zero label); size and
// point terms run over matched pairs only. All three terms are normalized
// by the number of ground-truth groups (at least 1). When normalize_lu is
// set, each group's point term is additionally divided by its size.
// The assignment must pair each ground truth with a distinct valid query.
LossBreakdown group_loss(std::span<const GroundTruthGroup> gts,
                         std::span<const GroupPrediction> preds,
                         const Assignment& assignment, const HyperParams& hp,
                         bool normalize_lu = false);

// Individual objective under a fixed matching: score focal over every
// query, box L1 + (1 - giou) + action focal over matched pairs, normalized
// by the number of annotated persons (at least 1).
LossBreakdown individual_loss(std::span<const GroundTruthPerson> gts,
                              std::span<const IndividualPrediction> preds,
                              const Assignment& assignment, const HyperParams& hp);

}  // namespace sgar
