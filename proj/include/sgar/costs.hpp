#pragma once

#include <span>

#include "sgar/types.hpp"

namespace sgar {

Point2 box_center(const Box& b);

// Intersection over union on center-size boxes. Degenerate overlap (zero
// union) yields 0.
double iou(const Box& a, const Box& b);

// Generalized IoU: iou minus the fraction of the smallest enclosing box not
// covered by the union. Range [-1, 1]; equals iou when one box contains the
// other and 0 for boxes that merely touch.
double giou(const Box& a, const Box& b);

// giou value plus its gradient with respect to the second box's
// (cx, cy, w, h). Piecewise-smooth; at min/max switch points one branch is
// chosen consistently with the value.
struct GiouGrad {
  double value = 0.0;
  Eigen::Vector4d d_pred = Eigen::Vector4d::Zero();
};
GiouGrad giou_with_grad(const Box& gt, const Box& pred);

// Agreement term between a one-hot label vector and per-class
// probabilities: -(v . p + (1 - v) . (1 - p)) / N. Minimal at -1 for a
// perfect prediction, 0 for a maximally wrong one.
double activity_cost(const Eigen::Ref<const Vector>& label,
                     const Eigen::Ref<const Vector>& probs);

// Absolute gap between normalized sizes.
double size_cost(double size_norm, double size_pred);

// Mean L1 distance between corresponding points over the ground-truth
// prefix: the prediction supplies at least as many points, extras ignored.
double points_cost(std::span<const Point2> gt_points,
                   std::span<const Point2> pred_points);

struct GroupCostWeights {
  double eta_v = 2.0;
  double eta_s = 1.0;
  double eta_u = 5.0;
};

struct IndividualCostWeights {
  double eta_c = 1.0;
  double eta_b = 5.0;
  double eta_o = 2.0;
  double eta_a = 2.0;
};

GroupCostWeights group_weights(const HyperParams& hp);
IndividualCostWeights individual_weights(const HyperParams& hp);

// Weighted matching cost between one ground-truth group and one group
// prediction: eta_v * activity + eta_s * size + eta_u * points, with the
// ground-truth size normalized by M.
double group_pair_cost(const GroundTruthGroup& gt, const GroupPrediction& pred,
                       const GroupCostWeights& w, int M);

// Weighted matching cost between one annotated person and one individual
// prediction: -eta_c * score + eta_b * L1(box) - eta_o * giou
// + eta_a * action agreement.
double individual_pair_cost(const GroundTruthPerson& gt,
                            const IndividualPrediction& pred,
                            const IndividualCostWeights& w);

// Member-identification cost: Euclidean distance from a predicted member
// point to an individual prediction's box center, divided by that
// prediction's score (clamped to at least 1e-4 so empty detections stay
// finite but expensive).
double member_point_cost(const Point2& point, const IndividualPrediction& ind);

}  // namespace sgar
