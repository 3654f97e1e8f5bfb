#include "sgar/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sgar/costs.hpp"

namespace sgar {

namespace {

constexpr double kProbClamp = 1e-7;

double sign(double x) { return (x > 0.0) ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Columns must be distinct, in range, one per ground truth.
void check_assignment(const Assignment& a, size_t n_gt, size_t n_pred,
                      const char* who) {
  if (a.col_for_row.size() != n_gt) {
    throw std::invalid_argument(std::string(who) + ": assignment size does not match ground truth");
  }
  std::vector<char> seen(n_pred, 0);
  for (int c : a.col_for_row) {
    if (c < 0 || static_cast<size_t>(c) >= n_pred) {
      throw std::invalid_argument(std::string(who) + ": assignment column out of range");
    }
    if (seen[c]) {
      throw std::invalid_argument(std::string(who) + ": assignment column repeated");
    }
    seen[c] = 1;
  }
}

Matrix sum_or_empty(const Matrix& a, const Matrix& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  return a + b;
}

Vector sum_or_empty(const Vector& a, const Vector& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  return a + b;
}

}  // namespace

FocalResult focal_term(double target, double p) {
  const double q = std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
  const bool interior = p >= kProbClamp && p <= 1.0 - kProbClamp;
  FocalResult out;
  if (target > 0.5) {
    const double om = 1.0 - q;
    out.value = -om * om * std::log(q);
    if (interior) out.d_prob = 2.0 * om * std::log(q) - om * om / q;
  } else {
    const double lg = std::log(1.0 - q);
    out.value = -q * q * lg;
    if (interior) out.d_prob = -2.0 * q * lg + q * q / (1.0 - q);
  }
  return out;
}

PredictionGrads sum(const PredictionGrads& a, const PredictionGrads& b) {
  PredictionGrads out;
  out.d_activity = sum_or_empty(a.d_activity, b.d_activity);
  out.d_size = sum_or_empty(a.d_size, b.d_size);
  out.d_points = sum_or_empty(a.d_points, b.d_points);
  out.d_score = sum_or_empty(a.d_score, b.d_score);
  out.d_box = sum_or_empty(a.d_box, b.d_box);
  out.d_action = sum_or_empty(a.d_action, b.d_action);
  return out;
}

LossBreakdown group_loss(std::span<const GroundTruthGroup> gts,
                         std::span<const GroupPrediction> preds,
                         const Assignment& assignment, const HyperParams& hp,
                         bool normalize_lu) {
  check_assignment(assignment, gts.size(), preds.size(), "group_loss");
  const int n_q = static_cast<int>(preds.size());
  const double denom = std::max<double>(1.0, static_cast<double>(gts.size()));

  LossBreakdown lb;
  lb.grads.d_activity = Matrix::Zero(n_q, hp.N_v);
  lb.grads.d_size = Vector::Zero(n_q);
  lb.grads.d_points = Matrix::Zero(n_q, 2 * hp.M);

  std::vector<int> gt_for_query(n_q, -1);
  for (size_t i = 0; i < gts.size(); ++i) gt_for_query[assignment.col_for_row[i]] = static_cast<int>(i);

  for (int j = 0; j < n_q; ++j) {
    const auto& probs = preds[j].activity_probs;
    if (probs.size() != hp.N_v) {
      throw std::invalid_argument("group_loss: prediction activity length mismatch");
    }
    const int gi = gt_for_query[j];
    for (int k = 0; k < hp.N_v; ++k) {
      const double target = gi >= 0 ? gts[gi].activity(k) : 0.0;
      const FocalResult f = focal_term(target, probs(k));
      lb.l_v += f.value / denom;
      lb.grads.d_activity(j, k) = hp.lambda_v * f.d_prob / denom;
    }
  }

  for (size_t i = 0; i < gts.size(); ++i) {
    const int j = assignment.col_for_row[i];
    const auto& gt = gts[i];
    const auto& pred = preds[j];

    const double s_norm = static_cast<double>(gt.size) / static_cast<double>(hp.M);
    const double ds = s_norm - pred.size_norm;
    lb.l_s += std::abs(ds) / denom;
    lb.grads.d_size(j) += hp.lambda_s * (-sign(ds)) / denom;

    if (gt.member_points.size() > pred.member_points.size()) {
      throw std::invalid_argument("group_loss: ground-truth group larger than prediction capacity");
    }
    const double pt_norm =
        normalize_lu ? static_cast<double>(gt.member_points.size()) : 1.0;
    for (size_t k = 0; k < gt.member_points.size(); ++k) {
      const double dx = gt.member_points[k].x - pred.member_points[k].x;
      const double dy = gt.member_points[k].y - pred.member_points[k].y;
      lb.l_u += (std::abs(dx) + std::abs(dy)) / (denom * pt_norm);
      lb.grads.d_points(j, 2 * k) += hp.lambda_u * (-sign(dx)) / (denom * pt_norm);
      lb.grads.d_points(j, 2 * k + 1) += hp.lambda_u * (-sign(dy)) / (denom * pt_norm);
    }
  }

  lb.total = hp.lambda_v * lb.l_v + hp.lambda_s * lb.l_s + hp.lambda_u * lb.l_u;
  return lb;
}

LossBreakdown individual_loss(std::span<const GroundTruthPerson> gts,
                              std::span<const IndividualPrediction> preds,
                              const Assignment& assignment, const HyperParams& hp) {
  check_assignment(assignment, gts.size(), preds.size(), "individual_loss");
  const int n_q = static_cast<int>(preds.size());
  const double denom = std::max<double>(1.0, static_cast<double>(gts.size()));

  LossBreakdown lb;
  lb.grads.d_score = Vector::Zero(n_q);
  lb.grads.d_box = Matrix::Zero(n_q, 4);
  lb.grads.d_action = Matrix::Zero(n_q, hp.N_a);

  std::vector<int> gt_for_query(n_q, -1);
  for (size_t i = 0; i < gts.size(); ++i) gt_for_query[assignment.col_for_row[i]] = static_cast<int>(i);

  for (int j = 0; j < n_q; ++j) {
    const double target = gt_for_query[j] >= 0 ? 1.0 : 0.0;
    const FocalResult f = focal_term(target, preds[j].score);
    lb.l_c += f.value / denom;
    lb.grads.d_score(j) = hp.lambda_c * f.d_prob / denom;
  }

  for (size_t i = 0; i < gts.size(); ++i) {
    const int j = assignment.col_for_row[i];
    const auto& gt = gts[i];
    const auto& pred = preds[j];

    const double d[4] = {gt.box.cx - pred.box.cx, gt.box.cy - pred.box.cy,
                         gt.box.w - pred.box.w, gt.box.h - pred.box.h};
    for (int k = 0; k < 4; ++k) {
      lb.l_b += std::abs(d[k]) / denom;
      lb.grads.d_box(j, k) += hp.lambda_b * (-sign(d[k])) / denom;
    }

    const GiouGrad g = giou_with_grad(gt.box, pred.box);
    lb.l_o += (1.0 - g.value) / denom;
    lb.grads.d_box.row(j) += (hp.lambda_o * (-g.d_pred) / denom).transpose();

    if (gt.action.size() != hp.N_a || pred.action_probs.size() != hp.N_a) {
      throw std::invalid_argument("individual_loss: action vector length mismatch");
    }
    for (int k = 0; k < hp.N_a; ++k) {
      const FocalResult f = focal_term(gt.action(k), pred.action_probs(k));
      lb.l_a += f.value / denom;
      lb.grads.d_action(j, k) += hp.lambda_a * f.d_prob / denom;
    }
  }

  lb.total = hp.lambda_c * lb.l_c + hp.lambda_b * lb.l_b + hp.lambda_o * lb.l_o +
             hp.lambda_a * lb.l_a;
  return lb;
}

}  // namespace sgar
