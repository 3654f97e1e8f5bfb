#include "sgar/costs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgar {

namespace {

struct Corners {
  double x0, y0, x1, y1;
};

Corners corners(const Box& b) {
  return {b.cx - 0.5 * b.w, b.cy - 0.5 * b.h, b.cx + 0.5 * b.w, b.cy + 0.5 * b.h};
}

}  // namespace

Point2 box_center(const Box& b) { return {b.cx, b.cy}; }

double iou(const Box& a, const Box& b) {
  const Corners ca = corners(a), cb = corners(b);
  const double iw = std::min(ca.x1, cb.x1) - std::max(ca.x0, cb.x0);
  const double ih = std::min(ca.y1, cb.y1) - std::max(ca.y0, cb.y0);
  const double inter = std::max(0.0, iw) * std::max(0.0, ih);
  const double uni = a.w * a.h + b.w * b.h - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double giou(const Box& a, const Box& b) {
  const double v = iou(a, b);
  const Corners ca = corners(a), cb = corners(b);
  const double ew = std::max(ca.x1, cb.x1) - std::min(ca.x0, cb.x0);
  const double eh = std::max(ca.y1, cb.y1) - std::min(ca.y0, cb.y0);
  const double enc = ew * eh;
  if (enc <= 0.0) return v;
  const double iw = std::min(ca.x1, cb.x1) - std::max(ca.x0, cb.x0);
  const double ih = std::min(ca.y1, cb.y1) - std::max(ca.y0, cb.y0);
  const double inter = std::max(0.0, iw) * std::max(0.0, ih);
  const double uni = a.w * a.h + b.w * b.h - inter;
  if (uni <= 0.0) return v;
  return v - (enc - uni) / enc;
}

GiouGrad giou_with_grad(const Box& gt, const Box& pred) {
  const Corners g = corners(gt), p = corners(pred);

  // Partials below are with respect to the prediction's corners
  // (x0, y0, x1, y1); the chain to (cx, cy, w, h) happens at the end.
  const double ox = std::min(p.x1, g.x1) - std::max(p.x0, g.x0);
  const double oy = std::min(p.y1, g.y1) - std::max(p.y0, g.y0);
  const double iw = std::max(0.0, ox);
  const double ih = std::max(0.0, oy);
  const double inter = iw * ih;

  const double dox_dx1 = (p.x1 < g.x1) ? 1.0 : 0.0;
  const double dox_dx0 = (p.x0 > g.x0) ? -1.0 : 0.0;
  const double doy_dy1 = (p.y1 < g.y1) ? 1.0 : 0.0;
  const double doy_dy0 = (p.y0 > g.y0) ? -1.0 : 0.0;

  const double active = (ox > 0.0 && oy > 0.0) ? 1.0 : 0.0;
  Eigen::Vector4d d_inter;  // order: x0, y0, x1, y1
  d_inter << active * ih * dox_dx0, active * iw * doy_dy0,
      active * ih * dox_dx1, active * iw * doy_dy1;

  const double area_p = pred.w * pred.h;
  const double area_g = gt.w * gt.h;
  Eigen::Vector4d d_area_p;
  d_area_p << -(p.y1 - p.y0), -(p.x1 - p.x0), (p.y1 - p.y0), (p.x1 - p.x0);

  const double uni = area_p + area_g - inter;
  const Eigen::Vector4d d_uni = d_area_p - d_inter;

  GiouGrad out;
  Eigen::Vector4d d_iou = Eigen::Vector4d::Zero();
  double v = 0.0;
  if (uni > 0.0) {
    v = inter / uni;
    d_iou = (d_inter * uni - inter * d_uni) / (uni * uni);
  }

  const double ew = std::max(p.x1, g.x1) - std::min(p.x0, g.x0);
  const double eh = std::max(p.y1, g.y1) - std::min(p.y0, g.y0);
  const double enc = ew * eh;

  Eigen::Vector4d d_corner = d_iou;
  out.value = v;
  if (enc > 0.0 && uni > 0.0) {
    const double dew_dx1 = (p.x1 > g.x1) ? 1.0 : 0.0;
    const double dew_dx0 = (p.x0 < g.x0) ? -1.0 : 0.0;
    const double deh_dy1 = (p.y1 > g.y1) ? 1.0 : 0.0;
    const double deh_dy0 = (p.y0 < g.y0) ? -1.0 : 0.0;
    Eigen::Vector4d d_enc;
    d_enc << eh * dew_dx0, ew * deh_dy0, eh * dew_dx1, ew * deh_dy1;

    // penalty = 1 - uni / enc
    const Eigen::Vector4d d_pen = (uni * d_enc - enc * d_uni) / (enc * enc);
    out.value = v - (enc - uni) / enc;
    d_corner = d_iou - d_pen;
  }

  // (x0, y0, x1, y1) -> (cx, cy, w, h)
  out.d_pred(0) = d_corner(0) + d_corner(2);
  out.d_pred(1) = d_corner(1) + d_corner(3);
  out.d_pred(2) = 0.5 * (d_corner(2) - d_corner(0));
  out.d_pred(3) = 0.5 * (d_corner(3) - d_corner(1));
  return out;
}

double activity_cost(const Eigen::Ref<const Vector>& label,
                     const Eigen::Ref<const Vector>& probs) {
  if (label.size() == 0) {
    throw std::invalid_argument("activity_cost: empty label vector");
  }
  if (label.size() != probs.size()) {
    throw std::invalid_argument("activity_cost: label and probability lengths differ");
  }
  const double n = static_cast<double>(label.size());
  const double agree =
      label.dot(probs) + (1.0 - label.array()).matrix().dot((1.0 - probs.array()).matrix());
  return -agree / n;
}

double size_cost(double size_norm, double size_pred) {
  return std::abs(size_norm - size_pred);
}

double points_cost(std::span<const Point2> gt_points,
                   std::span<const Point2> pred_points) {
  if (gt_points.empty()) {
    throw std::invalid_argument("points_cost: empty ground-truth point sequence");
  }
  if (gt_points.size() > pred_points.size()) {
    throw std::invalid_argument("points_cost: ground-truth group larger than prediction capacity");
  }
  double sum = 0.0;
  for (size_t k = 0; k < gt_points.size(); ++k) {
    sum += std::abs(gt_points[k].x - pred_points[k].x) +
           std::abs(gt_points[k].y - pred_points[k].y);
  }
  return sum / static_cast<double>(gt_points.size());
}

GroupCostWeights group_weights(const HyperParams& hp) {
  return {hp.eta_v, hp.eta_s, hp.eta_u};
}

IndividualCostWeights individual_weights(const HyperParams& hp) {
  return {hp.eta_c, hp.eta_b, hp.eta_o, hp.eta_a};
}

double group_pair_cost(const GroundTruthGroup& gt, const GroupPrediction& pred,
                       const GroupCostWeights& w, int M) {
  if (M <= 0) throw std::invalid_argument("group_pair_cost: M must be positive");
  const double s_norm = static_cast<double>(gt.size) / static_cast<double>(M);
  return w.eta_v * activity_cost(gt.activity, pred.activity_probs) +
         w.eta_s * size_cost(s_norm, pred.size_norm) +
         w.eta_u * points_cost(gt.member_points, pred.member_points);
}

double individual_pair_cost(const GroundTruthPerson& gt,
                            const IndividualPrediction& pred,
                            const IndividualCostWeights& w) {
  const double l1 = std::abs(gt.box.cx - pred.box.cx) + std::abs(gt.box.cy - pred.box.cy) +
                    std::abs(gt.box.w - pred.box.w) + std::abs(gt.box.h - pred.box.h);
  return -w.eta_c * pred.score + w.eta_b * l1 - w.eta_o * giou(gt.box, pred.box) +
         w.eta_a * activity_cost(gt.action, pred.action_probs);
}

double member_point_cost(const Point2& point, const IndividualPrediction& ind) {
  const double c = std::max(ind.score, 1e-4);
  const double dx = point.x - ind.box.cx;
  const double dy = point.y - ind.box.cy;
  return std::sqrt(dx * dx + dy * dy) / c;
}

}  // namespace sgar
