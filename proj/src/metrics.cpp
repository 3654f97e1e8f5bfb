#include "sgar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "sgar/assignment.hpp"
#include "sgar/costs.hpp"

namespace sgar {

namespace {

int argmax(const Vector& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = static_cast<int>(i);
  }
  return best;
}

std::vector<Box> resolve_member_boxes(const SceneResult& r, const GroupMembership& m) {
  std::vector<Box> boxes;
  boxes.reserve(m.member_pred_indices.size());
  for (int idx : m.member_pred_indices) {
    boxes.push_back(r.individual_preds[idx].box);
  }
  return boxes;
}

std::vector<Box> gt_member_boxes(const Scene& scene, const GroundTruthGroup& g) {
  std::vector<Box> boxes;
  boxes.reserve(g.member_indices.size());
  for (int idx : g.member_indices) {
    boxes.push_back(scene.persons[idx].box);
  }
  return boxes;
}

// Minimum-cost pairing on (1 - IoU); true when every matched pair clears
// the threshold. Requires equal counts.
bool all_members_overlap(const std::vector<Box>& pred, const std::vector<Box>& gt,
                         double thr) {
  if (pred.size() != gt.size() || pred.empty()) return pred.size() == gt.size();
  const int n = static_cast<int>(pred.size());
  Matrix cost(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cost(i, j) = 1.0 - iou(gt[i], pred[j]);
    }
  }
  const Assignment a = solve_assignment(cost);
  for (int i = 0; i < n; ++i) {
    if (iou(gt[i], pred[a.col_for_row[i]]) <= thr) return false;
  }
  return true;
}

void require_results(std::span<const SceneResult> results, const char* who) {
  if (results.empty()) {
    throw std::invalid_argument(std::string(who) + ": empty result set");
  }
  for (const auto& r : results) {
    if (r.scene.groups.empty()) {
      throw std::invalid_argument(std::string(who) + ": scene without ground-truth groups");
    }
  }
}

}  // namespace

double group_activity_accuracy(std::span<const SceneResult> results) {
  require_results(results, "group_activity_accuracy");
  int correct = 0;
  for (const auto& r : results) {
    const auto [q, cls] = select_top_group(r.group_preds);
    (void)q;
    if (cls == argmax(r.scene.groups[0].activity)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(results.size());
}

double group_identification_accuracy(std::span<const SceneResult> results,
                                     double iou_threshold) {
  require_results(results, "group_identification_accuracy");
  int correct = 0;
  for (const auto& r : results) {
    const auto [q, cls] = select_top_group(r.group_preds);
    const auto& gt = r.scene.groups[0];
    if (cls != argmax(gt.activity)) continue;
    const auto& membership = r.memberships.at(q);
    if (membership.decoded_size != gt.size || membership.truncated) continue;
    if (all_members_overlap(resolve_member_boxes(r, membership),
                            gt_member_boxes(r.scene, gt), iou_threshold)) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(results.size());
}

MapResult social_group_map(std::span<const SceneResult> results, double iou_threshold) {
  if (results.empty()) {
    throw std::invalid_argument("social_group_map: empty result set");
  }

  int n_classes = 0;
  for (const auto& r : results) {
    for (const auto& p : r.group_preds) {
      n_classes = std::max(n_classes, static_cast<int>(p.activity_probs.size()));
    }
    for (const auto& g : r.scene.groups) {
      n_classes = std::max(n_classes, static_cast<int>(g.activity.size()));
    }
  }

  std::vector<int> gt_count(n_classes, 0);
  int total_gt = 0;
  for (const auto& r : results) {
    for (const auto& g : r.scene.groups) {
      ++gt_count[argmax(g.activity)];
      ++total_gt;
    }
  }
  if (total_gt == 0) {
    throw std::invalid_argument("social_group_map: no ground-truth groups in result set");
  }

  struct Detection {
    int cls;
    double score;
    int scene;
    int query;
  };
  std::vector<Detection> detections;
  for (size_t s = 0; s < results.size(); ++s) {
    const auto& r = results[s];
    for (size_t q = 0; q < r.group_preds.size(); ++q) {
      const auto& probs = r.group_preds[q].activity_probs;
      const int cls = argmax(probs);
      detections.push_back({cls, probs(cls), static_cast<int>(s), static_cast<int>(q)});
    }
  }
  // Ranked by score; construction order (scene, query) breaks ties.
  std::stable_sort(detections.begin(), detections.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });

  MapResult out;
  out.per_class = Vector::Constant(n_classes, std::numeric_limits<double>::quiet_NaN());
  double ap_sum = 0.0;
  int ap_classes = 0;

  std::vector<std::vector<char>> matched(results.size());
  for (size_t s = 0; s < results.size(); ++s) {
    matched[s].assign(results[s].scene.groups.size(), 0);
  }

  for (int cls = 0; cls < n_classes; ++cls) {
    if (gt_count[cls] == 0) continue;
    for (auto& m : matched) std::fill(m.begin(), m.end(), 0);

    std::vector<char> is_tp;
    for (const auto& det : detections) {
      if (det.cls != cls) continue;
      const auto& r = results[det.scene];
      const auto& membership = r.memberships.at(det.query);
      const std::vector<Box> pred_boxes = resolve_member_boxes(r, membership);

      bool tp = false;
      for (size_t g = 0; g < r.scene.groups.size(); ++g) {
        const auto& gt = r.scene.groups[g];
        if (matched[det.scene][g] || argmax(gt.activity) != cls) continue;
        if (static_cast<int>(pred_boxes.size()) != gt.size) continue;
        if (!all_members_overlap(pred_boxes, gt_member_boxes(r.scene, gt), iou_threshold)) {
          continue;
        }
        matched[det.scene][g] = 1;
        tp = true;
        break;
      }
      is_tp.push_back(tp ? 1 : 0);
    }

    // All-point interpolated AP: area under the precision envelope.
    const int n_det = static_cast<int>(is_tp.size());
    std::vector<double> precision(n_det), recall(n_det);
    int tp_cum = 0;
    for (int k = 0; k < n_det; ++k) {
      tp_cum += is_tp[k];
      precision[k] = static_cast<double>(tp_cum) / static_cast<double>(k + 1);
      recall[k] = static_cast<double>(tp_cum) / static_cast<double>(gt_count[cls]);
    }
    for (int k = n_det - 2; k >= 0; --k) {
      precision[k] = std::max(precision[k], precision[k + 1]);
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (int k = 0; k < n_det; ++k) {
      ap += (recall[k] - prev_recall) * precision[k];
      prev_recall = recall[k];
    }

    out.per_class(cls) = ap;
    ap_sum += ap;
    ++ap_classes;
  }

  out.map = ap_classes > 0 ? ap_sum / ap_classes : 0.0;
  return out;
}

double order_change_ratio(std::span<const Scene> scenes, PointOrder order, double sigma,
                          int trials, std::uint64_t seed) {
  if (sigma <= 0.0) {
    throw std::invalid_argument("order_change_ratio: sigma must be positive");
  }
  if (trials <= 0) {
    throw std::invalid_argument("order_change_ratio: trials must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);

  long long changed = 0, total = 0;
  std::vector<Point2> perturbed;
  for (const auto& scene : scenes) {
    for (const auto& group : scene.groups) {
      if (group.member_points.size() < 2) continue;
      const std::vector<int> base = sort_permutation(group.member_points, order);
      for (int t = 0; t < trials; ++t) {
        perturbed = group.member_points;
        for (auto& p : perturbed) {
          p.x += noise(rng);
          p.y += noise(rng);
        }
        if (sort_permutation(perturbed, order) != base) ++changed;
        ++total;
      }
    }
  }
  return total > 0 ? static_cast<double>(changed) / static_cast<double>(total) : 0.0;
}

}  // namespace sgar
