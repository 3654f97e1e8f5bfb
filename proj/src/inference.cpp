#include "sgar/inference.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sgar/assignment.hpp"
#include "sgar/costs.hpp"

namespace sgar {

int decode_group_size(double s_hat, int M) {
  const long long n = std::llround(static_cast<double>(M) * s_hat);
  return static_cast<int>(std::clamp<long long>(n, 0, M));
}

GroupMembership identify_members(const GroupPrediction& group,
                                 std::span<const IndividualPrediction> individuals,
                                 int M) {
  GroupMembership out;
  out.decoded_size = decode_group_size(group.size_norm, M);
  if (out.decoded_size == 0) return out;

  const int n_ind = static_cast<int>(individuals.size());
  if (out.decoded_size > n_ind) {
    out.truncated = true;
    out.member_pred_indices.resize(n_ind);
    std::iota(out.member_pred_indices.begin(), out.member_pred_indices.end(), 0);
    return out;
  }
  if (static_cast<size_t>(out.decoded_size) > group.member_points.size()) {
    throw std::invalid_argument("identify_members: decoded size exceeds available member points");
  }

  Matrix cost(out.decoded_size, n_ind);
  for (int k = 0; k < out.decoded_size; ++k) {
    for (int j = 0; j < n_ind; ++j) {
      cost(k, j) = member_point_cost(group.member_points[k], individuals[j]);
    }
  }
  out.member_pred_indices = solve_assignment(cost).col_for_row;
  return out;
}

std::pair<int, int> select_top_group(std::span<const GroupPrediction> preds) {
  if (preds.empty()) {
    throw std::invalid_argument("select_top_group: no predictions");
  }
  int best_q = 0, best_c = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (size_t q = 0; q < preds.size(); ++q) {
    const auto& probs = preds[q].activity_probs;
    for (Eigen::Index c = 0; c < probs.size(); ++c) {
      if (probs(c) > best) {
        best = probs(c);
        best_q = static_cast<int>(q);
        best_c = static_cast<int>(c);
      }
    }
  }
  return {best_q, best_c};
}

}  // namespace sgar
