#pragma once

#include <span>
#include <utility>
#include <vector>

#include "sgar/types.hpp"

namespace sgar {

// Members selected for one predicted group. member_pred_indices[k] is the
// individual prediction matched to the group's k-th member point; entries
// are distinct. Its length equals decoded_size unless truncated is set
// (decoded size exceeded the candidate pool, in which case every candidate
// is included).
struct GroupMembership {
  int group_index = -1;
  std::vector<int> member_pred_indices;
  int decoded_size = 0;
  bool truncated = false;
};

// Nearest integer to M * s_hat, ties rounded away from zero, clamped to
// [0, M].
int decode_group_size(double s_hat, int M);

// Matches the group's first decoded-size member points to distinct
// individual predictions by minimum total point-to-center cost (distance
// scaled by inverse score). Injectivity comes from the assignment.
GroupMembership identify_members(const GroupPrediction& group,
                                 std::span<const IndividualPrediction> individuals,
                                 int M);

// Query index and class of the globally largest activity probability; ties
// go to the lowest (query, class). Throws std::invalid_argument on empty
// input.
std::pair<int, int> select_top_group(std::span<const GroupPrediction> preds);

}  // namespace sgar
