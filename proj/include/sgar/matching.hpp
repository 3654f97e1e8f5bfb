#pragma once

#include <span>

#include "sgar/assignment.hpp"
#include "sgar/costs.hpp"
#include "sgar/types.hpp"

namespace sgar {

// Dense cost matrix with one row per ground-truth group and one column per
// group prediction.
Matrix group_cost_matrix(std::span<const GroundTruthGroup> gts,
                         std::span<const GroupPrediction> preds,
                         const GroupCostWeights& w, int M);

// Dense cost matrix with one row per annotated person and one column per
// individual prediction.
Matrix individual_cost_matrix(std::span<const GroundTruthPerson> gts,
                              std::span<const IndividualPrediction> preds,
                              const IndividualCostWeights& w);

// Minimum-cost matching of ground-truth groups to distinct group
// predictions. Unmatched predictions are implicitly paired with the empty
// label; matching the rectangular matrix directly is equivalent to padding
// it square with zero-cost dummy rows. Empty ground truth yields an empty
// assignment; more ground truths than predictions is an error.
Assignment match_groups(std::span<const GroundTruthGroup> gts,
                        std::span<const GroupPrediction> preds,
                        const GroupCostWeights& w, int M);

// Same contract for persons against individual predictions.
Assignment match_individuals(std::span<const GroundTruthPerson> gts,
                             std::span<const IndividualPrediction> preds,
                             const IndividualCostWeights& w);

}  // namespace sgar
