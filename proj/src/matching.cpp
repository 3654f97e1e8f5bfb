#include "sgar/matching.hpp"

#include <stdexcept>

namespace sgar {

Matrix group_cost_matrix(std::span<const GroundTruthGroup> gts,
                         std::span<const GroupPrediction> preds,
                         const GroupCostWeights& w, int M) {
  Matrix cost(gts.size(), preds.size());
  for (size_t i = 0; i < gts.size(); ++i) {
    for (size_t j = 0; j < preds.size(); ++j) {
      cost(i, j) = group_pair_cost(gts[i], preds[j], w, M);
    }
  }
  return cost;
}

Matrix individual_cost_matrix(std::span<const GroundTruthPerson> gts,
                              std::span<const IndividualPrediction> preds,
                              const IndividualCostWeights& w) {
  Matrix cost(gts.size(), preds.size());
  for (size_t i = 0; i < gts.size(); ++i) {
    for (size_t j = 0; j < preds.size(); ++j) {
      cost(i, j) = individual_pair_cost(gts[i], preds[j], w);
    }
  }
  return cost;
}

Assignment match_groups(std::span<const GroundTruthGroup> gts,
                        std::span<const GroupPrediction> preds,
                        const GroupCostWeights& w, int M) {
  if (gts.empty()) return {};
  if (gts.size() > preds.size()) {
    throw std::invalid_argument("match_groups: more ground-truth groups than predictions");
  }
  return solve_assignment(group_cost_matrix(gts, preds, w, M));
}

Assignment match_individuals(std::span<const GroundTruthPerson> gts,
                             std::span<const IndividualPrediction> preds,
                             const IndividualCostWeights& w) {
  if (gts.empty()) return {};
  if (gts.size() > preds.size()) {
    throw std::invalid_argument("match_individuals: more annotated persons than predictions");
  }
  return solve_assignment(individual_cost_matrix(gts, preds, w));
}

}  // namespace sgar
