#pragma once

#include <random>
#include <vector>

#include "sgar/types.hpp"

namespace sgar::testing {

inline Vector one_hot(int n, int k) {
  Vector v = Vector::Zero(n);
  v(k) = 1.0;
  return v;
}

inline Vector random_probs(std::mt19937_64& rng, int n, double lo = 0.05,
                           double hi = 0.95) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

inline Point2 random_point(std::mt19937_64& rng, double lo = 0.05, double hi = 0.95) {
  std::uniform_real_distribution<double> d(lo, hi);
  return {d(rng), d(rng)};
}

inline Box random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(0.15, 0.85);
  std::uniform_real_distribution<double> s(0.05, 0.25);
  return {c(rng), c(rng), s(rng), s(rng)};
}

inline GroupPrediction random_group_pred(std::mt19937_64& rng, const HyperParams& hp) {
  GroupPrediction p;
  p.activity_probs = random_probs(rng, hp.N_v);
  p.size_norm = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
  p.member_points.resize(hp.M);
  for (auto& pt : p.member_points) pt = random_point(rng);
  return p;
}

inline IndividualPrediction random_individual_pred(std::mt19937_64& rng,
                                                   const HyperParams& hp) {
  IndividualPrediction p;
  p.score = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
  p.box = random_box(rng);
  p.action_probs = random_probs(rng, hp.N_a);
  return p;
}

inline GroundTruthGroup random_group(std::mt19937_64& rng, const HyperParams& hp,
                                     int size) {
  GroundTruthGroup g;
  g.activity = one_hot(hp.N_v, std::uniform_int_distribution<int>(0, hp.N_v - 1)(rng));
  g.size = size;
  std::vector<Point2> pts(size);
  for (auto& pt : pts) pt = random_point(rng);
  g.member_points = sort_member_points(pts, PointOrder::AscX);
  for (int i = 0; i < size; ++i) g.member_indices.push_back(i);
  return g;
}

inline GroundTruthPerson random_person(std::mt19937_64& rng, const HyperParams& hp) {
  GroundTruthPerson p;
  p.box = random_box(rng);
  p.action = one_hot(hp.N_a, std::uniform_int_distribution<int>(0, hp.N_a - 1)(rng));
  return p;
}

}  // namespace sgar::testing
