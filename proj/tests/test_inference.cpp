#include <doctest.h>

#include <random>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "sgar/assignment.hpp"
#include "sgar/costs.hpp"
#include "sgar/inference.hpp"

using namespace sgar;
using namespace sgar::testing;

TEST_CASE("decode_group_size rounds to the nearest member count") {
  CHECK(decode_group_size(0.25, 12) == 3);
  CHECK(decode_group_size(0.26, 12) == 3);      // 3.12 rounds down
  CHECK(decode_group_size(0.29167, 12) == 4);   // 3.50004 rounds up
  CHECK(decode_group_size(0.75, 2) == 2);       // exact 1.5 tie goes away from zero
  CHECK(decode_group_size(0.625, 4) == 3);      // exact 2.5 tie goes away from zero
  CHECK(decode_group_size(0.0, 12) == 0);
  CHECK(decode_group_size(1.0, 12) == 12);
}

TEST_CASE("decode_group_size inverts the size fraction exactly") {
  for (int m = 1; m <= 12; ++m) {
    for (int s = 0; s <= m; ++s) {
      CHECK(decode_group_size(static_cast<double>(s) / m, m) == s);
    }
  }
}

namespace {

GroupPrediction group_with_points(std::vector<Point2> pts, int m, double size_norm) {
  GroupPrediction g;
  g.activity_probs = Vector::Constant(4, 0.5);
  g.size_norm = size_norm;
  pts.resize(static_cast<size_t>(m), Point2{0.5, 0.5});
  g.member_points = std::move(pts);
  return g;
}

IndividualPrediction individual_at(double cx, double cy, double score) {
  IndividualPrediction p;
  p.score = score;
  p.box = {cx, cy, 0.1, 0.1};
  p.action_probs = Vector::Constant(4, 0.5);
  return p;
}

}  // namespace

TEST_CASE("identify_members with decoded size zero is empty") {
  auto group = group_with_points({{0.5, 0.5}}, 6, 0.0);
  std::vector<IndividualPrediction> inds{individual_at(0.5, 0.5, 0.9)};
  auto mem = identify_members(group, inds, 6);
  CHECK(mem.decoded_size == 0);
  CHECK(mem.member_pred_indices.empty());
  CHECK(!mem.truncated);
}

TEST_CASE("identify_members picks the individual under the point") {
  auto group = group_with_points({{0.3, 0.4}}, 6, 1.0 / 6.0);
  std::vector<IndividualPrediction> inds{
      individual_at(0.9, 0.9, 0.9),
      individual_at(0.3, 0.4, 1.0),
      individual_at(0.1, 0.9, 0.9),
  };
  auto mem = identify_members(group, inds, 6);
  REQUIRE(mem.member_pred_indices.size() == 1);
  CHECK(mem.member_pred_indices[0] == 1);
  CHECK(mem.decoded_size == 1);
}

TEST_CASE("identify_members agrees with the enumeration oracle") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 6;
    int n_pts = 2;
    int n_inds = 3;
    std::vector<Point2> pts(n_pts);
    for (auto& p : pts) p = random_point(rng);
    auto group = group_with_points(pts, m, static_cast<double>(n_pts) / m);
    std::vector<IndividualPrediction> inds;
    for (int i = 0; i < n_inds; ++i) {
      Point2 c = random_point(rng);
      inds.push_back(individual_at(
          c.x, c.y, std::uniform_real_distribution<double>(0.2, 1.0)(rng)));
    }

    Matrix cost(n_pts, n_inds);
    for (int k = 0; k < n_pts; ++k)
      for (int j = 0; j < n_inds; ++j)
        cost(k, j) = member_point_cost(group.member_points[k], inds[j]);
    auto oracle = brute_force_assignment(cost);

    auto mem = identify_members(group, inds, m);
    REQUIRE(static_cast<int>(mem.member_pred_indices.size()) == n_pts);
    CHECK(mem.member_pred_indices == oracle.col_for_row);
  }
}

TEST_CASE("identify_members never assigns one individual twice") {
  std::mt19937_64 rng(52);
  HyperParams hp;
  hp.N_v = 4;
  hp.N_a = 4;
  hp.M = 6;
  for (int trial = 0; trial < 1000; ++trial) {
    GroupPrediction group = random_group_pred(rng, hp);
    int n_inds = 1 + static_cast<int>(rng() % 10);
    std::vector<IndividualPrediction> inds;
    for (int i = 0; i < n_inds; ++i) inds.push_back(random_individual_pred(rng, hp));

    auto mem = identify_members(group, inds, hp.M);
    std::set<int> unique(mem.member_pred_indices.begin(), mem.member_pred_indices.end());
    CHECK(unique.size() == mem.member_pred_indices.size());
    for (int idx : mem.member_pred_indices) {
      CHECK(idx >= 0);
      CHECK(idx < n_inds);
    }
    if (!mem.truncated) {
      CHECK(static_cast<int>(mem.member_pred_indices.size()) == mem.decoded_size);
    }
  }
}

TEST_CASE("identify_members truncates when the pool is too small") {
  auto group = group_with_points({{0.2, 0.2}, {0.5, 0.5}, {0.8, 0.8}}, 6, 0.5);
  std::vector<IndividualPrediction> inds{individual_at(0.3, 0.3, 0.9),
                                         individual_at(0.6, 0.6, 0.9)};
  auto mem = identify_members(group, inds, 6);
  CHECK(mem.decoded_size == 3);
  CHECK(mem.truncated);
  CHECK(mem.member_pred_indices.size() == 2);
  std::set<int> unique(mem.member_pred_indices.begin(), mem.member_pred_indices.end());
  CHECK(unique == std::set<int>{0, 1});
}

TEST_CASE("uniform geometric scaling leaves the selected members unchanged") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 6;
    int n_pts = 1 + static_cast<int>(rng() % 3);
    std::vector<Point2> pts(n_pts);
    for (auto& p : pts) p = random_point(rng);
    auto group = group_with_points(pts, m, static_cast<double>(n_pts) / m);
    std::vector<IndividualPrediction> inds;
    for (int i = 0; i < 5; ++i) {
      Point2 c = random_point(rng);
      inds.push_back(individual_at(
          c.x, c.y, std::uniform_real_distribution<double>(0.2, 1.0)(rng)));
    }
    auto base = identify_members(group, inds, m);

    // Shrinking every coordinate toward the origin scales all
    // point-to-center distances by the same factor.
    const double k = 0.5;
    auto scaled_group = group;
    for (auto& p : scaled_group.member_points) {
      p.x *= k;
      p.y *= k;
    }
    auto scaled_inds = inds;
    for (auto& ind : scaled_inds) {
      ind.box.cx *= k;
      ind.box.cy *= k;
    }
    auto scaled = identify_members(scaled_group, scaled_inds, m);
    CHECK(scaled.member_pred_indices == base.member_pred_indices);
  }
}

TEST_CASE("select_top_group reads the global probability maximum") {
  GroupPrediction a;
  a.activity_probs = Vector(2);
  a.activity_probs << 0.1, 0.9;
  a.size_norm = 0.5;
  std::vector<GroupPrediction> one{a};
  auto [qi, ci] = select_top_group(one);
  CHECK(qi == 0);
  CHECK(ci == 1);

  GroupPrediction b;
  b.activity_probs = Vector(2);
  b.activity_probs << 0.7, 0.2;
  GroupPrediction c;
  c.activity_probs = Vector(2);
  c.activity_probs << 0.3, 0.8;
  std::vector<GroupPrediction> two{b, c};
  auto [qi2, ci2] = select_top_group(two);
  CHECK(qi2 == 1);
  CHECK(ci2 == 1);
}

TEST_CASE("select_top_group breaks exact ties toward the lowest indices") {
  GroupPrediction a;
  a.activity_probs = Vector(3);
  a.activity_probs << 0.2, 0.8, 0.8;
  GroupPrediction b;
  b.activity_probs = Vector(3);
  b.activity_probs << 0.8, 0.1, 0.1;
  std::vector<GroupPrediction> preds{a, b};
  auto [qi, ci] = select_top_group(preds);
  CHECK(qi == 0);
  CHECK(ci == 1);
}

TEST_CASE("select_top_group rejects empty input") {
  CHECK_THROWS_AS(select_top_group({}), std::invalid_argument);
}
