#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sgar/costs.hpp"

using namespace sgar;
using namespace sgar::testing;

TEST_CASE("activity_cost spans perfect agreement to total disagreement") {
  Vector v = one_hot(8, 3);
  CHECK(activity_cost(v, v) == doctest::Approx(-1.0).epsilon(1e-12));
  Vector flipped = Vector::Ones(8) - v;
  CHECK(activity_cost(v, flipped) == doctest::Approx(0.0).epsilon(1e-12));

  Vector v4 = one_hot(4, 0);
  Vector half = Vector::Constant(4, 0.5);
  CHECK(activity_cost(v4, half) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("activity_cost stays in range and is complement-symmetric") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng() % 7);
    Vector v = one_hot(n, static_cast<int>(rng() % n));
    Vector p = random_probs(rng, n);
    double c = activity_cost(v, p);
    CHECK(c >= -1.0);
    CHECK(c <= 0.0);
    Vector vc = Vector::Ones(n) - v;
    Vector pc = Vector::Ones(n) - p;
    CHECK(activity_cost(vc, pc) == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("activity_cost rejects mismatched lengths") {
  CHECK_THROWS_AS(activity_cost(Vector::Zero(3), Vector::Zero(4)), std::invalid_argument);
}

TEST_CASE("size_cost is the absolute gap between normalized sizes") {
  CHECK(size_cost(0.25, 0.25) == 0.0);
  CHECK(size_cost(0.25, 0.30) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(size_cost(0.0, 1.0) == 1.0);
  CHECK(size_cost(0.3, 0.7) == size_cost(0.7, 0.3));
}

TEST_CASE("points_cost averages L1 gaps over the ground-truth prefix") {
  std::vector<Point2> gt{{0.1, 0.2}, {0.3, 0.4}};
  std::vector<Point2> pred{{0.2, 0.2}, {0.3, 0.1}, {0.9, 0.9}};
  CHECK(points_cost(gt, pred) == doctest::Approx(0.2).epsilon(1e-12));

  std::vector<Point2> same{{0.1, 0.2}, {0.3, 0.4}, {0.8, 0.8}};
  CHECK(points_cost(gt, same) == 0.0);

  std::vector<Point2> origin{{0.0, 0.0}};
  std::vector<Point2> corner{{1.0, 1.0}};
  CHECK(points_cost(origin, corner) == 2.0);
}

TEST_CASE("points_cost rejects empty or oversized ground truth") {
  std::vector<Point2> pred{{0.5, 0.5}};
  CHECK_THROWS_AS(points_cost({}, pred), std::invalid_argument);
  std::vector<Point2> gt{{0.1, 0.1}, {0.2, 0.2}};
  CHECK_THROWS_AS(points_cost(gt, pred), std::invalid_argument);
}

TEST_CASE("points_cost is translation-covariant") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    int s = 1 + static_cast<int>(rng() % 4);
    int m = s + static_cast<int>(rng() % 3);
    std::vector<Point2> gt(s), pred(m);
    for (auto& p : gt) p = random_point(rng, 0.2, 0.6);
    for (auto& p : pred) p = random_point(rng, 0.2, 0.6);
    double base = points_cost(gt, pred);
    const double dx = 0.07, dy = -0.11;
    for (auto& p : gt) {
      p.x += dx;
      p.y += dy;
    }
    for (int k = 0; k < s; ++k) {
      pred[k].x += dx;
      pred[k].y += dy;
    }
    CHECK(points_cost(gt, pred) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("group_pair_cost composes its three terms") {
  HyperParams hp;
  hp.N_v = 4;
  hp.M = 12;
  GroupCostWeights w = group_weights(hp);

  GroundTruthGroup gt;
  gt.activity = one_hot(4, 1);
  gt.size = 3;
  gt.member_points = {{0.2, 0.5}, {0.4, 0.5}, {0.6, 0.5}};

  GroupPrediction perfect;
  perfect.activity_probs = gt.activity;
  perfect.size_norm = 3.0 / 12.0;
  perfect.member_points.assign(12, Point2{0.9, 0.9});
  for (int k = 0; k < 3; ++k) perfect.member_points[k] = gt.member_points[k];
  CHECK(group_pair_cost(gt, perfect, w, hp.M) == doctest::Approx(-2.0).epsilon(1e-12));

  // Worst case: flipped activity, size off by the full unit range, every
  // matched point at the opposite corner (L1 gap 2 each).
  GroundTruthGroup far_gt;
  far_gt.activity = one_hot(4, 1);
  far_gt.size = 12;
  far_gt.member_points.assign(12, Point2{0.0, 0.0});
  GroupPrediction worst;
  worst.activity_probs = Vector::Ones(4) - far_gt.activity;
  worst.size_norm = 0.0;
  worst.member_points.assign(12, Point2{1.0, 1.0});
  GroundTruthGroup zero_size_gt = far_gt;
  // size 12 gives s = 1; prediction 0 has gap 1, and each point adds L1 2.
  CHECK(group_pair_cost(zero_size_gt, worst, w, hp.M) ==
        doctest::Approx(0.0 + 1.0 * 1.0 + 5.0 * 2.0).epsilon(1e-12));

  GroupCostWeights zero{0.0, 0.0, 0.0};
  CHECK(group_pair_cost(gt, perfect, zero, hp.M) == 0.0);
  CHECK(group_pair_cost(zero_size_gt, worst, zero, hp.M) == 0.0);
}

TEST_CASE("iou covers identical, disjoint, and partial overlap") {
  Box a{0.5, 0.5, 0.2, 0.1};
  CHECK(iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  Box b{0.1, 0.1, 0.05, 0.05};
  Box c{0.9, 0.9, 0.05, 0.05};
  CHECK(iou(b, c) == 0.0);

  Box left{0.5, 0.5, 1.0, 1.0};
  Box right{1.0, 0.5, 1.0, 1.0};
  CHECK(iou(left, right) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("giou covers identical, shifted, and abutting boxes") {
  Box a{0.5, 0.5, 0.2, 0.1};
  CHECK(giou(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  // Corners [0,1]x[0,1] and [0.5,1.5]x[0,1]: the enclosure equals the
  // union, so giou equals iou = 1/3.
  Box left{0.5, 0.5, 1.0, 1.0};
  Box right{1.0, 0.5, 1.0, 1.0};
  CHECK(giou(left, right) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Box unit_a{0.5, 0.5, 1.0, 1.0};
  Box unit_b{1.5, 0.5, 1.0, 1.0};
  CHECK(giou(unit_a, unit_b) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("giou is symmetric and never exceeds iou") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    Box a = random_box(rng);
    Box b = random_box(rng);
    double g = giou(a, b);
    CHECK(g == doctest::Approx(giou(b, a)).epsilon(1e-12));
    CHECK(g <= iou(a, b) + 1e-12);
    CHECK(g >= -1.0);
    CHECK(g <= 1.0);
  }
}

TEST_CASE("giou_with_grad matches finite differences away from branch switches") {
  std::mt19937_64 rng(24);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 100) {
    Box gt = random_box(rng);
    Box pred = random_box(rng);
    // Keep a clear margin from every min/max branch switch so the central
    // difference samples a single smooth piece.
    auto margin_ok = [&]() {
      auto cg = [&](const Box& b) {
        return std::array<double, 4>{b.cx - 0.5 * b.w, b.cy - 0.5 * b.h,
                                     b.cx + 0.5 * b.w, b.cy + 0.5 * b.h};
      };
      auto g = cg(gt), p = cg(pred);
      double m = 1e-3;
      if (std::abs(g[0] - p[0]) < m || std::abs(g[1] - p[1]) < m ||
          std::abs(g[2] - p[2]) < m || std::abs(g[3] - p[3]) < m)
        return false;
      double ox = std::min(g[2], p[2]) - std::max(g[0], p[0]);
      double oy = std::min(g[3], p[3]) - std::max(g[1], p[1]);
      return std::abs(ox) > m && std::abs(oy) > m;
    };
    if (!margin_ok()) continue;
    ++checked;

    auto shifted = [](Box b, int c, double d) {
      switch (c) {
        case 0: b.cx += d; break;
        case 1: b.cy += d; break;
        case 2: b.w += d; break;
        default: b.h += d; break;
      }
      return b;
    };

    GiouGrad gg = giou_with_grad(gt, pred);
    CHECK(gg.value == doctest::Approx(giou(gt, pred)).epsilon(1e-12));
    for (int c = 0; c < 4; ++c) {
      double fd = (giou(gt, shifted(pred, c, h)) - giou(gt, shifted(pred, c, -h))) / (2 * h);
      double rel = std::abs(gg.d_pred(c) - fd) /
                   std::max({1.0, std::abs(gg.d_pred(c)), std::abs(fd)});
      CHECK(rel < 1e-5);
    }
  }
}

TEST_CASE("box_center returns the stored center") {
  CHECK(box_center({0.5, 0.5, 0.2, 0.1}) == Point2{0.5, 0.5});
  CHECK(box_center({0.1, 0.9, 0.05, 0.05}) == Point2{0.1, 0.9});

  // Corner-form round trip: rebuild the box from its corners and compare.
  Box b{0.37, 0.62, 0.11, 0.23};
  double x0 = b.cx - 0.5 * b.w, x1 = b.cx + 0.5 * b.w;
  double y0 = b.cy - 0.5 * b.h, y1 = b.cy + 0.5 * b.h;
  Box rebuilt{0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
  Point2 c = box_center(rebuilt);
  CHECK(c.x == doctest::Approx(b.cx).epsilon(1e-15));
  CHECK(c.y == doctest::Approx(b.cy).epsilon(1e-15));
}

TEST_CASE("individual_pair_cost composes score, box, overlap, and action terms") {
  HyperParams hp;
  hp.N_a = 4;
  IndividualCostWeights w = individual_weights(hp);

  GroundTruthPerson gt;
  gt.box = {0.4, 0.5, 0.2, 0.3};
  gt.action = one_hot(4, 2);

  IndividualPrediction perfect;
  perfect.score = 1.0;
  perfect.box = gt.box;
  perfect.action_probs = gt.action;
  CHECK(individual_pair_cost(gt, perfect, w) == doctest::Approx(-5.0).epsilon(1e-12));

  IndividualPrediction no_score = perfect;
  no_score.score = 0.0;
  CHECK(individual_pair_cost(gt, no_score, w) == doctest::Approx(-4.0).epsilon(1e-12));

  IndividualCostWeights zero{0.0, 0.0, 0.0, 0.0};
  CHECK(individual_pair_cost(gt, perfect, zero) == 0.0);
}

TEST_CASE("member_point_cost divides center distance by the clamped score") {
  IndividualPrediction at_center;
  at_center.score = 0.8;
  at_center.box = {0.5, 0.5, 0.2, 0.2};
  at_center.action_probs = Vector::Zero(4);
  CHECK(member_point_cost({0.5, 0.5}, at_center) == 0.0);

  IndividualPrediction off;
  off.score = 0.5;
  off.box = {0.5, 0.6, 0.2, 0.2};
  off.action_probs = Vector::Zero(4);
  CHECK(member_point_cost({0.2, 0.2}, off) == doctest::Approx(1.0).epsilon(1e-12));

  IndividualPrediction dead;
  dead.score = 0.0;
  dead.box = {0.5, 0.6, 0.2, 0.2};
  dead.action_probs = Vector::Zero(4);
  CHECK(member_point_cost({0.2, 0.2}, dead) == doctest::Approx(0.5 / 1e-4).epsilon(1e-12));
}

TEST_CASE("member_point_cost strictly decreases in the score") {
  Point2 pt{0.2, 0.3};
  IndividualPrediction ind;
  ind.box = {0.6, 0.7, 0.1, 0.1};
  ind.action_probs = Vector::Zero(4);
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    ind.score = s;
    double c = member_point_cost(pt, ind);
    CHECK(c < prev);
    prev = c;
  }
}
