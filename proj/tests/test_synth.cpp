#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "sgar/json_io.hpp"
#include "sgar/synth.hpp"

using namespace sgar;

namespace {

bool scenes_identical(const Scene& a, const Scene& b) {
  json ja = a, jb = b;
  return ja.dump() == jb.dump();
}

}  // namespace

TEST_CASE("generate_scene with no groups leaves only distractors") {
  SynthConfig cfg;
  cfg.n_groups_min = 0;
  cfg.n_groups_max = 0;
  cfg.n_distractors = 3;
  std::mt19937_64 rng(70);
  Scene s = generate_scene(rng, cfg);
  CHECK(s.groups.empty());
  CHECK(s.persons.size() == 3);
  CHECK(s.tokens.size() == s.persons.size() + cfg.n_background);
}

TEST_CASE("a three-member group sits on one row with sorted points") {
  SynthConfig cfg;
  cfg.size_min = 3;
  cfg.size_max = 3;
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    Scene s = generate_scene(rng, cfg);
    REQUIRE(s.groups.size() == 1);
    const auto& g = s.groups[0];
    REQUIRE(g.size == 3);
    REQUIRE(g.member_indices.size() == 3);

    double lo = 1.0, hi = 0.0;
    for (int idx : g.member_indices) {
      lo = std::min(lo, s.persons[idx].box.cy);
      hi = std::max(hi, s.persons[idx].box.cy);
    }
    CHECK(hi - lo <= 2.0 * kRowJitter + 1e-12);

    for (size_t k = 0; k + 1 < g.member_points.size(); ++k) {
      CHECK(std::make_pair(g.member_points[k].x, g.member_points[k].y) <=
            std::make_pair(g.member_points[k + 1].x, g.member_points[k + 1].y));
    }
  }
}

TEST_CASE("generation is deterministic per seed") {
  SynthConfig cfg;
  std::mt19937_64 a(72), b(72);
  for (int i = 0; i < 10; ++i) {
    CHECK(scenes_identical(generate_scene(a, cfg), generate_scene(b, cfg)));
  }
  std::mt19937_64 c(73);
  Scene differs = generate_scene(c, cfg);
  std::mt19937_64 d(72);
  CHECK(!scenes_identical(differs, generate_scene(d, cfg)));
}

TEST_CASE("every generated scene passes the validator") {
  SynthConfig cfg;
  cfg.n_groups_min = 0;
  cfg.n_groups_max = 2;
  cfg.size_min = 1;
  cfg.size_max = 6;
  HyperParams hp = hyperparams_for(cfg, 16);
  std::mt19937_64 rng(74);
  for (int i = 0; i < 100; ++i) {
    Scene s = generate_scene(rng, cfg);
    auto violations = validate_scene(s, hp);
    for (const auto& v : violations) {
      INFO(v);
      CHECK(false);
    }
    CHECK(violations.empty());
  }
}

TEST_CASE("group sizes stay within the cap and points are box centers") {
  SynthConfig cfg;
  cfg.size_min = 2;
  cfg.size_max = 6;
  std::mt19937_64 rng(75);
  for (int i = 0; i < 50; ++i) {
    Scene s = generate_scene(rng, cfg);
    for (const auto& g : s.groups) {
      CHECK(g.size <= cfg.M);
      // Member points are the member box centers in sorted order.
      std::vector<Point2> centers;
      for (int idx : g.member_indices)
        centers.push_back({s.persons[idx].box.cx, s.persons[idx].box.cy});
      auto sorted = sort_member_points(centers, PointOrder::AscX);
      REQUIRE(sorted.size() == g.member_points.size());
      for (size_t k = 0; k < sorted.size(); ++k) {
        CHECK(g.member_points[k].x == sorted[k].x);
        CHECK(g.member_points[k].y == sorted[k].y);
      }
    }
  }
}

TEST_CASE("noise-free tokens spell out the annotation exactly") {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  std::mt19937_64 rng(76);
  Scene s = generate_scene(rng, cfg);
  REQUIRE(s.groups.size() == 1);
  const auto& g = s.groups[0];

  for (int idx : g.member_indices) {
    const auto& p = s.persons[idx];
    const Vector& t = s.tokens[idx];
    CHECK(t(0) == p.box.cx);
    CHECK(t(1) == p.box.cy);
    CHECK(t(2) == p.box.w);
    CHECK(t(3) == p.box.h);
    for (int k = 0; k < cfg.N_a; ++k) CHECK(t(4 + k) == p.action(k));
    for (int k = 0; k < cfg.N_v; ++k) CHECK(t(4 + cfg.N_a + k) == g.activity(k));
    CHECK(t(4 + cfg.N_a + cfg.N_v) ==
          static_cast<double>(g.size) / static_cast<double>(cfg.M));
    for (int k = 4 + cfg.N_a + cfg.N_v + 1; k < cfg.D_tok; ++k) CHECK(t(k) == 0.0);
  }
}

TEST_CASE("distractor tokens carry no activity signal") {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.n_distractors = 2;
  std::mt19937_64 rng(77);
  Scene s = generate_scene(rng, cfg);
  REQUIRE(s.groups.size() == 1);
  std::vector<char> in_group(s.persons.size(), 0);
  for (int idx : s.groups[0].member_indices) in_group[idx] = 1;
  int distractors = 0;
  for (size_t i = 0; i < s.persons.size(); ++i) {
    if (in_group[i]) continue;
    ++distractors;
    const Vector& t = s.tokens[i];
    for (int k = 0; k < cfg.N_v; ++k) CHECK(t(4 + cfg.N_a + k) == 0.0);
    CHECK(t(4 + cfg.N_a + cfg.N_v) == 0.0);
  }
  CHECK(distractors == cfg.n_distractors);
}

TEST_CASE("generate_split divides scenes by the ratio") {
  SynthConfig cfg;
  std::mt19937_64 rng(78);
  auto [train, eval] = generate_split(rng, cfg, 10, 0.8);
  CHECK(train.size() == 8);
  CHECK(eval.size() == 2);

  std::mt19937_64 again(78);
  auto [train2, eval2] = generate_split(again, cfg, 10, 0.8);
  REQUIRE(train2.size() == train.size());
  for (size_t i = 0; i < train.size(); ++i)
    CHECK(scenes_identical(train[i], train2[i]));

  std::mt19937_64 bad(79);
  CHECK_THROWS_AS(generate_split(bad, cfg, 1, 0.8), std::invalid_argument);
}

TEST_CASE("generate_dataset writes both splits as line-delimited JSON") {
  SynthConfig cfg;
  std::mt19937_64 rng(80);
  const std::string train_path = "sgar_test_train.jsonl";
  const std::string eval_path = "sgar_test_eval.jsonl";
  auto [train, eval] = generate_dataset(rng, cfg, 10, 0.8, train_path, eval_path);

  auto count_lines = [](const std::string& path) {
    std::ifstream f(path);
    std::string line;
    int n = 0;
    while (std::getline(f, line))
      if (!line.empty()) ++n;
    return n;
  };
  CHECK(count_lines(train_path) == 8);
  CHECK(count_lines(eval_path) == 2);

  auto train_back = read_dataset(train_path);
  REQUIRE(train_back.size() == train.size());
  for (size_t i = 0; i < train.size(); ++i)
    CHECK(scenes_identical(train[i], train_back[i]));

  std::remove(train_path.c_str());
  std::remove(eval_path.c_str());
}

TEST_CASE("read_dataset reports the path on failure") {
  CHECK_THROWS_WITH_AS(read_dataset("sgar_no_such_file.jsonl"),
                       doctest::Contains("sgar_no_such_file.jsonl"),
                       std::runtime_error);
}

TEST_CASE("hyperparams_for mirrors the generator dimensions") {
  SynthConfig cfg;
  cfg.N_v = 5;
  cfg.N_a = 3;
  cfg.D_tok = 14;
  cfg.M = 4;
  HyperParams hp = hyperparams_for(cfg, 12, 24);
  CHECK(hp.N_v == 5);
  CHECK(hp.N_a == 3);
  CHECK(hp.D_tok == 14);
  CHECK(hp.M == 4);
  CHECK(hp.N_q == 12);
  CHECK(hp.D_emb == 24);
}
