#include "sgar/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sgar/json_io.hpp"

namespace sgar {

namespace {

// Geometry constants. Member boxes are person-shaped (taller than wide);
// horizontal spacing keeps neighboring centers distinct while rows of
// different groups stay vertically separated.
constexpr double kBoxWMin = 0.09, kBoxWMax = 0.13;
constexpr double kBoxHMin = 0.12, kBoxHMax = 0.18;
constexpr double kSpacingMin = 0.105, kSpacingMax = 0.135;
constexpr double kMarginX = 0.08;
constexpr double kRowMinY = 0.15, kRowMaxY = 0.85;
constexpr double kRowSeparation = 0.24;
constexpr double kClearance = 0.09;  // min center distance for distractors
constexpr int kMaxRetries = 100;

void check_config(const SynthConfig& cfg) {
  if (cfg.size_min < 1 || cfg.size_max < cfg.size_min || cfg.size_max > cfg.M) {
    throw std::invalid_argument("generate_scene: group size range outside [1, M]");
  }
  if (cfg.n_groups_min < 0 || cfg.n_groups_max < cfg.n_groups_min) {
    throw std::invalid_argument("generate_scene: bad group count range");
  }
  if (cfg.D_tok < cfg.N_v + cfg.N_a + 5) {
    throw std::invalid_argument(
        "generate_scene: token dimension must be at least N_v + N_a + 5 "
        "(box, action, activity, size slots)");
  }
  if (cfg.N_v < 1 || cfg.N_a < 1) {
    throw std::invalid_argument("generate_scene: class counts must be positive");
  }
}

Vector one_hot(int n, int k) {
  Vector v = Vector::Zero(n);
  v(k) = 1.0;
  return v;
}

Vector person_token(const SynthConfig& cfg, const Box& box, const Vector& action,
                    const Vector& activity, double size_frac, std::mt19937_64& rng) {
  Vector t = Vector::Zero(cfg.D_tok);
  t(0) = box.cx;
  t(1) = box.cy;
  t(2) = box.w;
  t(3) = box.h;
  t.segment(4, cfg.N_a) = action;
  t.segment(4 + cfg.N_a, cfg.N_v) = activity;
  t(4 + cfg.N_a + cfg.N_v) = size_frac;
  if (cfg.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) += noise(rng);
  }
  return t;
}

}  // namespace

Scene generate_scene(std::mt19937_64& rng, const SynthConfig& cfg) {
  check_config(cfg);
  std::uniform_int_distribution<int> group_count(cfg.n_groups_min, cfg.n_groups_max);
  std::uniform_int_distribution<int> group_size(cfg.size_min, cfg.size_max);
  std::uniform_int_distribution<int> activity_class(0, cfg.N_v - 1);
  std::uniform_int_distribution<int> action_class(0, cfg.N_a - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  Scene scene;
  const int n_groups = group_count(rng);

  // Rows first: the vertical band of each group must stay clear of the
  // others so groups are visually distinct.
  std::vector<double> row_y;
  for (int g = 0; g < n_groups; ++g) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRetries && !placed; ++attempt) {
      const double y = uniform(kRowMinY, kRowMaxY);
      placed = std::all_of(row_y.begin(), row_y.end(), [y](double other) {
        return std::abs(y - other) >= kRowSeparation;
      });
      if (placed) row_y.push_back(y);
    }
    if (!placed) {
      throw std::runtime_error("generate_scene: infeasible group row placement after 100 retries");
    }
  }

  for (int g = 0; g < n_groups; ++g) {
    const int size = group_size(rng);
    const int cls = activity_class(rng);
    const double spacing = uniform(kSpacingMin, kSpacingMax);
    const double span = spacing * (size - 1);
    const double x0 = uniform(kMarginX, 1.0 - kMarginX - span);

    GroundTruthGroup group;
    group.activity = one_hot(cfg.N_v, cls);
    group.size = size;
    const double size_frac = static_cast<double>(size) / static_cast<double>(cfg.M);

    std::vector<Point2> points;
    for (int k = 0; k < size; ++k) {
      Box box;
      box.cx = x0 + spacing * k;
      box.cy = std::clamp(row_y[g] + uniform(-kRowJitter, kRowJitter), 0.0, 1.0);
      box.w = uniform(kBoxWMin, kBoxWMax);
      box.h = uniform(kBoxHMin, kBoxHMax);

      GroundTruthPerson person;
      person.box = box;
      person.action = one_hot(cfg.N_a, action_class(rng));
      group.member_indices.push_back(static_cast<int>(scene.persons.size()));
      scene.tokens.push_back(
          person_token(cfg, box, person.action, group.activity, size_frac, rng));
      scene.persons.push_back(std::move(person));
      points.push_back({box.cx, box.cy});
    }
    group.member_points = sort_member_points(points, PointOrder::AscX);
    scene.groups.push_back(std::move(group));
  }

  const Vector no_activity = Vector::Zero(cfg.N_v);
  for (int d = 0; d < cfg.n_distractors; ++d) {
    Box box;
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRetries && !placed; ++attempt) {
      box.cx = uniform(kMarginX, 1.0 - kMarginX);
      box.cy = uniform(kRowMinY, kRowMaxY);
      box.w = uniform(kBoxWMin, kBoxWMax);
      box.h = uniform(kBoxHMin, kBoxHMax);
      placed = std::all_of(scene.persons.begin(), scene.persons.end(),
                           [&box](const GroundTruthPerson& p) {
                             const double dx = p.box.cx - box.cx;
                             const double dy = p.box.cy - box.cy;
                             return std::sqrt(dx * dx + dy * dy) >= kClearance;
                           });
    }
    if (!placed) {
      throw std::runtime_error("generate_scene: infeasible distractor placement after 100 retries");
    }
    GroundTruthPerson person;
    person.box = box;
    person.action = one_hot(cfg.N_a, action_class(rng));
    scene.tokens.push_back(person_token(cfg, box, person.action, no_activity, 0.0, rng));
    scene.persons.push_back(std::move(person));
  }

  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
  for (int b = 0; b < cfg.n_background; ++b) {
    Vector t = Vector::Zero(cfg.D_tok);
    if (cfg.noise_sigma > 0.0) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = noise(rng);
    }
    scene.tokens.push_back(std::move(t));
  }

  return scene;
}

std::pair<std::vector<Scene>, std::vector<Scene>> generate_split(
    std::mt19937_64& rng, const SynthConfig& cfg, int n_scenes, double split_ratio) {
  if (n_scenes < 2) {
    throw std::invalid_argument("generate_split: need at least 2 scenes to split");
  }
  std::vector<Scene> all;
  all.reserve(n_scenes);
  for (int i = 0; i < n_scenes; ++i) all.push_back(generate_scene(rng, cfg));

  int n_train = static_cast<int>(std::lround(split_ratio * n_scenes));
  n_train = std::clamp(n_train, 1, n_scenes - 1);

  std::vector<Scene> train(all.begin(), all.begin() + n_train);
  std::vector<Scene> eval(all.begin() + n_train, all.end());
  return {std::move(train), std::move(eval)};
}

std::pair<std::vector<Scene>, std::vector<Scene>> generate_dataset(
    std::mt19937_64& rng, const SynthConfig& cfg, int n_scenes, double split_ratio,
    const std::string& train_path, const std::string& eval_path) {
  auto splits = generate_split(rng, cfg, n_scenes, split_ratio);
  write_dataset(train_path, splits.first);
  write_dataset(eval_path, splits.second);
  return splits;
}

HyperParams hyperparams_for(const SynthConfig& cfg, int n_queries, int d_emb) {
  HyperParams hp;
  hp.N_v = cfg.N_v;
  hp.N_a = cfg.N_a;
  hp.N_q = n_queries;
  hp.M = cfg.M;
  hp.D_tok = cfg.D_tok;
  hp.D_emb = d_emb;
  return hp;
}

}  // namespace sgar
