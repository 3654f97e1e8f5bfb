#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sgar/types.hpp"

namespace sgar {

// Scene generator settings. Members of a group stand side by side on a
// shared horizontal row; every person token spells out its own annotation
// (box, action, group activity, size fraction) plus Gaussian noise, so a
// small decoder can learn the task from the tokens alone.
struct SynthConfig {
  int n_groups_min = 1;
  int n_groups_max = 1;
  int size_min = 2;
  int size_max = 4;
  int n_distractors = 2;  // persons outside any group
  int n_background = 2;   // pure-noise tokens appended after the persons
  int N_v = 4;
  int N_a = 4;
  int D_tok = 16;
  int M = 6;
  double noise_sigma = 0.005;
};

// Vertical jitter applied to member centers within a group's row.
inline constexpr double kRowJitter = 0.01;

// Token layout: [box cx cy w h | action one-hot | activity one-hot | S/M]
// zero-padded to D_tok, then Gaussian noise on every component. Distractors
// carry zeros for activity and size; background tokens are pure noise.
// Requires D_tok >= N_v + N_a + 5 and size bounds within [1, M]; placement
// that cannot satisfy the spacing constraints after 100 retries is an
// error.
Scene generate_scene(std::mt19937_64& rng, const SynthConfig& cfg);

// n_scenes scenes split ratio / (1 - ratio) into disjoint train and eval
// sets. Requires n_scenes >= 2; both splits stay nonempty.
std::pair<std::vector<Scene>, std::vector<Scene>> generate_split(
    std::mt19937_64& rng, const SynthConfig& cfg, int n_scenes, double split_ratio);

// Same, additionally written as newline-delimited JSON to the two paths.
std::pair<std::vector<Scene>, std::vector<Scene>> generate_dataset(
    std::mt19937_64& rng, const SynthConfig& cfg, int n_scenes, double split_ratio,
    const std::string& train_path, const std::string& eval_path);

HyperParams hyperparams_for(const SynthConfig& cfg, int n_queries, int d_emb = 32);

}  // namespace sgar
