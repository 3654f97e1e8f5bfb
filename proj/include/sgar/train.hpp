#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sgar/json_io.hpp"
#include "sgar/metrics.hpp"
#include "sgar/model.hpp"
#include "sgar/synth.hpp"

namespace sgar {

// Desk-scale defaults: a 16-query model over 6-person scenes trains end to
// end in about two minutes single-threaded and reaches >0.9 on every
// protocol. Larger dimensions remain reachable through the hyperparams
// block of a config file. The batch size and learning rate are sized for
// the regression heads: small batches or a cold rate leave box overlap
// short of the evaluation thresholds within the step budget.
struct TrainConfig {
  int steps = 3000;
  int batch_size = 128;
  double lr = 1e-2;
  int lr_decay_step = 2500;
  double lr_decay_factor = 0.1;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  bool normalize_lu = false;
  int n_scenes = 1920;      // generated when no dataset file is supplied
  double split_ratio = 0.8;
  HyperParams hp;
  SynthConfig synth;

  TrainConfig();
};

void to_json(json& j, const SynthConfig& cfg);
void from_json(const json& j, SynthConfig& cfg);
void to_json(json& j, const TrainConfig& cfg);
void from_json(const json& j, TrainConfig& cfg);

// Dimension cross-checks between hp, the generator, and the query budget.
void validate_train_config(const TrainConfig& cfg);

struct StepStats {
  int step = 0;
  double l_v = 0, l_s = 0, l_u = 0, l_c = 0, l_b = 0, l_o = 0, l_a = 0;
  double total = 0;
};

// Mutable training state; checkpointing captures all of it, so a resumed
// run continues bit-exactly.
struct TrainerState {
  ModelParams params;
  AdamState adam;
  std::mt19937_64 rng;  // batch sampling
  int step = 0;
};

TrainerState init_trainer(const TrainConfig& cfg);

// Dataset the default pipeline trains and evaluates on: cfg.n_scenes scenes
// from cfg.synth split by cfg.split_ratio, generator seeded at cfg.seed + 2
// (the parameter and batch streams use cfg.seed and cfg.seed + 1).
std::pair<std::vector<Scene>, std::vector<Scene>> default_splits(const TrainConfig& cfg);

// Runs n_steps optimizer steps from the current state. Per step: sample a
// batch, forward, match, loss, backward, average gradients over the batch,
// update. Stats are recorded at the pre-update parameters. Throws
// std::runtime_error with the step index when the loss stops being finite.
void train_steps(const TrainConfig& cfg, std::span<const Scene> data,
                 TrainerState& state, int n_steps,
                 std::vector<StepStats>* history = nullptr);

struct TrainResult {
  ModelParams params;
  std::vector<StepStats> history;
};

// Fresh (or given) parameters trained for cfg.steps on the dataset.
TrainResult train(const TrainConfig& cfg, std::span<const Scene> data,
                  const ModelParams* init = nullptr);

// Forward + member identification for one scene.
SceneResult infer_scene(const ModelParams& params, const HyperParams& hp,
                        const Scene& scene);

struct EvalReport {
  double accuracy = 0.0;
  double identification_accuracy = 0.0;
  double map = 0.0;
  Vector per_class;
  double decoded_size_accuracy = 0.0;
  double order_ratio_asc_x = 0.0;
  double order_ratio_asc_y = 0.0;
};
void to_json(json& j, const EvalReport& r);

// All evaluation protocols over a dataset: activity accuracy,
// identification accuracy, mean average precision, the fraction of
// ground-truth groups whose matched prediction decodes to the exact size,
// and the ordering-perturbation ratios (sigma 0.02, 1000 trials, fixed
// seed).
EvalReport evaluate(const ModelParams& params, const HyperParams& hp,
                    std::span<const Scene> data);

// Trainer checkpoint glue: parameters, optimizer moments, RNG state, step.
void save_trainer(const std::string& path, const TrainerState& state,
                  const HyperParams& hp);
TrainerState load_trainer(const std::string& path, HyperParams* hp_out = nullptr);

}  // namespace sgar
