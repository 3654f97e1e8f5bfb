#include "sgar/train.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sgar/losses.hpp"
#include "sgar/matching.hpp"

namespace sgar {

namespace {

constexpr double kOrderSigma = 0.02;
constexpr int kOrderTrials = 1000;
constexpr std::uint64_t kOrderSeed = 1234;

}  // namespace

TrainConfig::TrainConfig() {
  hp.N_q = 16;
  hp.M = 6;
  hp.N_v = 4;
  hp.N_a = 4;
  hp.D_tok = 16;
  hp.D_emb = 64;
}

void to_json(json& j, const SynthConfig& cfg) {
  j = json{{"n_groups_range", {cfg.n_groups_min, cfg.n_groups_max}},
           {"group_size_range", {cfg.size_min, cfg.size_max}},
           {"n_distractors", cfg.n_distractors},
           {"n_background", cfg.n_background},
           {"N_v", cfg.N_v},
           {"N_a", cfg.N_a},
           {"D_tok", cfg.D_tok},
           {"M", cfg.M},
           {"noise_sigma", cfg.noise_sigma}};
}

void from_json(const json& j, SynthConfig& cfg) {
  if (j.contains("n_groups_range")) {
    cfg.n_groups_min = j["n_groups_range"].at(0).get<int>();
    cfg.n_groups_max = j["n_groups_range"].at(1).get<int>();
  }
  if (j.contains("group_size_range")) {
    cfg.size_min = j["group_size_range"].at(0).get<int>();
    cfg.size_max = j["group_size_range"].at(1).get<int>();
  }
  cfg.n_distractors = j.value("n_distractors", cfg.n_distractors);
  cfg.n_background = j.value("n_background", cfg.n_background);
  cfg.N_v = j.value("N_v", cfg.N_v);
  cfg.N_a = j.value("N_a", cfg.N_a);
  cfg.D_tok = j.value("D_tok", cfg.D_tok);
  cfg.M = j.value("M", cfg.M);
  cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
}

void to_json(json& j, const TrainConfig& cfg) {
  j = json{{"steps", cfg.steps},
           {"batch_size", cfg.batch_size},
           {"lr", cfg.lr},
           {"lr_decay_step", cfg.lr_decay_step},
           {"lr_decay_factor", cfg.lr_decay_factor},
           {"weight_decay", cfg.weight_decay},
           {"seed", cfg.seed},
           {"normalize_lu", cfg.normalize_lu},
           {"n_scenes", cfg.n_scenes},
           {"split_ratio", cfg.split_ratio},
           {"hyperparams", cfg.hp},
           {"synth", cfg.synth}};
}

void from_json(const json& j, TrainConfig& cfg) {
  cfg.steps = j.value("steps", cfg.steps);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.lr_decay_step = j.value("lr_decay_step", cfg.lr_decay_step);
  cfg.lr_decay_factor = j.value("lr_decay_factor", cfg.lr_decay_factor);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.normalize_lu = j.value("normalize_lu", cfg.normalize_lu);
  cfg.n_scenes = j.value("n_scenes", cfg.n_scenes);
  cfg.split_ratio = j.value("split_ratio", cfg.split_ratio);
  if (j.contains("hyperparams")) j.at("hyperparams").get_to(cfg.hp);
  if (j.contains("synth")) j.at("synth").get_to(cfg.synth);
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (cfg.steps < 0) throw std::invalid_argument("train config: steps must be >= 0");
  if (cfg.hp.N_v != cfg.synth.N_v || cfg.hp.N_a != cfg.synth.N_a ||
      cfg.hp.D_tok != cfg.synth.D_tok || cfg.hp.M != cfg.synth.M) {
    throw std::invalid_argument(
        "train config: hyperparams and generator disagree on N_v/N_a/D_tok/M");
  }
  const int max_persons =
      cfg.synth.n_groups_max * cfg.synth.size_max + cfg.synth.n_distractors;
  if (max_persons > cfg.hp.N_q || cfg.synth.n_groups_max > cfg.hp.N_q) {
    throw std::invalid_argument(
        "train config: query budget N_q too small for the largest generated scene");
  }
}

TrainerState init_trainer(const TrainConfig& cfg) {
  validate_train_config(cfg);
  TrainerState st;
  st.params = ModelTensors::random_init(cfg.hp, cfg.seed);
  st.adam = AdamState::init(cfg.hp);
  st.rng.seed(cfg.seed + 1);
  st.step = 0;
  return st;
}

std::pair<std::vector<Scene>, std::vector<Scene>> default_splits(const TrainConfig& cfg) {
  std::mt19937_64 rng(cfg.seed + 2);
  return generate_split(rng, cfg.synth, cfg.n_scenes, cfg.split_ratio);
}

void train_steps(const TrainConfig& cfg, std::span<const Scene> data,
                 TrainerState& state, int n_steps, std::vector<StepStats>* history) {
  if (data.empty()) {
    throw std::invalid_argument("train_steps: empty dataset");
  }
  const GroupCostWeights gw = group_weights(cfg.hp);
  const IndividualCostWeights iw = individual_weights(cfg.hp);
  std::uniform_int_distribution<size_t> pick(0, data.size() - 1);

  for (int s = 0; s < n_steps; ++s) {
    const double lr =
        cfg.lr * (state.step >= cfg.lr_decay_step ? cfg.lr_decay_factor : 1.0);

    GradientBuffer grads = ModelTensors::zeros(cfg.hp);
    StepStats st;
    st.step = state.step;

    for (int b = 0; b < cfg.batch_size; ++b) {
      const Scene& scene = data[pick(state.rng)];
      const ForwardCache cache =
          forward_scene(state.params, tokens_matrix(scene, cfg.hp.D_tok));
      const auto gpreds = group_predictions(cache);
      const auto ipreds = individual_predictions(cache);

      const Assignment ga = match_groups(scene.groups, gpreds, gw, cfg.hp.M);
      const Assignment ia = match_individuals(scene.persons, ipreds, iw);
      const LossBreakdown gl =
          group_loss(scene.groups, gpreds, ga, cfg.hp, cfg.normalize_lu);
      const LossBreakdown il = individual_loss(scene.persons, ipreds, ia, cfg.hp);

      backward(state.params, cache, sum(gl.grads, il.grads), grads);

      st.l_v += gl.l_v;
      st.l_s += gl.l_s;
      st.l_u += gl.l_u;
      st.l_c += il.l_c;
      st.l_b += il.l_b;
      st.l_o += il.l_o;
      st.l_a += il.l_a;
      st.total += gl.total + il.total;
    }

    const double inv_b = 1.0 / static_cast<double>(cfg.batch_size);
    for (auto& r : grads.tensor_refs()) {
      for (Eigen::Index i = 0; i < r.size; ++i) r.data[i] *= inv_b;
    }
    st.l_v *= inv_b;
    st.l_s *= inv_b;
    st.l_u *= inv_b;
    st.l_c *= inv_b;
    st.l_b *= inv_b;
    st.l_o *= inv_b;
    st.l_a *= inv_b;
    st.total *= inv_b;

    if (!std::isfinite(st.total)) {
      throw std::runtime_error("train_steps: loss diverged at step " +
                               std::to_string(state.step));
    }
    if (history) history->push_back(st);

    optimizer_step(state.params, grads, state.adam, lr, cfg.weight_decay);
    ++state.step;
  }
}

TrainResult train(const TrainConfig& cfg, std::span<const Scene> data,
                  const ModelParams* init) {
  TrainerState st = init_trainer(cfg);
  if (init != nullptr) st.params = *init;
  TrainResult out;
  out.history.reserve(cfg.steps);
  train_steps(cfg, data, st, cfg.steps, &out.history);
  out.params = std::move(st.params);
  return out;
}

SceneResult infer_scene(const ModelParams& params, const HyperParams& hp,
                        const Scene& scene) {
  SceneResult r;
  r.scene = scene;
  const ForwardCache cache = forward_scene(params, tokens_matrix(scene, hp.D_tok));
  r.group_preds = group_predictions(cache);
  r.individual_preds = individual_predictions(cache);
  r.memberships.reserve(r.group_preds.size());
  for (size_t q = 0; q < r.group_preds.size(); ++q) {
    GroupMembership m = identify_members(r.group_preds[q], r.individual_preds, hp.M);
    m.group_index = static_cast<int>(q);
    r.memberships.push_back(std::move(m));
  }
  return r;
}

void to_json(json& j, const EvalReport& r) {
  j = json{{"accuracy", r.accuracy},
           {"identification_accuracy", r.identification_accuracy},
           {"map", r.map},
           {"per_class", r.per_class},
           {"decoded_size_accuracy", r.decoded_size_accuracy},
           {"order_ratios", {{"asc_x", r.order_ratio_asc_x}, {"asc_y", r.order_ratio_asc_y}}}};
}

EvalReport evaluate(const ModelParams& params, const HyperParams& hp,
                    std::span<const Scene> data) {
  std::vector<SceneResult> results;
  results.reserve(data.size());
  for (const auto& scene : data) results.push_back(infer_scene(params, hp, scene));

  EvalReport rep;
  rep.accuracy = group_activity_accuracy(results);
  rep.identification_accuracy = group_identification_accuracy(results);
  const MapResult m = social_group_map(results);
  rep.map = m.map;
  rep.per_class = m.per_class;

  const GroupCostWeights gw = group_weights(hp);
  long long n_groups = 0, n_exact = 0;
  for (const auto& r : results) {
    if (r.scene.groups.empty()) continue;
    const Assignment a = match_groups(r.scene.groups, r.group_preds, gw, hp.M);
    for (size_t i = 0; i < r.scene.groups.size(); ++i) {
      const auto& pred = r.group_preds[a.col_for_row[i]];
      if (decode_group_size(pred.size_norm, hp.M) == r.scene.groups[i].size) ++n_exact;
    }
    n_groups += static_cast<long long>(r.scene.groups.size());
  }
  rep.decoded_size_accuracy =
      n_groups > 0 ? static_cast<double>(n_exact) / static_cast<double>(n_groups) : 0.0;

  rep.order_ratio_asc_x =
      order_change_ratio(data, PointOrder::AscX, kOrderSigma, kOrderTrials, kOrderSeed);
  rep.order_ratio_asc_y =
      order_change_ratio(data, PointOrder::AscY, kOrderSigma, kOrderTrials, kOrderSeed);
  return rep;
}

void save_trainer(const std::string& path, const TrainerState& state,
                  const HyperParams& hp) {
  std::ostringstream rng_state;
  rng_state << state.rng;
  save_checkpoint(path, state.params, hp, state.step, &state.adam, rng_state.str());
}

TrainerState load_trainer(const std::string& path, HyperParams* hp_out) {
  Checkpoint ck = load_checkpoint(path);
  TrainerState st;
  st.params = std::move(ck.params);
  st.adam = ck.adam ? std::move(*ck.adam) : AdamState::init(ck.hp);
  st.step = ck.step;
  if (!ck.rng_state.empty()) {
    std::istringstream in(ck.rng_state);
    in >> st.rng;
    if (!in) {
      throw std::runtime_error("load_trainer: '" + path + "' has a corrupt RNG state");
    }
  }
  if (hp_out != nullptr) *hp_out = ck.hp;
  return st;
}

}  // namespace sgar
