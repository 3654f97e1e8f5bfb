#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sgar/assignment.hpp"
#include "sgar/costs.hpp"
#include "sgar/gradcheck.hpp"
#include "sgar/json_io.hpp"
#include "sgar/matching.hpp"
#include "sgar/metrics.hpp"
#include "sgar/model.hpp"
#include "sgar/synth.hpp"
#include "sgar/train.hpp"

namespace {

using namespace sgar;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Reports go to --out when given, stdout otherwise.
void emit_json(const json& j, const std::string& out_path) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
  }
}

struct SynthOpts {
  SynthConfig cfg;
  int scenes = 100;
  std::uint64_t seed = 0;
  std::string out;
  std::string config_path;
};

int run_synth(const SynthOpts& o) {
  std::mt19937_64 rng(o.seed);
  std::vector<Scene> scenes;
  scenes.reserve(o.scenes);
  for (int i = 0; i < o.scenes; ++i) scenes.push_back(generate_scene(rng, o.cfg));
  write_dataset(o.out, scenes);
  std::cout << "wrote " << scenes.size() << " scenes to " << o.out << "\n";
  return 0;
}

struct TrainOpts {
  std::string config_path;
  std::string data_path;
  std::string val_path;
  std::string ckpt_dir = ".";
  std::string log_path;
  std::string out;
  std::string resume_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int steps = 0;
  bool steps_given = false;
};

void write_history_csv(const std::string& path, const std::vector<StepStats>& hist) {
  std::ostringstream csv;
  csv << "step, l_v, l_s, l_u, l_c, l_b, l_o, l_a, total\n";
  csv << std::setprecision(10);
  for (const StepStats& s : hist) {
    csv << s.step << ", " << s.l_v << ", " << s.l_s << ", " << s.l_u << ", "
        << s.l_c << ", " << s.l_b << ", " << s.l_o << ", " << s.l_a << ", "
        << s.total << "\n";
  }
  write_text_file(path, csv.str());
}

bool same_hyperparams(const HyperParams& a, const HyperParams& b) {
  return a.N_v == b.N_v && a.N_a == b.N_a && a.N_q == b.N_q && a.M == b.M &&
         a.D_tok == b.D_tok && a.D_emb == b.D_emb;
}

int run_train(const TrainOpts& o) {
  TrainConfig cfg;
  if (!o.config_path.empty()) cfg = read_json_file(o.config_path).get<TrainConfig>();
  if (o.seed_given) cfg.seed = o.seed;
  if (o.steps_given) cfg.steps = o.steps;
  validate_train_config(cfg);

  namespace fs = std::filesystem;
  fs::create_directories(o.ckpt_dir);

  std::vector<Scene> train_data;
  std::vector<Scene> heldout;
  if (!o.data_path.empty()) {
    train_data = read_dataset(o.data_path);
    if (!o.val_path.empty()) heldout = read_dataset(o.val_path);
  } else {
    auto splits = default_splits(cfg);
    train_data = std::move(splits.first);
    heldout = std::move(splits.second);
    write_dataset((fs::path(o.ckpt_dir) / "train.jsonl").string(), train_data);
    write_dataset((fs::path(o.ckpt_dir) / "heldout.jsonl").string(), heldout);
  }

  TrainerState state;
  if (!o.resume_path.empty()) {
    HyperParams ck_hp;
    state = load_trainer(o.resume_path, &ck_hp);
    if (!same_hyperparams(ck_hp, cfg.hp)) {
      throw std::invalid_argument(
          "resume: checkpoint hyper-parameters differ from the config");
    }
  } else {
    state = init_trainer(cfg);
  }

  std::vector<StepStats> history;
  const int remaining = std::max(0, cfg.steps - state.step);
  train_steps(cfg, train_data, state, remaining, &history);

  const std::string ckpt_path =
      o.out.empty() ? (fs::path(o.ckpt_dir) / "final.ckpt").string() : o.out;
  save_trainer(ckpt_path, state, cfg.hp);
  if (!o.log_path.empty()) write_history_csv(o.log_path, history);

  std::cout << "trained to step " << state.step;
  if (!history.empty()) std::cout << ", last total loss " << history.back().total;
  std::cout << ", checkpoint " << ckpt_path << "\n";

  if (!heldout.empty()) {
    const EvalReport report = evaluate(state.params, cfg.hp, heldout);
    json j = report;
    std::cout << j.dump(2) << "\n";
  }
  return 0;
}

struct EvalOpts {
  std::string ckpt_path;
  std::string data_path;
  std::string out;
};

int run_eval(const EvalOpts& o) {
  const Checkpoint ck = load_checkpoint(o.ckpt_path);
  const std::vector<Scene> data = read_dataset(o.data_path);
  const EvalReport report = evaluate(ck.params, ck.hp, data);
  emit_json(json(report), o.out);
  return 0;
}

struct MatchOpts {
  std::string in_path;
  std::string out;
};

double box_l1(const Box& a, const Box& b) {
  return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy) + std::abs(a.w - b.w) +
         std::abs(a.h - b.h);
}

int run_match(const MatchOpts& o) {
  const json in = read_json_file(o.in_path);
  const Scene scene = in.at("scene").get<Scene>();
  const auto group_preds = in.value("group_preds", std::vector<GroupPrediction>{});
  const auto individual_preds =
      in.value("individual_preds", std::vector<IndividualPrediction>{});
  HyperParams hp;
  if (in.contains("hyperparams")) hp = in.at("hyperparams").get<HyperParams>();

  json out;
  {
    const Assignment a =
        match_groups(scene.groups, group_preds, group_weights(hp), hp.M);
    json pairs = json::array();
    for (std::size_t i = 0; i < scene.groups.size(); ++i) {
      const GroundTruthGroup& gt = scene.groups[i];
      const int j = a.col_for_row[i];
      const GroupPrediction& p = group_preds[j];
      pairs.push_back(json{
          {"gt", i},
          {"pred", j},
          {"cost", group_pair_cost(gt, p, group_weights(hp), hp.M)},
          {"activity", activity_cost(gt.activity, p.activity_probs)},
          {"size", size_cost(static_cast<double>(gt.size) / hp.M, p.size_norm)},
          {"points", points_cost(gt.member_points, p.member_points)},
      });
    }
    out["groups"] = json{{"total_cost", a.total_cost}, {"pairs", pairs}};
  }
  {
    const Assignment a =
        match_individuals(scene.persons, individual_preds, individual_weights(hp));
    json pairs = json::array();
    for (std::size_t i = 0; i < scene.persons.size(); ++i) {
      const GroundTruthPerson& gt = scene.persons[i];
      const int j = a.col_for_row[i];
      const IndividualPrediction& p = individual_preds[j];
      pairs.push_back(json{
          {"gt", i},
          {"pred", j},
          {"cost", individual_pair_cost(gt, p, individual_weights(hp))},
          {"score", p.score},
          {"box_l1", box_l1(gt.box, p.box)},
          {"giou", giou(gt.box, p.box)},
          {"action", activity_cost(gt.action, p.action_probs)},
      });
    }
    out["individuals"] = json{{"total_cost", a.total_cost}, {"pairs", pairs}};
  }
  emit_json(out, o.out);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  const GradCheckReport report = sgar::run_gradcheck(seed);
  for (const auto& e : report.entries) {
    std::cout << std::left << std::setw(12) << e.component << " "
              << std::scientific << std::setprecision(3) << e.max_rel_err
              << std::defaultfloat << "\n";
  }
  std::cout << "gradcheck " << (report.passed() ? "PASS" : "FAIL")
            << " (threshold " << report.threshold << ")\n";
  return report.passed() ? 0 : 1;
}

struct OrderOpts {
  std::string data_path;
  std::string config_path;
  std::string out;
  int scenes = 64;
  double sigma = 0.02;
  int trials = 1000;
  std::uint64_t seed = 0;
};

int run_order_analysis(const OrderOpts& o) {
  std::vector<Scene> scenes;
  if (!o.data_path.empty()) {
    scenes = read_dataset(o.data_path);
  } else {
    SynthConfig cfg;
    if (!o.config_path.empty()) cfg = read_json_file(o.config_path).get<SynthConfig>();
    std::mt19937_64 rng(o.seed);
    for (int i = 0; i < o.scenes; ++i) scenes.push_back(generate_scene(rng, cfg));
  }
  const double rx = order_change_ratio(scenes, PointOrder::AscX, o.sigma, o.trials, o.seed);
  const double ry = order_change_ratio(scenes, PointOrder::AscY, o.sigma, o.trials, o.seed);
  emit_json(json{{"asc_x", rx},
                 {"asc_y", ry},
                 {"sigma", o.sigma},
                 {"trials", o.trials},
                 {"scenes", scenes.size()}},
            o.out);
  return 0;
}

struct BenchOpts {
  int n = 300;
  int runs = 20;
  std::uint64_t seed = 0;
};

int run_bench(const BenchOpts& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> ms;
  ms.reserve(o.runs);
  double checksum = 0.0;  // keeps the solves observable
  for (int r = 0; r < o.runs; ++r) {
    Matrix cost(o.n, o.n);
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = u(rng);
    const auto t0 = std::chrono::steady_clock::now();
    const Assignment a = solve_assignment(cost);
    const auto t1 = std::chrono::steady_clock::now();
    checksum += a.total_cost;
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const double median = (o.runs % 2 == 1)
                            ? sorted[o.runs / 2]
                            : 0.5 * (sorted[o.runs / 2 - 1] + sorted[o.runs / 2]);
  double mean = 0.0;
  for (double v : ms) mean += v;
  mean /= static_cast<double>(o.runs);
  std::cout << std::fixed << std::setprecision(3) << "solve_assignment n=" << o.n
            << " runs=" << o.runs << ": min " << sorted.front() << " ms, median "
            << median << " ms, mean " << mean << " ms, max " << sorted.back()
            << " ms (cost checksum " << std::setprecision(6) << checksum << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"set-prediction toolkit for social group activity recognition"};
  app.require_subcommand(1);

  SynthOpts so;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene dataset");
  synth->add_option("--scenes", so.scenes, "number of scenes")->capture_default_str();
  synth->add_option("--seed", so.seed, "generator seed")->capture_default_str();
  synth->add_option("--out", so.out, "output dataset path (.jsonl)")->required();
  synth->add_option("--config", so.config_path, "generator config JSON file");
  auto* og_min = synth->add_option("--groups-min", so.cfg.n_groups_min, "min groups per scene");
  auto* og_max = synth->add_option("--groups-max", so.cfg.n_groups_max, "max groups per scene");
  auto* os_min = synth->add_option("--size-min", so.cfg.size_min, "min group size");
  auto* os_max = synth->add_option("--size-max", so.cfg.size_max, "max group size");
  auto* o_dis = synth->add_option("--distractors", so.cfg.n_distractors, "ungrouped persons");
  auto* o_bg = synth->add_option("--background", so.cfg.n_background, "pure-noise tokens");
  auto* o_nv = synth->add_option("--activities", so.cfg.N_v, "activity class count");
  auto* o_na = synth->add_option("--actions", so.cfg.N_a, "action class count");
  auto* o_dt = synth->add_option("--token-dim", so.cfg.D_tok, "token dimension");
  auto* o_m = synth->add_option("--max-size", so.cfg.M, "maximum group size M");
  auto* o_ns = synth->add_option("--noise", so.cfg.noise_sigma, "token noise sigma");
  for (auto* opt : {og_min, og_max, os_min, os_max, o_dis, o_bg, o_nv, o_na, o_dt, o_m, o_ns}) {
    opt->capture_default_str();
  }

  TrainOpts to;
  CLI::App* train_cmd = app.add_subcommand("train", "train the toy model");
  train_cmd->add_option("--config", to.config_path, "training config JSON file");
  train_cmd->add_option("--data", to.data_path, "training dataset (.jsonl); generated when omitted");
  train_cmd->add_option("--val-data", to.val_path, "held-out dataset for the post-training report");
  train_cmd->add_option("--ckpt-dir", to.ckpt_dir, "checkpoint directory")->capture_default_str();
  train_cmd->add_option("--log", to.log_path, "per-step loss log (CSV)");
  train_cmd->add_option("--out", to.out, "final checkpoint path (default <ckpt-dir>/final.ckpt)");
  train_cmd->add_option("--resume", to.resume_path, "checkpoint to resume from");
  auto* t_seed = train_cmd->add_option("--seed", to.seed, "overrides the config seed");
  auto* t_steps = train_cmd->add_option("--steps", to.steps, "overrides the config step count");

  EvalOpts eo;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", eo.ckpt_path, "checkpoint path")->required();
  eval_cmd->add_option("--data", eo.data_path, "dataset path (.jsonl)")->required();
  eval_cmd->add_option("--out", eo.out, "report path (stdout when omitted)");

  MatchOpts mo;
  CLI::App* match_cmd =
      app.add_subcommand("match", "match predictions to ground truth and print costs");
  match_cmd->add_option("--in", mo.in_path, "JSON file {scene, group_preds, individual_preds[, hyperparams]}")
      ->required();
  match_cmd->add_option("--out", mo.out, "report path (stdout when omitted)");

  std::uint64_t gc_seed = 0;
  CLI::App* gc_cmd =
      app.add_subcommand("gradcheck", "finite-difference check of every analytic gradient");
  gc_cmd->add_option("--seed", gc_seed, "sampling seed")->capture_default_str();

  OrderOpts oo;
  CLI::App* order_cmd = app.add_subcommand(
      "order-analysis", "member-point order stability under position noise");
  order_cmd->add_option("--data", oo.data_path, "dataset path (.jsonl); generated when omitted");
  order_cmd->add_option("--config", oo.config_path, "generator config JSON file");
  order_cmd->add_option("--scenes", oo.scenes, "scenes to generate")->capture_default_str();
  order_cmd->add_option("--sigma", oo.sigma, "noise std per coordinate")->capture_default_str();
  order_cmd->add_option("--trials", oo.trials, "perturbations per group")->capture_default_str();
  order_cmd->add_option("--seed", oo.seed, "generation and perturbation seed")->capture_default_str();
  order_cmd->add_option("--out", oo.out, "report path (stdout when omitted)");

  BenchOpts bo;
  CLI::App* bench_cmd = app.add_subcommand("bench", "assignment solver timing");
  bench_cmd->add_option("--n", bo.n, "matrix size")->capture_default_str();
  bench_cmd->add_option("--runs", bo.runs, "repetitions")->capture_default_str();
  bench_cmd->add_option("--seed", bo.seed, "matrix seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    if (synth->parsed()) {
      if (!so.config_path.empty()) {
        SynthConfig merged = read_json_file(so.config_path).get<SynthConfig>();
        if (og_min->count()) merged.n_groups_min = so.cfg.n_groups_min;
        if (og_max->count()) merged.n_groups_max = so.cfg.n_groups_max;
        if (os_min->count()) merged.size_min = so.cfg.size_min;
        if (os_max->count()) merged.size_max = so.cfg.size_max;
        if (o_dis->count()) merged.n_distractors = so.cfg.n_distractors;
        if (o_bg->count()) merged.n_background = so.cfg.n_background;
        if (o_nv->count()) merged.N_v = so.cfg.N_v;
        if (o_na->count()) merged.N_a = so.cfg.N_a;
        if (o_dt->count()) merged.D_tok = so.cfg.D_tok;
        if (o_m->count()) merged.M = so.cfg.M;
        if (o_ns->count()) merged.noise_sigma = so.cfg.noise_sigma;
        so.cfg = merged;
      }
      return run_synth(so);
    }
    if (train_cmd->parsed()) {
      to.seed_given = t_seed->count() > 0;
      to.steps_given = t_steps->count() > 0;
      return run_train(to);
    }
    if (eval_cmd->parsed()) return run_eval(eo);
    if (match_cmd->parsed()) return run_match(mo);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc_seed);
    if (order_cmd->parsed()) return run_order_analysis(oo);
    if (bench_cmd->parsed()) return run_bench(bo);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
