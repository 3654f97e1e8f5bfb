#include "sgar/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgar/costs.hpp"
#include "sgar/losses.hpp"
#include "sgar/matching.hpp"
#include "sgar/model.hpp"
#include "sgar/synth.hpp"

namespace sgar {

namespace {

constexpr double kStep = 1e-6;
// Sampled configurations must keep this distance from every non-smooth point
// (L1 sign flips, box corner coincidences); it dominates the FD step.
constexpr double kKinkMargin = 1e-4;

double rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) /
         std::max({1.0, std::abs(analytic), std::abs(fd)});
}

double check_focal(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> up(0.01, 0.99);
  std::bernoulli_distribution label(0.5);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double y = label(rng) ? 1.0 : 0.0;
    const double p = up(rng);
    const double fd =
        (focal_term(y, p + kStep).value - focal_term(y, p - kStep).value) /
        (2.0 * kStep);
    worst = std::max(worst, rel_err(focal_term(y, p).d_prob, fd));
  }
  return worst;
}

Box shift_box(Box b, int field, double d) {
  switch (field) {
    case 0: b.cx += d; break;
    case 1: b.cy += d; break;
    case 2: b.w += d; break;
    default: b.h += d; break;
  }
  return b;
}

// The overlap value switches branch where corresponding corners coincide or
// where the intersection width/height crosses zero.
bool giou_smooth_at(const Box& a, const Box& b) {
  const double ax0 = a.cx - 0.5 * a.w, ax1 = a.cx + 0.5 * a.w;
  const double ay0 = a.cy - 0.5 * a.h, ay1 = a.cy + 0.5 * a.h;
  const double bx0 = b.cx - 0.5 * b.w, bx1 = b.cx + 0.5 * b.w;
  const double by0 = b.cy - 0.5 * b.h, by1 = b.cy + 0.5 * b.h;
  const double m = kKinkMargin;
  if (std::abs(ax0 - bx0) < m || std::abs(ax1 - bx1) < m ||
      std::abs(ay0 - by0) < m || std::abs(ay1 - by1) < m) {
    return false;
  }
  const double iw = std::min(ax1, bx1) - std::max(ax0, bx0);
  const double ih = std::min(ay1, by1) - std::max(ay0, by0);
  return std::abs(iw) >= m && std::abs(ih) >= m;
}

double check_giou(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uc(0.2, 0.8);
  std::uniform_real_distribution<double> us(0.1, 0.5);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Box g, p;
    int attempts = 0;
    do {
      g = Box{uc(rng), uc(rng), us(rng), us(rng)};
      p = Box{uc(rng), uc(rng), us(rng), us(rng)};
      if (++attempts > 1000) {
        throw std::runtime_error("gradcheck: no smooth box pair found");
      }
    } while (!giou_smooth_at(g, p));
    const GiouGrad ag = giou_with_grad(g, p);
    for (int k = 0; k < 4; ++k) {
      const double fd = (giou(g, shift_box(p, k, kStep)) -
                         giou(g, shift_box(p, k, -kStep))) /
                        (2.0 * kStep);
      worst = std::max(worst, rel_err(ag.d_pred(k), fd));
    }
  }
  return worst;
}

HyperParams loss_check_hp() {
  HyperParams hp;
  hp.N_v = 3;
  hp.N_a = 3;
  hp.N_q = 4;
  hp.M = 3;
  return hp;
}

struct GroupScenario {
  std::vector<GroundTruthGroup> gts;
  std::vector<GroupPrediction> preds;
  Assignment assignment;
};

GroupScenario make_group_scenario(std::mt19937_64& rng, const HyperParams& hp) {
  std::uniform_real_distribution<double> uprob(0.05, 0.95);
  std::uniform_real_distribution<double> ucoord(0.0, 1.0);
  std::uniform_int_distribution<int> usize(1, hp.M);
  std::uniform_int_distribution<int> ucount(1, 2);
  std::uniform_int_distribution<int> uclass(0, hp.N_v - 1);
  for (int attempt = 0; attempt < 100; ++attempt) {
    GroupScenario sc;
    const int n_gt = ucount(rng);
    for (int g = 0; g < n_gt; ++g) {
      GroundTruthGroup gt;
      gt.activity = Vector::Zero(hp.N_v);
      gt.activity(uclass(rng)) = 1.0;
      gt.size = usize(rng);
      gt.member_indices.resize(gt.size);
      std::iota(gt.member_indices.begin(), gt.member_indices.end(), 0);
      for (int k = 0; k < gt.size; ++k) {
        gt.member_points.push_back(Point2{ucoord(rng), ucoord(rng)});
      }
      sc.gts.push_back(std::move(gt));
    }
    for (int q = 0; q < hp.N_q; ++q) {
      GroupPrediction p;
      p.activity_probs = Vector::Zero(hp.N_v);
      for (int c = 0; c < hp.N_v; ++c) p.activity_probs(c) = uprob(rng);
      p.size_norm = uprob(rng);
      for (int k = 0; k < hp.M; ++k) {
        p.member_points.push_back(Point2{ucoord(rng), ucoord(rng)});
      }
      sc.preds.push_back(std::move(p));
    }
    sc.assignment = match_groups(sc.gts, sc.preds, group_weights(hp), hp.M);

    bool smooth = true;
    for (std::size_t g = 0; g < sc.gts.size(); ++g) {
      const auto& gt = sc.gts[g];
      const auto& p = sc.preds[sc.assignment.col_for_row[g]];
      if (std::abs(static_cast<double>(gt.size) / hp.M - p.size_norm) <
          kKinkMargin) {
        smooth = false;
      }
      for (int k = 0; k < gt.size; ++k) {
        if (std::abs(gt.member_points[k].x - p.member_points[k].x) < kKinkMargin ||
            std::abs(gt.member_points[k].y - p.member_points[k].y) < kKinkMargin) {
          smooth = false;
        }
      }
    }
    if (smooth) return sc;
  }
  throw std::runtime_error("gradcheck: no smooth group scenario found");
}

// Size-gap gradients through the matched-pair L1 term, with the assignment
// held fixed across the perturbation.
double check_l1(std::mt19937_64& rng) {
  const HyperParams hp = loss_check_hp();
  double worst = 0.0;
  for (int t = 0; t < 60; ++t) {
    const bool norm = (t % 2) == 1;
    const GroupScenario sc = make_group_scenario(rng, hp);
    const LossBreakdown base =
        group_loss(sc.gts, sc.preds, sc.assignment, hp, norm);
    for (int q = 0; q < hp.N_q; ++q) {
      auto hi = sc.preds;
      auto lo = sc.preds;
      hi[q].size_norm += kStep;
      lo[q].size_norm -= kStep;
      const double fd =
          (group_loss(sc.gts, hi, sc.assignment, hp, norm).total -
           group_loss(sc.gts, lo, sc.assignment, hp, norm).total) /
          (2.0 * kStep);
      worst = std::max(worst, rel_err(base.grads.d_size(q), fd));
    }
  }
  return worst;
}

double check_points(std::mt19937_64& rng) {
  const HyperParams hp = loss_check_hp();
  double worst = 0.0;
  for (int t = 0; t < 40; ++t) {
    const bool norm = (t % 2) == 1;
    const GroupScenario sc = make_group_scenario(rng, hp);
    const LossBreakdown base =
        group_loss(sc.gts, sc.preds, sc.assignment, hp, norm);
    for (int q = 0; q < hp.N_q; ++q) {
      for (int k = 0; k < hp.M; ++k) {
        for (int c = 0; c < 2; ++c) {
          auto hi = sc.preds;
          auto lo = sc.preds;
          double& hv = (c == 0) ? hi[q].member_points[k].x
                                : hi[q].member_points[k].y;
          double& lv = (c == 0) ? lo[q].member_points[k].x
                                : lo[q].member_points[k].y;
          hv += kStep;
          lv -= kStep;
          const double fd =
              (group_loss(sc.gts, hi, sc.assignment, hp, norm).total -
               group_loss(sc.gts, lo, sc.assignment, hp, norm).total) /
              (2.0 * kStep);
          worst =
              std::max(worst, rel_err(base.grads.d_points(q, 2 * k + c), fd));
        }
      }
    }
  }
  return worst;
}

// Every non-smooth operation between the parameters and the loss is one of:
// a ReLU, an L1 absolute difference, a GIoU min/max branch, or a probability
// clamp. The helpers below certify that a sampled configuration sits at
// least kKinkMargin away from all of them, so a central difference with step
// 1e-6 never straddles a derivative jump (parameter-to-output gain is O(10),
// leaving two orders of magnitude of slack).
bool relu_inputs_clear(const ModelParams& p, const ForwardCache& c) {
  auto clear = [](const Matrix& X, const Matrix& W, const Vector& b) {
    const Matrix z = ((X * W.transpose()).rowwise() + b.transpose()).eval();
    return (z.array().abs() >= kKinkMargin).all();
  };
  return clear(c.ctx, p.W1, p.b1) && clear(c.H, p.size_W1, p.size_b1) &&
         clear(c.size_h1, p.size_W2, p.size_b2) &&
         clear(c.H, p.point_W1, p.point_b1) &&
         clear(c.point_h1, p.point_W2, p.point_b2) &&
         clear(c.H, p.box_W1, p.box_b1) &&
         clear(c.box_h1, p.box_W2, p.box_b2);
}

bool probs_clear(const ForwardCache& c) {
  auto inside = [](const auto& m) {
    return (m.array() > 1e-5).all() && (m.array() < 1.0 - 1e-5).all();
  };
  return inside(c.activity_probs) && inside(c.score) && inside(c.action_probs);
}

Box box_at(const ForwardCache& c, int q) {
  return Box{c.box(q, 0), c.box(q, 1), c.box(q, 2), c.box(q, 3)};
}

bool matched_terms_clear(const Scene& sc, const ForwardCache& c,
                         const Assignment& ga, const Assignment& ia,
                         const HyperParams& hp) {
  for (std::size_t g = 0; g < sc.groups.size(); ++g) {
    const GroundTruthGroup& gt = sc.groups[g];
    const int q = ga.col_for_row[g];
    if (std::abs(static_cast<double>(gt.size) / hp.M - c.size_norm(q)) <
        kKinkMargin) {
      return false;
    }
    for (int k = 0; k < gt.size; ++k) {
      if (std::abs(gt.member_points[k].x - c.points(q, 2 * k)) < kKinkMargin ||
          std::abs(gt.member_points[k].y - c.points(q, 2 * k + 1)) < kKinkMargin) {
        return false;
      }
    }
  }
  for (std::size_t i = 0; i < sc.persons.size(); ++i) {
    const Box& gt = sc.persons[i].box;
    const Box pred = box_at(c, ia.col_for_row[i]);
    if (std::abs(gt.cx - pred.cx) < kKinkMargin ||
        std::abs(gt.cy - pred.cy) < kKinkMargin ||
        std::abs(gt.w - pred.w) < kKinkMargin ||
        std::abs(gt.h - pred.h) < kKinkMargin) {
      return false;
    }
    if (!giou_smooth_at(gt, pred)) return false;
  }
  return true;
}

// Linear probe over every model output: sum of coefficient * output. Its
// per-output derivatives are exactly the coefficients, so backward() can be
// compared against finite differences of the probe through any parameter.
struct ProbeSetup {
  HyperParams hp;
  ModelParams params;
  Matrix tokens;
  PredictionGrads coeff;
};

ProbeSetup make_probe(std::mt19937_64& rng) {
  ProbeSetup s;
  s.hp.N_v = 2;
  s.hp.N_a = 2;
  s.hp.N_q = 4;
  s.hp.M = 2;
  s.hp.D_tok = 6;
  s.hp.D_emb = 8;

  std::normal_distribution<double> ntok(0.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    s.params = ModelTensors::random_init(s.hp, rng());
    s.tokens = Matrix(5, s.hp.D_tok);
    for (Eigen::Index i = 0; i < s.tokens.size(); ++i) {
      s.tokens.data()[i] = ntok(rng);
    }
    const ForwardCache cache = forward_scene(s.params, s.tokens);
    if (relu_inputs_clear(s.params, cache)) break;
    if (attempt == 99) {
      throw std::runtime_error("gradcheck: no smooth probe configuration found");
    }
  }

  std::uniform_real_distribution<double> uc(-1.0, 1.0);
  auto fill = [&](Matrix& m, Eigen::Index r, Eigen::Index c) {
    m.resize(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uc(rng);
  };
  const int nq = s.hp.N_q;
  fill(s.coeff.d_activity, nq, s.hp.N_v);
  s.coeff.d_size = Vector(nq);
  for (int i = 0; i < nq; ++i) s.coeff.d_size(i) = uc(rng);
  fill(s.coeff.d_points, nq, 2 * s.hp.M);
  s.coeff.d_score = Vector(nq);
  for (int i = 0; i < nq; ++i) s.coeff.d_score(i) = uc(rng);
  fill(s.coeff.d_box, nq, 4);
  fill(s.coeff.d_action, nq, s.hp.N_a);
  return s;
}

double probe_value(const ModelParams& params, const Matrix& tokens,
                   const PredictionGrads& c) {
  const ForwardCache cache = forward_scene(params, tokens);
  double v = 0.0;
  v += (c.d_activity.array() * cache.activity_probs.array()).sum();
  v += (c.d_size.array() * cache.size_norm.array()).sum();
  v += (c.d_points.array() * cache.points.array()).sum();
  v += (c.d_score.array() * cache.score.array()).sum();
  v += (c.d_box.array() * cache.box.array()).sum();
  v += (c.d_action.array() * cache.action_probs.array()).sum();
  return v;
}

bool is_decoder_tensor(const std::string& name) {
  return name == "queries" || name == "Wq" || name == "Wk" || name == "Wv" ||
         name == "W1" || name == "b1" || name == "W2" || name == "b2";
}

// FD over a subset of parameter tensors against backward() on the probe.
double check_probe_params(const ProbeSetup& s, bool decoder_side) {
  const ForwardCache cache = forward_scene(s.params, s.tokens);
  GradientBuffer analytic = ModelTensors::zeros(s.hp);
  backward(s.params, cache, s.coeff, analytic);

  ModelParams work = s.params;
  auto work_refs = work.tensor_refs();
  auto grad_refs = analytic.tensor_refs();
  double worst = 0.0;
  for (std::size_t r = 0; r < work_refs.size(); ++r) {
    if (is_decoder_tensor(work_refs[r].name) != decoder_side) continue;
    for (Eigen::Index i = 0; i < work_refs[r].size; ++i) {
      const double saved = work_refs[r].data[i];
      work_refs[r].data[i] = saved + kStep;
      const double hi = probe_value(work, s.tokens, s.coeff);
      work_refs[r].data[i] = saved - kStep;
      const double lo = probe_value(work, s.tokens, s.coeff);
      work_refs[r].data[i] = saved;
      worst = std::max(
          worst, rel_err(grad_refs[r].data[i], (hi - lo) / (2.0 * kStep)));
    }
  }
  return worst;
}

void scale_grads(PredictionGrads& g, double f) {
  g.d_activity *= f;
  g.d_size *= f;
  g.d_points *= f;
  g.d_score *= f;
  g.d_box *= f;
  g.d_action *= f;
}

// Full pipeline on two generated scenes: decoder, heads, both losses, mean
// over the batch. Matchings are computed once at the base parameters and
// reused for every perturbed evaluation.
double check_full_model(std::mt19937_64& rng) {
  SynthConfig cfg;
  cfg.N_v = 2;
  cfg.N_a = 2;
  cfg.D_tok = 9;
  cfg.M = 2;
  cfg.size_min = 1;
  cfg.size_max = 2;
  cfg.n_distractors = 1;
  cfg.n_background = 1;
  const HyperParams hp = hyperparams_for(cfg, 4, 8);

  struct Frozen {
    Matrix tokens;
    Assignment groups;
    Assignment individuals;
  };
  std::vector<Scene> scenes;
  std::vector<Frozen> frozen;
  ModelParams params;
  for (int attempt = 0;; ++attempt) {
    if (attempt == 100) {
      throw std::runtime_error("gradcheck: no smooth full-model configuration found");
    }
    scenes.clear();
    frozen.clear();
    scenes.push_back(generate_scene(rng, cfg));
    scenes.push_back(generate_scene(rng, cfg));
    params = ModelTensors::random_init(hp, rng());

    bool smooth = true;
    for (const Scene& sc : scenes) {
      Frozen f;
      f.tokens = tokens_matrix(sc, hp.D_tok);
      const ForwardCache cache = forward_scene(params, f.tokens);
      f.groups = match_groups(sc.groups, group_predictions(cache),
                              group_weights(hp), hp.M);
      f.individuals = match_individuals(sc.persons, individual_predictions(cache),
                                        individual_weights(hp));
      smooth = smooth && relu_inputs_clear(params, cache) && probs_clear(cache) &&
               matched_terms_clear(sc, cache, f.groups, f.individuals, hp);
      frozen.push_back(std::move(f));
    }
    if (smooth) break;
  }
  const double inv = 1.0 / static_cast<double>(scenes.size());

  auto batch_loss = [&](const ModelParams& p) {
    double total = 0.0;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      const ForwardCache cache = forward_scene(p, frozen[i].tokens);
      total += group_loss(scenes[i].groups, group_predictions(cache),
                          frozen[i].groups, hp)
                   .total;
      total += individual_loss(scenes[i].persons, individual_predictions(cache),
                               frozen[i].individuals, hp)
                   .total;
    }
    return total * inv;
  };

  GradientBuffer analytic = ModelTensors::zeros(hp);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const ForwardCache cache = forward_scene(params, frozen[i].tokens);
    const LossBreakdown lg = group_loss(scenes[i].groups,
                                        group_predictions(cache),
                                        frozen[i].groups, hp);
    const LossBreakdown li = individual_loss(scenes[i].persons,
                                             individual_predictions(cache),
                                             frozen[i].individuals, hp);
    PredictionGrads merged = sum(lg.grads, li.grads);
    scale_grads(merged, inv);
    backward(params, cache, merged, analytic);
  }

  ModelParams work = params;
  auto work_refs = work.tensor_refs();
  auto grad_refs = analytic.tensor_refs();
  double worst = 0.0;
  for (std::size_t r = 0; r < work_refs.size(); ++r) {
    for (Eigen::Index i = 0; i < work_refs[r].size; ++i) {
      const double saved = work_refs[r].data[i];
      work_refs[r].data[i] = saved + kStep;
      const double hi = batch_loss(work);
      work_refs[r].data[i] = saved - kStep;
      const double lo = batch_loss(work);
      work_refs[r].data[i] = saved;
      worst = std::max(
          worst, rel_err(grad_refs[r].data[i], (hi - lo) / (2.0 * kStep)));
    }
  }
  return worst;
}

}  // namespace

bool GradCheckReport::passed() const {
  for (const auto& e : entries) {
    if (!std::isfinite(e.max_rel_err) || e.max_rel_err >= threshold) {
      return false;
    }
  }
  return !entries.empty();
}

GradCheckReport run_gradcheck(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradCheckReport report;
  report.entries.push_back({"focal", check_focal(rng)});
  report.entries.push_back({"l1", check_l1(rng)});
  report.entries.push_back({"giou", check_giou(rng)});
  report.entries.push_back({"points", check_points(rng)});
  const ProbeSetup probe = make_probe(rng);
  report.entries.push_back({"attention", check_probe_params(probe, true)});
  report.entries.push_back({"heads", check_probe_params(probe, false)});
  report.entries.push_back({"full_model", check_full_model(rng)});
  return report;
}

}  // namespace sgar
