#include "sgar/model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "sgar/json_io.hpp"

namespace sgar {

namespace {

template <typename Self>
std::vector<TensorRef> refs_of(Self& s) {
  auto r = [](const char* name, auto& t) {
    return TensorRef{name, const_cast<double*>(t.data()),
                     static_cast<Eigen::Index>(t.size())};
  };
  return {
      r("queries", s.queries),       r("Wq", s.Wq),
      r("Wk", s.Wk),                 r("Wv", s.Wv),
      r("W1", s.W1),                 r("b1", s.b1),
      r("W2", s.W2),                 r("b2", s.b2),
      r("activity_W", s.activity_W), r("activity_b", s.activity_b),
      r("size_W1", s.size_W1),       r("size_b1", s.size_b1),
      r("size_W2", s.size_W2),       r("size_b2", s.size_b2),
      r("size_W3", s.size_W3),       r("size_b3", s.size_b3),
      r("point_W1", s.point_W1),     r("point_b1", s.point_b1),
      r("point_W2", s.point_W2),     r("point_b2", s.point_b2),
      r("point_W3", s.point_W3),     r("point_b3", s.point_b3),
      r("person_W", s.person_W),     r("person_b", s.person_b),
      r("box_W1", s.box_W1),         r("box_b1", s.box_b1),
      r("box_W2", s.box_W2),         r("box_b2", s.box_b2),
      r("box_W3", s.box_W3),         r("box_b3", s.box_b3),
      r("action_W", s.action_W),     r("action_b", s.action_b),
      r("ref_logits", s.ref_logits),
  };
}

Matrix sigmoid(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }
Vector sigmoid(const Vector& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

Matrix linear(const Matrix& X, const Matrix& W, const Vector& b) {
  return ((X * W.transpose()).rowwise() + b.transpose()).eval();
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

}  // namespace

std::vector<TensorRef> ModelTensors::tensor_refs() { return refs_of(*this); }
std::vector<TensorRef> ModelTensors::tensor_refs() const { return refs_of(*this); }

Eigen::Index ModelTensors::total_size() const {
  Eigen::Index n = 0;
  for (const auto& r : tensor_refs()) n += r.size;
  return n;
}

bool ModelTensors::all_finite() const {
  for (const auto& r : tensor_refs()) {
    for (Eigen::Index i = 0; i < r.size; ++i) {
      if (!std::isfinite(r.data[i])) return false;
    }
  }
  return true;
}

void ModelTensors::set_zero() {
  for (auto& r : tensor_refs()) std::fill(r.data, r.data + r.size, 0.0);
}

ModelTensors ModelTensors::zeros(const HyperParams& hp) {
  ModelTensors t;
  const int D = hp.D_emb;
  t.queries = Matrix::Zero(hp.N_q, D);
  t.Wq = Matrix::Zero(D, D);
  t.Wk = Matrix::Zero(D, hp.D_tok);
  t.Wv = Matrix::Zero(D, hp.D_tok);
  t.W1 = Matrix::Zero(D, D);
  t.b1 = Vector::Zero(D);
  t.W2 = Matrix::Zero(D, D);
  t.b2 = Vector::Zero(D);
  t.activity_W = Matrix::Zero(hp.N_v, D);
  t.activity_b = Vector::Zero(hp.N_v);
  t.size_W1 = Matrix::Zero(D, D);
  t.size_b1 = Vector::Zero(D);
  t.size_W2 = Matrix::Zero(D, D);
  t.size_b2 = Vector::Zero(D);
  t.size_W3 = Matrix::Zero(1, D);
  t.size_b3 = Vector::Zero(1);
  t.point_W1 = Matrix::Zero(D, D);
  t.point_b1 = Vector::Zero(D);
  t.point_W2 = Matrix::Zero(D, D);
  t.point_b2 = Vector::Zero(D);
  t.point_W3 = Matrix::Zero(2 * hp.M, D);
  t.point_b3 = Vector::Zero(2 * hp.M);
  t.person_W = Matrix::Zero(1, D);
  t.person_b = Vector::Zero(1);
  t.box_W1 = Matrix::Zero(D, D);
  t.box_b1 = Vector::Zero(D);
  t.box_W2 = Matrix::Zero(D, D);
  t.box_b2 = Vector::Zero(D);
  t.box_W3 = Matrix::Zero(4, D);
  t.box_b3 = Vector::Zero(4);
  t.action_W = Matrix::Zero(hp.N_a, D);
  t.action_b = Vector::Zero(hp.N_a);
  t.ref_logits = Matrix::Zero(hp.N_q, 2);
  return t;
}

ModelTensors ModelTensors::random_init(const HyperParams& hp, std::uint64_t seed) {
  ModelTensors t = zeros(hp);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Matrix& m, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  };
  auto fill_fan_in = [&fill](Matrix& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    fill(w, -bound, bound);
  };
  fill(t.queries, -1.0, 1.0);
  fill_fan_in(t.Wq);
  fill_fan_in(t.Wk);
  fill_fan_in(t.Wv);
  fill_fan_in(t.W1);
  fill_fan_in(t.W2);
  fill_fan_in(t.activity_W);
  fill_fan_in(t.size_W1);
  fill_fan_in(t.size_W2);
  fill_fan_in(t.size_W3);
  fill_fan_in(t.point_W1);
  fill_fan_in(t.point_W2);
  fill_fan_in(t.point_W3);
  fill_fan_in(t.person_W);
  fill_fan_in(t.box_W1);
  fill_fan_in(t.box_W2);
  fill_fan_in(t.box_W3);
  fill_fan_in(t.action_W);
  fill(t.ref_logits, -2.0, 2.0);
  return t;
}

Matrix decoder_forward(const ModelParams& p, const Matrix& tokens, ForwardCache& c) {
  if (tokens.rows() == 0) {
    throw std::invalid_argument("decoder_forward: empty token set");
  }
  if (tokens.cols() != p.Wk.cols()) {
    throw std::invalid_argument("decoder_forward: token dimension mismatch");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.Wq.rows()));

  c.tokens = tokens;
  c.K = tokens * p.Wk.transpose();
  c.V = tokens * p.Wv.transpose();
  c.Qp = p.queries * p.Wq.transpose();

  Matrix scores = (c.Qp * c.K.transpose()) * scale;
  const Vector row_max = scores.rowwise().maxCoeff();
  Matrix e = (scores.colwise() - row_max).array().exp();
  const Vector z = e.rowwise().sum();
  c.attn = (e.array().colwise() / z.array()).matrix();

  c.ctx = c.attn * c.V;
  c.ffn_h = relu(linear(c.ctx, p.W1, p.b1));
  c.H = linear(c.ffn_h, p.W2, p.b2);
  c.first_query = 0;
  return c.H;
}

void heads_forward(const ModelParams& p, const Matrix& H, int first_query,
                   ForwardCache& c) {
  const int n = static_cast<int>(H.rows());
  if (H.cols() != p.activity_W.cols()) {
    throw std::invalid_argument("heads_forward: embedding dimension mismatch");
  }
  if (first_query < 0 || first_query + n > p.ref_logits.rows()) {
    throw std::invalid_argument("heads_forward: query index out of range");
  }
  c.H = H;
  c.first_query = first_query;

  c.activity_logit = linear(H, p.activity_W, p.activity_b);
  c.activity_probs = sigmoid(c.activity_logit);

  c.size_h1 = relu(linear(H, p.size_W1, p.size_b1));
  c.size_h2 = relu(linear(c.size_h1, p.size_W2, p.size_b2));
  c.size_logit = linear(c.size_h2, p.size_W3, p.size_b3).col(0);
  c.size_norm = sigmoid(c.size_logit);

  c.point_h1 = relu(linear(H, p.point_W1, p.point_b1));
  c.point_h2 = relu(linear(c.point_h1, p.point_W2, p.point_b2));
  c.point_raw = linear(c.point_h2, p.point_W3, p.point_b3);
  const int m2 = static_cast<int>(c.point_raw.cols());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < m2; k += 2) {
      c.point_raw(i, k) += p.ref_logits(first_query + i, 0);
      c.point_raw(i, k + 1) += p.ref_logits(first_query + i, 1);
    }
  }
  c.points = sigmoid(c.point_raw);

  c.person_logit = linear(H, p.person_W, p.person_b).col(0);
  c.score = sigmoid(c.person_logit);

  c.box_h1 = relu(linear(H, p.box_W1, p.box_b1));
  c.box_h2 = relu(linear(c.box_h1, p.box_W2, p.box_b2));
  c.box_raw = linear(c.box_h2, p.box_W3, p.box_b3);
  for (int i = 0; i < n; ++i) {
    c.box_raw(i, 0) += p.ref_logits(first_query + i, 0);
    c.box_raw(i, 1) += p.ref_logits(first_query + i, 1);
  }
  c.box = sigmoid(c.box_raw);

  c.action_logit = linear(H, p.action_W, p.action_b);
  c.action_probs = sigmoid(c.action_logit);
}

std::vector<GroupPrediction> group_predictions(const ForwardCache& c) {
  const int n = static_cast<int>(c.activity_probs.rows());
  const int m = static_cast<int>(c.points.cols()) / 2;
  std::vector<GroupPrediction> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].activity_probs = c.activity_probs.row(i).transpose();
    out[i].size_norm = c.size_norm(i);
    out[i].member_points.resize(m);
    for (int k = 0; k < m; ++k) {
      out[i].member_points[k] = {c.points(i, 2 * k), c.points(i, 2 * k + 1)};
    }
  }
  return out;
}

std::vector<IndividualPrediction> individual_predictions(const ForwardCache& c) {
  const int n = static_cast<int>(c.box.rows());
  std::vector<IndividualPrediction> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].score = c.score(i);
    out[i].box = {c.box(i, 0), c.box(i, 1), c.box(i, 2), c.box(i, 3)};
    out[i].action_probs = c.action_probs.row(i).transpose();
  }
  return out;
}

GroupPrediction group_heads_forward(const ModelParams& p, const Vector& h, int i) {
  ForwardCache c;
  heads_forward(p, h.transpose(), i, c);
  return group_predictions(c).front();
}

IndividualPrediction individual_heads_forward(const ModelParams& p, const Vector& h,
                                              int i) {
  ForwardCache c;
  heads_forward(p, h.transpose(), i, c);
  return individual_predictions(c).front();
}

ForwardCache forward_scene(const ModelParams& p, const Matrix& tokens) {
  ForwardCache c;
  decoder_forward(p, tokens, c);
  heads_forward(p, c.H, 0, c);
  return c;
}

Matrix tokens_matrix(const Scene& scene, int expected_dim) {
  Matrix t(scene.tokens.size(), expected_dim);
  for (size_t i = 0; i < scene.tokens.size(); ++i) {
    if (scene.tokens[i].size() != expected_dim) {
      throw std::invalid_argument("tokens_matrix: token dimension mismatch");
    }
    t.row(i) = scene.tokens[i].transpose();
  }
  return t;
}

namespace {

// d(sigmoid)/d(logit) from the sigmoid output.
Matrix sig_grad(const Matrix& dout, const Matrix& out) {
  return (dout.array() * out.array() * (1.0 - out.array())).matrix();
}
Vector sig_grad(const Vector& dout, const Vector& out) {
  return (dout.array() * out.array() * (1.0 - out.array())).matrix();
}

}  // namespace

void backward(const ModelParams& p, const ForwardCache& c, const PredictionGrads& g,
              GradientBuffer& out) {
  const int n_q = static_cast<int>(c.H.rows());
  if (c.first_query != 0 || n_q != p.queries.rows()) {
    throw std::invalid_argument("backward: cache does not cover the full query set");
  }
  if (c.attn.rows() != n_q || c.tokens.rows() != c.attn.cols()) {
    throw std::invalid_argument("backward: cache mismatch");
  }
  auto check_rows = [n_q](const auto& m, const char* what) {
    if (m.size() != 0 && m.rows() != n_q) {
      throw std::invalid_argument(std::string("backward: loss gradient shape mismatch for ") + what);
    }
  };
  check_rows(g.d_activity, "activity");
  check_rows(g.d_size, "size");
  check_rows(g.d_points, "points");
  check_rows(g.d_score, "score");
  check_rows(g.d_box, "box");
  check_rows(g.d_action, "action");

  Matrix dH = Matrix::Zero(n_q, c.H.cols());

  auto linear_backward = [&](const Matrix& d_out, const Matrix& X, const Matrix& W,
                             Matrix& gW, Vector& gb) -> Matrix {
    gW += d_out.transpose() * X;
    gb += d_out.colwise().sum().transpose();
    return d_out * W;
  };

  // 3-layer MLP: raw = W3 relu(W2 relu(W1 H + b1) + b2) + b3.
  auto mlp3_backward = [&](const Matrix& d_raw, const Matrix& h1, const Matrix& h2,
                           const Matrix& W1, Vector& gb1, Matrix& gW1, const Matrix& W2,
                           Vector& gb2, Matrix& gW2, const Matrix& W3, Vector& gb3,
                           Matrix& gW3) {
    Matrix dh2 = linear_backward(d_raw, h2, W3, gW3, gb3);
    dh2.array() *= (h2.array() > 0.0).cast<double>();
    Matrix dh1 = linear_backward(dh2, h1, W2, gW2, gb2);
    dh1.array() *= (h1.array() > 0.0).cast<double>();
    dH += linear_backward(dh1, c.H, W1, gW1, gb1);
  };

  if (g.d_activity.size() != 0) {
    const Matrix d_logit = sig_grad(g.d_activity, c.activity_probs);
    dH += linear_backward(d_logit, c.H, p.activity_W, out.activity_W, out.activity_b);
  }

  if (g.d_size.size() != 0) {
    const Vector dv = sig_grad(g.d_size, c.size_norm);
    const Matrix d_raw = dv;  // n_q x 1
    mlp3_backward(d_raw, c.size_h1, c.size_h2, p.size_W1, out.size_b1, out.size_W1,
                  p.size_W2, out.size_b2, out.size_W2, p.size_W3, out.size_b3,
                  out.size_W3);
  }

  if (g.d_points.size() != 0) {
    const Matrix d_raw = sig_grad(g.d_points, c.points);
    for (int i = 0; i < n_q; ++i) {
      for (int k = 0; k < d_raw.cols(); k += 2) {
        out.ref_logits(i, 0) += d_raw(i, k);
        out.ref_logits(i, 1) += d_raw(i, k + 1);
      }
    }
    mlp3_backward(d_raw, c.point_h1, c.point_h2, p.point_W1, out.point_b1, out.point_W1,
                  p.point_W2, out.point_b2, out.point_W2, p.point_W3, out.point_b3,
                  out.point_W3);
  }

  if (g.d_score.size() != 0) {
    const Vector dv = sig_grad(g.d_score, c.score);
    const Matrix d_logit = dv;  // n_q x 1
    dH += linear_backward(d_logit, c.H, p.person_W, out.person_W, out.person_b);
  }

  if (g.d_box.size() != 0) {
    const Matrix d_raw = sig_grad(g.d_box, c.box);
    for (int i = 0; i < n_q; ++i) {
      out.ref_logits(i, 0) += d_raw(i, 0);
      out.ref_logits(i, 1) += d_raw(i, 1);
    }
    mlp3_backward(d_raw, c.box_h1, c.box_h2, p.box_W1, out.box_b1, out.box_W1, p.box_W2,
                  out.box_b2, out.box_W2, p.box_W3, out.box_b3, out.box_W3);
  }

  if (g.d_action.size() != 0) {
    const Matrix d_logit = sig_grad(g.d_action, c.action_probs);
    dH += linear_backward(d_logit, c.H, p.action_W, out.action_W, out.action_b);
  }

  // decoder: H = W2 relu(W1 ctx + b1) + b2, ctx = attn V
  Matrix d_ffn = linear_backward(dH, c.ffn_h, p.W2, out.W2, out.b2);
  d_ffn.array() *= (c.ffn_h.array() > 0.0).cast<double>();
  const Matrix d_ctx = linear_backward(d_ffn, c.ctx, p.W1, out.W1, out.b1);

  const Matrix d_attn = d_ctx * c.V.transpose();           // n_q x n
  const Matrix dV = c.attn.transpose() * d_ctx;            // n x D

  // softmax rows: dS = attn .* (d_attn - rowsum(attn .* d_attn))
  const Vector dot = (c.attn.array() * d_attn.array()).rowwise().sum();
  const Matrix dS = (c.attn.array() * (d_attn.array().colwise() - dot.array())).matrix();

  const double scale = 1.0 / std::sqrt(static_cast<double>(p.Wq.rows()));
  const Matrix dQp = dS * c.K * scale;
  const Matrix dK = dS.transpose() * c.Qp * scale;

  out.Wq += dQp.transpose() * p.queries;
  out.queries += dQp * p.Wq;
  out.Wk += dK.transpose() * c.tokens;
  out.Wv += dV.transpose() * c.tokens;
}

AdamState AdamState::init(const HyperParams& hp) {
  AdamState s;
  s.m = ModelTensors::zeros(hp);
  s.v = ModelTensors::zeros(hp);
  s.step = 0;
  return s;
}

void optimizer_step(ModelParams& params, const GradientBuffer& grads, AdamState& state,
                    double lr, double weight_decay, double beta1, double beta2,
                    double eps) {
  if (!grads.all_finite()) {
    throw std::runtime_error("optimizer_step: diverged (non-finite gradient)");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

  auto tp = params.tensor_refs();
  const auto tg = grads.tensor_refs();
  auto tm = state.m.tensor_refs();
  auto tv = state.v.tensor_refs();
  for (size_t t = 0; t < tp.size(); ++t) {
    if (tg[t].size != tp[t].size || tm[t].size != tp[t].size) {
      throw std::invalid_argument("optimizer_step: tensor shape mismatch");
    }
    double* p = tp[t].data;
    const double* g = tg[t].data;
    double* m = tm[t].data;
    double* v = tv[t].data;
    for (Eigen::Index i = 0; i < tp[t].size; ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps) + weight_decay * p[i]);
    }
  }
}

namespace {

void write_tensors(std::ofstream& out, const ModelTensors& t) {
  for (const auto& r : t.tensor_refs()) {
    out.write(reinterpret_cast<const char*>(r.data),
              static_cast<std::streamsize>(r.size) * static_cast<std::streamsize>(sizeof(double)));
  }
}

void read_tensors(std::ifstream& in, ModelTensors& t, const std::string& path) {
  for (auto& r : t.tensor_refs()) {
    in.read(reinterpret_cast<char*>(r.data),
            static_cast<std::streamsize>(r.size) * static_cast<std::streamsize>(sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(r.size * sizeof(double))) {
      throw std::runtime_error("load_checkpoint: '" + path + "' truncated in tensor " +
                               r.name);
    }
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const HyperParams& hp, int step, const AdamState* adam,
                     const std::string& rng_state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("save_checkpoint: cannot open '" + path + "' for writing");
  }
  json header;
  header["format"] = "sgar-checkpoint-v1";
  header["step"] = step;
  header["hyperparams"] = hp;
  json tensors = json::array();
  for (const auto& r : params.tensor_refs()) {
    tensors.push_back(json{{"name", r.name}, {"size", r.size}});
  }
  header["tensors"] = tensors;
  header["has_adam"] = adam != nullptr;
  if (adam != nullptr) header["adam_step"] = adam->step;
  header["rng_state"] = rng_state;
  out << header.dump() << '\n';

  write_tensors(out, params);
  if (adam != nullptr) {
    write_tensors(out, adam->m);
    write_tensors(out, adam->v);
  }
  out.flush();
  if (!out) {
    throw std::runtime_error("save_checkpoint: write failed for '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
  }
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw std::runtime_error("load_checkpoint: '" + path + "' missing header");
  }
  json header;
  try {
    header = json::parse(header_line);
  } catch (const std::exception& e) {
    throw std::runtime_error("load_checkpoint: '" + path + "' bad header: " + e.what());
  }
  if (header.value("format", "") != std::string("sgar-checkpoint-v1")) {
    throw std::runtime_error("load_checkpoint: '" + path + "' unknown format tag");
  }

  Checkpoint ck;
  ck.hp = header.at("hyperparams").get<HyperParams>();
  ck.step = header.at("step").get<int>();
  ck.rng_state = header.value("rng_state", "");
  ck.params = ModelTensors::zeros(ck.hp);

  const auto refs = ck.params.tensor_refs();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != refs.size()) {
    throw std::runtime_error("load_checkpoint: '" + path + "' tensor layout mismatch");
  }
  for (size_t i = 0; i < refs.size(); ++i) {
    if (tensors[i].at("name").get<std::string>() != refs[i].name ||
        tensors[i].at("size").get<Eigen::Index>() != refs[i].size) {
      throw std::runtime_error("load_checkpoint: '" + path + "' tensor layout mismatch at " +
                               std::string(refs[i].name));
    }
  }

  read_tensors(in, ck.params, path);
  if (header.value("has_adam", false)) {
    AdamState adam = AdamState::init(ck.hp);
    adam.step = header.at("adam_step").get<long>();
    read_tensors(in, adam.m, path);
    read_tensors(in, adam.v, path);
    ck.adam = std::move(adam);
  }
  return ck;
}

}  // namespace sgar
