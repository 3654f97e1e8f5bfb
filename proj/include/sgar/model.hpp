#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgar/losses.hpp"
#include "sgar/types.hpp"

namespace sgar {

// Flattened view into one parameter tensor; the enumeration order of
// tensor_refs() is the serialization order (entries in Eigen's column-major
// storage order).
struct TensorRef {
  const char* name;
  double* data;
  Eigen::Index size;
};

// All learnable tensors. The same struct serves as the parameter set, the
// gradient buffer, and the optimizer moment buffers; only initialization
// differs. Linear layers compute y = W x + b with W shaped (out x in);
// batched code applies them as rows(X) -> X * W^T.
struct ModelTensors {
  // cross-attention decoder
  Matrix queries;   // N_q x D_emb, learnable query embeddings
  Matrix Wq;        // D_emb x D_emb
  Matrix Wk;        // D_emb x D_tok
  Matrix Wv;        // D_emb x D_tok
  Matrix W1;        // D_emb x D_emb, feed-forward hidden
  Vector b1;
  Matrix W2;        // D_emb x D_emb
  Vector b2;

  // group heads
  Matrix activity_W;  // N_v x D_emb
  Vector activity_b;
  Matrix size_W1;     // D_emb x D_emb
  Vector size_b1;
  Matrix size_W2;     // D_emb x D_emb
  Vector size_b2;
  Matrix size_W3;     // 1 x D_emb
  Vector size_b3;
  Matrix point_W1;    // D_emb x D_emb
  Vector point_b1;
  Matrix point_W2;    // D_emb x D_emb
  Vector point_b2;
  Matrix point_W3;    // 2M x D_emb
  Vector point_b3;

  // individual heads
  Matrix person_W;  // 1 x D_emb
  Vector person_b;
  Matrix box_W1;    // D_emb x D_emb
  Vector box_b1;
  Matrix box_W2;    // D_emb x D_emb
  Vector box_b2;
  Matrix box_W3;    // 4 x D_emb
  Vector box_b3;
  Matrix action_W;  // N_a x D_emb
  Vector action_b;

  // per-query reference logits; row i is added to every raw (x, y) point
  // pair and to the raw box (cx, cy) of query i before the sigmoid
  Matrix ref_logits;  // N_q x 2

  std::vector<TensorRef> tensor_refs();
  std::vector<TensorRef> tensor_refs() const;  // const view, data non-null
  Eigen::Index total_size() const;
  bool all_finite() const;
  void set_zero();

  // Zero tensors with dimensions from hp.
  static ModelTensors zeros(const HyperParams& hp);
  // Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero,
  // query embeddings uniform in [-1, 1], reference logits uniform in
  // [-2, 2]; filled in tensor_refs order from a generator seeded here.
  static ModelTensors random_init(const HyperParams& hp, std::uint64_t seed);
};

using ModelParams = ModelTensors;
using GradientBuffer = ModelTensors;

// Everything backward needs: inputs, attention internals, post-ReLU
// hiddens, raw logits, and sigmoid outputs for each head.
struct ForwardCache {
  Matrix tokens;  // n x D_tok
  Matrix K, V;    // n x D_emb
  Matrix Qp;      // n_q x D_emb
  Matrix attn;    // n_q x n, rows sum to 1
  Matrix ctx;     // n_q x D_emb
  Matrix ffn_h;   // n_q x D_emb, post-ReLU
  Matrix H;       // n_q x D_emb, decoder output

  Matrix activity_logit;        // n_q x N_v
  Matrix size_h1, size_h2;      // post-ReLU
  Vector size_logit;            // n_q
  Matrix point_h1, point_h2;    // post-ReLU
  Matrix point_raw;             // n_q x 2M, reference logits added
  Vector person_logit;          // n_q
  Matrix box_h1, box_h2;        // post-ReLU
  Matrix box_raw;               // n_q x 4, reference added to (cx, cy)
  Matrix action_logit;          // n_q x N_a

  Matrix activity_probs;  // sigmoid outputs, used for the sigmoid gradient
  Vector size_norm;
  Matrix points;          // n_q x 2M
  Vector score;
  Matrix box;             // n_q x 4
  Matrix action_probs;

  int first_query = 0;  // offset into queries / ref_logits rows
};

// Cross-attention decoder over the scene tokens:
// H_i = FFN(sum_j softmax_j(<Wq q_i, Wk t_j> / sqrt(D_emb)) Wv t_j).
// Returns H (n_q x D_emb) and fills the decoder part of the cache.
// Throws std::invalid_argument on empty tokens or dimension mismatch.
Matrix decoder_forward(const ModelParams& params, const Matrix& tokens,
                       ForwardCache& cache);

// Head stacks over precomputed embeddings H (rows are queries starting at
// first_query). Fills the head part of the cache.
void heads_forward(const ModelParams& params, const Matrix& H, int first_query,
                   ForwardCache& cache);

// Predictions for query rows of a filled cache.
std::vector<GroupPrediction> group_predictions(const ForwardCache& cache);
std::vector<IndividualPrediction> individual_predictions(const ForwardCache& cache);

// Single-query conveniences running the same kernels on a 1-row matrix.
GroupPrediction group_heads_forward(const ModelParams& params, const Vector& h, int i);
IndividualPrediction individual_heads_forward(const ModelParams& params,
                                              const Vector& h, int i);

// Full forward for one scene: decoder over scene tokens, then both head
// stacks for every query.
ForwardCache forward_scene(const ModelParams& params, const Matrix& tokens);
Matrix tokens_matrix(const Scene& scene, int expected_dim);

// Reverse-mode gradients of the scalar loss whose per-output derivatives
// are in `grads` (see PredictionGrads). Accumulates into `out`, which must
// be shaped like `params`. Throws on dimension mismatch between cache and
// grads.
void backward(const ModelParams& params, const ForwardCache& cache,
              const PredictionGrads& grads, GradientBuffer& out);

// Adam moments with decoupled weight decay.
struct AdamState {
  ModelTensors m;
  ModelTensors v;
  long step = 0;
  static AdamState init(const HyperParams& hp);
};

// One update: bias-corrected moment step plus weight decay applied directly
// to the parameters (not through the gradients). Throws std::runtime_error
// "diverged" on non-finite gradients.
void optimizer_step(ModelParams& params, const GradientBuffer& grads, AdamState& state,
                    double lr = 1e-4, double weight_decay = 1e-4, double beta1 = 0.9,
                    double beta2 = 0.999, double eps = 1e-8);

// Checkpoint layout: one JSON header line (format tag, step, hyper-params,
// tensor names/sizes, optimizer flag, RNG state string), then the raw
// little-endian float64 parameter values in tensor_refs order, then the
// Adam first and second moments when present.
struct Checkpoint {
  HyperParams hp;
  int step = 0;
  ModelParams params;
  std::optional<AdamState> adam;
  std::string rng_state;  // serialized mt19937_64 stream state, may be empty
};

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const HyperParams& hp, int step,
                     const AdamState* adam = nullptr,
                     const std::string& rng_state = "");
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sgar
