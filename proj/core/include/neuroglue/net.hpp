#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "neuroglue/cnf.hpp"

namespace neuroglue {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct HyperParams {
  int literal_dim = 16;  // delta_L
  int clause_dim = 64;   // delta_C
  int iterations = 2;    // message-passing rounds
  int literal_layers = 2;
  int clause_layers = 2;
  int policy_layers = 3;
  double dropout = 0.15;
  double leaky_slope = 0.01;
  double ln_eps = 1e-5;
  bool value_head = false;

  static HyperParams supervised();
  static HyperParams rl();

  void validate() const;
  // Same tensor shapes (dropout, slope and eps may differ).
  bool same_architecture(const HyperParams& other) const;
  bool operator==(const HyperParams&) const = default;
};

struct Linear {
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Feed-forward network; LeakyReLU (and dropout in training) after every
// layer except the last.
struct Mlp {
  std::vector<Linear> layers;

  int in_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int out_dim() const { return static_cast<int>(layers.back().weight.rows()); }
};

struct NetParams {
  Vector l_init;   // delta_L
  Mlp c_update;    // 2 delta_L -> delta_C
  Mlp l_update;    // delta_C -> delta_L
  Mlp policy;      // 2 delta_L -> 1
  std::optional<Mlp> value;  // 2 delta_L -> 1
  Vector ln_scale;  // delta_L
  Vector ln_shift;  // delta_L

  // Zero tensors with the shapes `h` prescribes.
  static NetParams zeros(const HyperParams& h);
  NetParams zeros_like() const;
};

struct TensorView {
  std::string name;
  std::vector<int> dims;
  std::span<double> data;
};

struct ConstTensorView {
  std::string name;
  std::vector<int> dims;
  std::span<const double> data;
};

// Tensors in canonical (file) order.
std::vector<TensorView> tensor_views(NetParams& p);
std::vector<ConstTensorView> tensor_views(const NetParams& p);
std::size_t parameter_count(const NetParams& p);

// Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases, l_init ~
// N(0, 1/delta_L), LayerNorm scale 1 and shift 0.
NetParams init_params(const HyperParams& h, std::uint64_t seed);

struct ForwardOutput {
  std::vector<double> policy_logits;  // one per variable of the graph
  std::optional<double> value;        // in (0, 1) when the value head exists
};

// Intermediates kept by forward() for reverse-mode differentiation.
struct MlpCache {
  std::vector<Matrix> inputs;  // input of each layer
  std::vector<Matrix> pre;     // pre-activation of each hidden layer
  std::vector<Matrix> masks;   // scaled dropout masks (training only)
};

struct IterationCache {
  Matrix literals_in;  // L before the round
  MlpCache clause_mlp;
  Matrix clause_hat;   // standardized clause embeddings
  Vector clause_rstd;
  MlpCache literal_mlp;
  Matrix literal_hat;  // LayerNorm input, normalized
  Vector literal_rstd;
};

struct ForwardTape {
  std::vector<IterationCache> iterations;
  Matrix final_literals;
  MlpCache policy_mlp;
  MlpCache value_mlp;
  double value = 0.0;
  bool train_mode = false;
};

// Full message-passing forward pass. When `tape` is given, every
// intermediate needed by backward() is recorded.
ForwardOutput forward(const NetParams& p, const HyperParams& h, const SparseGraph& g,
                      bool train_mode = false, std::uint64_t dropout_seed = 0,
                      ForwardTape* tape = nullptr);

// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logits) and
// d(loss)/d(value) for the pass recorded in `tape`.
void backward(const NetParams& p, const HyperParams& h, const SparseGraph& g,
              const ForwardTape& tape, std::span<const double> dlogits, double dvalue,
              NetParams& grad);

// Exposed for tests of the normalization invariants.
Matrix standardize_rows(const Matrix& x, double eps);

// NGW1 weight files.
void save_weights(const std::string& path, const NetParams& p, const HyperParams& h);
// If `require` is set, its architecture must match the file's.
std::pair<NetParams, HyperParams> load_weights(
    const std::string& path, const std::optional<HyperParams>& require = std::nullopt);

}  // namespace neuroglue
