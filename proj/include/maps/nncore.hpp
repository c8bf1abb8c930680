#pragma once

#include "maps/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace maps {

/// Weights and biases of one fully connected network. Hidden layers use
/// tanh; the output layer is affine unless `activate_output` is set (used for
/// the shared trunk of the multi-headed baseline).
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;  // weights[l] is (layer_sizes[l+1], layer_sizes[l])
  std::vector<Vector> biases;
  bool activate_output = false;

  int num_layers() const { return static_cast<int>(weights.size()); }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t parameter_count() const;

  bool operator==(const MlpParams&) const;
};

/// Per-layer cache of one batched forward pass. `activations[0]` is the
/// input; `activations[l + 1]` is the output of layer l.
struct ForwardTrace {
  std::vector<Matrix> pre_activations;
  std::vector<Matrix> activations;

  const Matrix& output() const { return activations.back(); }
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
MlpParams init_params(std::span<const int> layer_sizes, std::uint64_t seed,
                      bool activate_output = false);

/// Same shapes as `like`, every entry zero.
MlpParams zeros_like(const MlpParams& like);

void set_zero(MlpParams& params);
bool all_finite(const MlpParams& params);

/// Batched forward pass, one sample per column of `input`.
Matrix forward(const MlpParams& params, const Matrix& input,
               ForwardTrace* trace = nullptr);

Vector forward(const MlpParams& params, const Vector& input);

/// Backpropagates `output_grad` (d objective / d output, same shape as the
/// traced output) through the network. Parameter gradients are accumulated
/// into `param_grads`; when `input_grad` is non-null it receives the
/// gradient with respect to the traced input.
void backward(const MlpParams& params, const ForwardTrace& trace,
              const Matrix& output_grad, MlpParams& param_grads,
              Matrix* input_grad = nullptr);

// Scalar-loop versions of forward/backward built on kernels::reference.
namespace reference {
Matrix forward(const MlpParams& params, const Matrix& input,
               ForwardTrace* trace = nullptr);
void backward(const MlpParams& params, const ForwardTrace& trace,
              const Matrix& output_grad, MlpParams& param_grads,
              Matrix* input_grad = nullptr);
}  // namespace reference

/// Numerically stable softmax (max subtraction). Rejects non-finite input.
Vector softmax(const Vector& logits);

/// Column-wise softmax of a (classes, batch) matrix.
Matrix softmax_columns(const Matrix& logits);

/// Gradient with respect to the logits given the softmax output `probs` and
/// the gradient with respect to the probabilities.
Matrix softmax_backward(const Matrix& probs, const Matrix& probs_grad);

struct AdamOptions {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  MlpParams first_moment;
  MlpParams second_moment;
  std::int64_t step = 0;

  static AdamState for_params(const MlpParams& params);
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state,
               const AdamOptions& options);

/// Calls `fn(value)` for every scalar parameter: layer by layer, weights in
/// storage order followed by biases.
template <typename Params, typename Fn>
void for_each_parameter(Params& params, Fn&& fn) {
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    auto& w = params.weights[l];
    for (Eigen::Index i = 0; i < w.size(); ++i) fn(w.data()[i]);
    auto& b = params.biases[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) fn(b.data()[i]);
  }
}

}  // namespace maps
