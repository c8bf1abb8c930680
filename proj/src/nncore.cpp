#include "maps/nncore.hpp"

#include "maps/error.hpp"
#include "maps/kernels.hpp"

#include <cmath>
#include <random>

namespace maps {
namespace {

void check_trace(const MlpParams& params, const ForwardTrace& trace,
                 const Matrix& output_grad) {
  const auto layers = static_cast<std::size_t>(params.num_layers());
  require(trace.pre_activations.size() == layers &&
              trace.activations.size() == layers + 1,
          ErrorKind::dimension_mismatch, "backward: trace depth != layer count");
  for (std::size_t l = 0; l < layers; ++l) {
    require(trace.activations[l].rows() == params.weights[l].cols() &&
                trace.pre_activations[l].rows() == params.weights[l].rows(),
            ErrorKind::dimension_mismatch,
            "backward: trace does not match parameters");
  }
  require(output_grad.rows() == params.output_size() &&
              output_grad.cols() == trace.output().cols(),
          ErrorKind::dimension_mismatch, "backward: output_grad shape");
}

bool hidden(const MlpParams& params, int layer) {
  return layer + 1 < params.num_layers() || params.activate_output;
}

template <typename DenseForward, typename TanhForward>
Matrix forward_impl(const MlpParams& params, const Matrix& input,
                    ForwardTrace* trace, DenseForward dense, TanhForward act) {
  require(input.rows() == params.input_size(), ErrorKind::dimension_mismatch,
          "forward: input length " + std::to_string(input.rows()) +
              " != " + std::to_string(params.input_size()));
  const int layers = params.num_layers();
  if (trace != nullptr) {
    trace->pre_activations.resize(static_cast<std::size_t>(layers));
    trace->activations.resize(static_cast<std::size_t>(layers) + 1);
    trace->activations[0] = input;
  }
  Matrix current = input;
  Matrix pre;
  for (int l = 0; l < layers; ++l) {
    dense(params.weights[l], params.biases[l], current, pre);
    if (hidden(params, l)) {
      act(pre, current);
    } else {
      current = pre;
    }
    if (trace != nullptr) {
      trace->pre_activations[l] = pre;
      trace->activations[l + 1] = current;
    }
  }
  return current;
}

template <typename DenseBackward, typename TanhBackward>
void backward_impl(const MlpParams& params, const ForwardTrace& trace,
                   const Matrix& output_grad, MlpParams& param_grads,
                   Matrix* input_grad, DenseBackward dense, TanhBackward act) {
  check_trace(params, trace, output_grad);
  require(param_grads.num_layers() == params.num_layers(),
          ErrorKind::dimension_mismatch, "backward: gradient layer count");
  Matrix grad = output_grad;
  Matrix next;
  for (int l = params.num_layers() - 1; l >= 0; --l) {
    if (hidden(params, l)) act(trace.activations[l + 1], grad);
    Matrix* down = (l > 0 || input_grad != nullptr) ? &next : nullptr;
    dense(params.weights[l], trace.activations[l], grad, param_grads.weights[l],
          param_grads.biases[l], down);
    if (down != nullptr) grad.swap(next);
  }
  if (input_grad != nullptr) *input_grad = std::move(grad);
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

bool MlpParams::operator==(const MlpParams& other) const {
  if (layer_sizes != other.layer_sizes ||
      activate_output != other.activate_output)
    return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != other.weights[l] || biases[l] != other.biases[l])
      return false;
  }
  return true;
}

MlpParams init_params(std::span<const int> layer_sizes, std::uint64_t seed,
                      bool activate_output) {
  require(layer_sizes.size() >= 2, ErrorKind::invalid_argument,
          "init_params: need at least an input and an output size");
  for (int s : layer_sizes)
    require(s >= 1, ErrorKind::invalid_argument,
            "init_params: layer sizes must be positive");

  MlpParams p;
  p.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  p.activate_output = activate_output;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Vector::Zero(fan_out));
  }
  return p;
}

MlpParams zeros_like(const MlpParams& like) {
  MlpParams z = like;
  set_zero(z);
  return z;
}

void set_zero(MlpParams& params) {
  for (auto& w : params.weights) w.setZero();
  for (auto& b : params.biases) b.setZero();
}

bool all_finite(const MlpParams& params) {
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    if (!params.weights[l].allFinite() || !params.biases[l].allFinite())
      return false;
  }
  return true;
}

Matrix forward(const MlpParams& params, const Matrix& input,
               ForwardTrace* trace) {
  return forward_impl(
      params, input, trace,
      [](const Matrix& w, const Vector& b, const Matrix& in, Matrix& out) {
        kernels::dense_forward(w, b, in, out);
      },
      [](const Matrix& pre, Matrix& out) { kernels::tanh_forward(pre, out); });
}

Vector forward(const MlpParams& params, const Vector& input) {
  Matrix in = input;
  return forward(params, in, nullptr).col(0);
}

void backward(const MlpParams& params, const ForwardTrace& trace,
              const Matrix& output_grad, MlpParams& param_grads,
              Matrix* input_grad) {
  backward_impl(params, trace, output_grad, param_grads, input_grad,
                kernels::dense_backward, kernels::tanh_backward);
}

namespace reference {

Matrix forward(const MlpParams& params, const Matrix& input,
               ForwardTrace* trace) {
  return forward_impl(params, input, trace, kernels::reference::dense_forward,
                      kernels::reference::tanh_forward);
}

void backward(const MlpParams& params, const ForwardTrace& trace,
              const Matrix& output_grad, MlpParams& param_grads,
              Matrix* input_grad) {
  backward_impl(params, trace, output_grad, param_grads, input_grad,
                kernels::reference::dense_backward,
                kernels::reference::tanh_backward);
}

}  // namespace reference

Vector softmax(const Vector& logits) {
  Matrix m = logits;
  return softmax_columns(m).col(0);
}

Matrix softmax_columns(const Matrix& logits) {
  require(logits.rows() >= 1, ErrorKind::invalid_argument,
          "softmax: need at least one logit");
  require(logits.allFinite(), ErrorKind::non_finite,
          "softmax: non-finite logit");
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double top = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - top).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

Matrix softmax_backward(const Matrix& probs, const Matrix& probs_grad) {
  require(probs.rows() == probs_grad.rows() && probs.cols() == probs_grad.cols(),
          ErrorKind::dimension_mismatch, "softmax_backward: shape");
  // dL/dz_j = p_j * (dL/dp_j - sum_i p_i dL/dp_i)
  const Eigen::RowVectorXd dots =
      (probs.array() * probs_grad.array()).colwise().sum();
  Matrix out = probs_grad;
  out.rowwise() -= dots;
  out.array() *= probs.array();
  return out;
}

AdamState AdamState::for_params(const MlpParams& params) {
  return AdamState{zeros_like(params), zeros_like(params), 0};
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state,
               const AdamOptions& options) {
  require(options.learning_rate > 0.0 && options.beta1 >= 0.0 &&
              options.beta1 < 1.0 && options.beta2 >= 0.0 &&
              options.beta2 < 1.0 && options.eps > 0.0,
          ErrorKind::invalid_argument, "adam_step: bad hyperparameters");
  require(grads.layer_sizes == params.layer_sizes &&
              state.first_moment.layer_sizes == params.layer_sizes &&
              state.second_moment.layer_sizes == params.layer_sizes,
          ErrorKind::dimension_mismatch, "adam_step: shape mismatch");
  require(all_finite(grads), ErrorKind::non_finite,
          "adam_step: non-finite gradient");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(options.beta1, t);
  const double c2 = 1.0 - std::pow(options.beta2, t);
  const double b1 = options.beta1;
  const double b2 = options.beta2;

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m.array() = b1 * m.array() + (1.0 - b1) * g.array();
    v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
    p.array() -= options.learning_rate * (m.array() / c1) /
                 ((v.array() / c2).sqrt() + options.eps);
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], grads.weights[l], state.first_moment.weights[l],
           state.second_moment.weights[l]);
    update(params.biases[l], grads.biases[l], state.first_moment.biases[l],
           state.second_moment.biases[l]);
  }
}

}  // namespace maps
