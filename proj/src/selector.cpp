#include "maps/selector.hpp"

#include "maps/error.hpp"

#include <cmath>

namespace maps {

void SelectorLossWeights::validate() const {
  for (double v : {share, explore, sparse, smooth}) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::invalid_argument,
            "selector loss weights must be finite and non-negative");
  }
}

Matrix one_hot_tasks(std::span<const int> tasks, int num_tasks) {
  Matrix enc = Matrix::Zero(num_tasks, static_cast<Eigen::Index>(tasks.size()));
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    require(tasks[i] >= 0 && tasks[i] < num_tasks, ErrorKind::invalid_argument,
            "task index " + std::to_string(tasks[i]) + " out of range");
    enc(tasks[i], static_cast<Eigen::Index>(i)) = 1.0;
  }
  return enc;
}

Matrix selector_input(const Matrix& states, std::span<const int> tasks,
                      int num_tasks) {
  require(static_cast<std::size_t>(states.cols()) == tasks.size(),
          ErrorKind::dimension_mismatch, "selector_input: task count != batch");
  Matrix in(states.rows() + num_tasks, states.cols());
  in.topRows(states.rows()) = states;
  in.bottomRows(num_tasks) = one_hot_tasks(tasks, num_tasks);
  return in;
}

SelectorPass selector_scores(const MlpParams& selector, const Matrix& states,
                             std::span<const int> tasks, int num_tasks) {
  require(selector.input_size() == states.rows() + num_tasks,
          ErrorKind::dimension_mismatch,
          "selector input size != state_dim + num_tasks");
  SelectorPass pass;
  const Matrix logits =
      forward(selector, selector_input(states, tasks, num_tasks), &pass.trace);
  pass.scores = softmax_columns(logits);
  return pass;
}

Vector selector_scores(const MlpParams& selector, const Vector& state, int task,
                       int num_tasks) {
  const Matrix states = state;
  const int tasks[] = {task};
  return selector_scores(selector, states, tasks, num_tasks).scores.col(0);
}

void selector_backward(const MlpParams& selector, const SelectorPass& pass,
                       const Matrix& scores_grad, MlpParams& grads) {
  backward(selector, pass.trace, softmax_backward(pass.scores, scores_grad),
           grads);
}

ScoreLoss sharing_loss(std::span<const Matrix> scores_by_task) {
  ScoreLoss out;
  const auto K = static_cast<int>(scores_by_task.size());
  if (K < 2) {
    out.flagged = true;
    if (K == 1) out.grad = Matrix::Zero(scores_by_task[0].rows(), scores_by_task[0].cols());
    return out;
  }
  const Eigen::Index M = scores_by_task[0].rows();
  const Eigen::Index b = scores_by_task[0].cols();
  for (const auto& s : scores_by_task)
    require(s.rows() == M && s.cols() == b, ErrorKind::dimension_mismatch,
            "sharing_loss: score matrices differ in shape");
  require(b > 0, ErrorKind::invalid_argument, "sharing_loss: empty batch");

  const double pairs = 0.5 * K * (K - 1);
  const double scale = 1.0 / (static_cast<double>(M) * static_cast<double>(b) * pairs);
  // Kept per task so the caller can scatter it back onto K selector passes.
  std::vector<Matrix> grads(static_cast<std::size_t>(K), Matrix::Zero(M, b));
  double total = 0.0;
  for (int k1 = 0; k1 < K; ++k1) {
    for (int k2 = k1 + 1; k2 < K; ++k2) {
      const Matrix diff = scores_by_task[k1] - scores_by_task[k2];
      total += diff.squaredNorm();
      grads[k1] += 2.0 * scale * diff;
      grads[k2] -= 2.0 * scale * diff;
    }
  }
  out.value = scale * total;
  // Pack the K gradients side by side: columns [k*b, (k+1)*b) belong to task k.
  out.grad.resize(M, b * K);
  for (int k = 0; k < K; ++k) out.grad.middleCols(k * b, b) = grads[k];
  return out;
}

ScoreLoss exploration_loss(const Matrix& scores) {
  const Eigen::Index b = scores.cols();
  require(b > 0, ErrorKind::invalid_argument, "exploration_loss: empty batch");
  const double M = static_cast<double>(scores.rows());
  const double bd = static_cast<double>(b);
  const Vector residual =
      (bd / M) - scores.rowwise().sum().array();  // b/M - column mass per module
  ScoreLoss out;
  out.value = M / (bd * bd) * residual.squaredNorm();
  // d/dg_{i,s} = -2 (M/b^2) residual_i
  out.grad = (-2.0 * M / (bd * bd) * residual).replicate(1, b);
  return out;
}

double sparsity_value(const Vector& row) {
  const auto M = row.size();
  require(M >= 2, ErrorKind::invalid_argument,
          "sparsity needs at least two modules");
  const double p = 1.0 / std::log(static_cast<double>(M));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < M; ++i) {
    const double g = std::max(row(i), kScoreFloor);
    acc += std::pow(g, p) * std::log(g);
  }
  return -acc / static_cast<double>(M);
}

ScoreLoss sparsity_loss(const Matrix& scores) {
  const Eigen::Index M = scores.rows();
  const Eigen::Index b = scores.cols();
  require(M >= 2, ErrorKind::invalid_argument,
          "sparsity_loss: M = 1 leaves the exponent 1/ln M undefined");
  require(b > 0, ErrorKind::invalid_argument, "sparsity_loss: empty batch");
  const double p = 1.0 / std::log(static_cast<double>(M));
  const double scale = 1.0 / (static_cast<double>(M) * static_cast<double>(b));
  ScoreLoss out;
  out.grad.resize(M, b);
  double acc = 0.0;
  for (Eigen::Index c = 0; c < b; ++c) {
    for (Eigen::Index i = 0; i < M; ++i) {
      const double raw = scores(i, c);
      const double g = std::max(raw, kScoreFloor);
      const double gp = std::pow(g, p);
      const double lg = std::log(g);
      acc += gp * lg;
      // d/dg [-g^p ln g] = -g^(p-1) (p ln g + 1); zero where clamped.
      out.grad(i, c) =
          raw > kScoreFloor ? -scale * (gp / g) * (p * lg + 1.0) : 0.0;
    }
  }
  out.value = -scale * acc;
  return out;
}

PairLoss smoothness_loss(const Matrix& current, const Matrix& previous) {
  require(current.rows() == previous.rows() && current.cols() == previous.cols(),
          ErrorKind::dimension_mismatch, "smoothness_loss: shape mismatch");
  PairLoss out;
  const Eigen::Index P = current.cols();
  if (P == 0) {
    out.flagged = true;
    out.grad_current = Matrix::Zero(current.rows(), 0);
    out.grad_previous = Matrix::Zero(current.rows(), 0);
    return out;
  }
  const double scale =
      1.0 / (static_cast<double>(current.rows()) * static_cast<double>(P));
  const Matrix diff = current - previous;
  out.value = scale * diff.squaredNorm();
  out.grad_current = 2.0 * scale * diff;
  out.grad_previous = -out.grad_current;
  return out;
}

SelectorLossResult selector_loss(const SelectorLossInput& input,
                                 const SelectorLossWeights& weights) {
  weights.validate();
  SelectorLossResult out;

  const auto K = input.scores_by_task.size();
  out.grad_by_task.reserve(K);
  for (const auto& s : input.scores_by_task)
    out.grad_by_task.push_back(Matrix::Zero(s.rows(), s.cols()));
  if (K >= 2) {
    const ScoreLoss share = sharing_loss(input.scores_by_task);
    out.terms.share = share.value;
    const Eigen::Index b = input.scores_by_task[0].cols();
    for (std::size_t k = 0; k < K; ++k)
      out.grad_by_task[k] =
          weights.share * share.grad.middleCols(static_cast<Eigen::Index>(k) * b, b);
  }

  if (input.own_scores != nullptr && input.own_scores->cols() > 0) {
    const Matrix& own = *input.own_scores;
    const ScoreLoss explore = exploration_loss(own);
    const ScoreLoss sparse = sparsity_loss(own);
    out.terms.explore = explore.value;
    out.terms.sparse = sparse.value;
    out.grad_own = weights.explore * explore.grad + weights.sparse * sparse.grad;
  }

  if (input.pair_current != nullptr && input.pair_previous != nullptr) {
    const PairLoss smooth =
        smoothness_loss(*input.pair_current, *input.pair_previous);
    out.terms.smooth = smooth.value;
    out.grad_pair_current = weights.smooth * smooth.grad_current;
    out.grad_pair_previous = weights.smooth * smooth.grad_previous;
  }

  out.value = out.terms.weighted(weights);
  return out;
}

}  // namespace maps
