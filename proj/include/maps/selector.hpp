#pragma once

#include "maps/nncore.hpp"

#include <span>
#include <vector>

namespace maps {

// Score matrices are (M, b): one column of M module scores per sample.

/// Weights of the four selector regularizers. Defaults are the
/// manipulation-suite setting (share 1, explore 0.1, sparse 0.5, smooth 1).
struct SelectorLossWeights {
  double share = 1.0;
  double explore = 0.1;
  double sparse = 0.5;
  double smooth = 1.0;

  void validate() const;
};

/// Lower clamp applied to scores before taking logarithms.
inline constexpr double kScoreFloor = 1e-12;

/// A scalar loss with its gradient with respect to the score matrix.
/// `flagged` marks a degenerate input where the loss is defined as zero
/// (fewer than two tasks, no consecutive pairs).
struct ScoreLoss {
  double value = 0.0;
  Matrix grad;
  bool flagged = false;
};

struct PairLoss {
  double value = 0.0;
  Matrix grad_current;
  Matrix grad_previous;
  bool flagged = false;
};

/// One-hot task encodings, (num_tasks, b).
Matrix one_hot_tasks(std::span<const int> tasks, int num_tasks);

/// Selector input: states stacked over their one-hot task encodings.
Matrix selector_input(const Matrix& states, std::span<const int> tasks,
                      int num_tasks);

struct SelectorPass {
  Matrix scores;  // (M, b)
  ForwardTrace trace;
};

/// g(s, k) = softmax(G_w(s, k)) for every column.
SelectorPass selector_scores(const MlpParams& selector, const Matrix& states,
                             std::span<const int> tasks, int num_tasks);

Vector selector_scores(const MlpParams& selector, const Vector& state,
                       int task, int num_tasks);

/// Backpropagates d loss / d scores into `grads` (same shape as `selector`).
void selector_backward(const MlpParams& selector, const SelectorPass& pass,
                       const Matrix& scores_grad, MlpParams& grads);

/// Mean squared score difference over modules, states and the C(K,2)
/// unordered task pairs. `scores_by_task[k]` holds g(s, k) for the same b
/// states. The gradient is packed (M, K*b): columns [k*b, (k+1)*b) hold
/// d loss / d scores_by_task[k]. K < 2 returns a flagged zero.
ScoreLoss sharing_loss(std::span<const Matrix> scores_by_task);

/// (M / b^2) * sum_i (b/M - sum_samples g_i)^2.
ScoreLoss exploration_loss(const Matrix& scores);

/// -(1 / (M b)) * sum g^(1/ln M) ln g with g clamped at kScoreFloor.
ScoreLoss sparsity_loss(const Matrix& scores);

/// Per-sample sparsity value -(1/M) sum_i g_i^(1/ln M) ln g_i.
double sparsity_value(const Vector& row);

/// (1 / (M P)) * sum ||g_t - g_{t-1}||^2 over the P columns of `current` and
/// `previous`. An empty pair list returns a flagged zero.
PairLoss smoothness_loss(const Matrix& current, const Matrix& previous);

struct SelectorTerms {
  double share = 0.0;
  double explore = 0.0;
  double sparse = 0.0;
  double smooth = 0.0;

  double weighted(const SelectorLossWeights& w) const {
    return w.share * share + w.explore * explore + w.sparse * sparse +
           w.smooth * smooth;
  }
  bool operator==(const SelectorTerms&) const = default;
};

/// Inputs of the combined selector loss for one batch.
struct SelectorLossInput {
  std::span<const Matrix> scores_by_task;  // K matrices (M, b), for sharing
  const Matrix* own_scores = nullptr;      // (M, b), each sample under its task
  const Matrix* pair_current = nullptr;    // (M, P)
  const Matrix* pair_previous = nullptr;   // (M, P)
};

struct SelectorLossResult {
  double value = 0.0;
  SelectorTerms terms;
  std::vector<Matrix> grad_by_task;  // d/d scores_by_task
  Matrix grad_own;
  Matrix grad_pair_current;
  Matrix grad_pair_previous;
};

/// share * L_share + explore * L_explore + sparse * L_sparse + smooth * L_smooth,
/// with the gradient of each input being the weighted sum of the components'.
SelectorLossResult selector_loss(const SelectorLossInput& input,
                                 const SelectorLossWeights& weights);

}  // namespace maps
