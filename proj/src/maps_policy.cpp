#include "maps/maps_policy.hpp"

#include "maps/error.hpp"

#include <cmath>

namespace maps {
namespace {

std::vector<int> hidden_stack(int input, int width, int hidden, int output) {
  std::vector<int> sizes{input};
  for (int i = 0; i < hidden; ++i) sizes.push_back(width);
  sizes.push_back(output);
  return sizes;
}

void check_batch(const MapsModel& model, const TransitionBatch& batch) {
  const auto& a = model.arch;
  require(batch.size() > 0, ErrorKind::invalid_argument, "empty batch");
  require(batch.states.rows() == a.state_dim &&
              batch.actions.rows() == a.action_dim &&
              batch.actions.cols() == batch.size() &&
              static_cast<Eigen::Index>(batch.tasks.size()) == batch.size(),
          ErrorKind::dimension_mismatch, "batch does not match the model");
  require(batch.actions.allFinite(), ErrorKind::non_finite,
          "non-finite expert action");
}

// Evaluates the selector on one wide input: for the regularized loss the
// columns are [K sweeps of the b states | P predecessor states]; for plain
// BC they are just the b states under their own task.
struct SelectorLayout {
  bool sweep = false;
  Eigen::Index b = 0;
  int K = 0;
  std::vector<Eigen::Index> own_column;   // per sample
  std::vector<Eigen::Index> pair_sample;  // sample index of each pair
  Eigen::Index pair_offset = 0;
};

SelectorLayout layout_for(const TransitionBatch& batch, int K, bool sweep) {
  SelectorLayout L;
  L.sweep = sweep;
  L.b = batch.size();
  L.K = K;
  L.own_column.resize(static_cast<std::size_t>(L.b));
  for (Eigen::Index s = 0; s < L.b; ++s) {
    L.own_column[static_cast<std::size_t>(s)] =
        sweep ? batch.tasks[static_cast<std::size_t>(s)] * L.b + s : s;
  }
  if (sweep) {
    for (Eigen::Index s = 0; s < L.b; ++s)
      if (!batch.has_prev.empty() && batch.has_prev[static_cast<std::size_t>(s)])
        L.pair_sample.push_back(s);
    L.pair_offset = static_cast<Eigen::Index>(K) * L.b;
  }
  return L;
}

Matrix build_selector_input(const TransitionBatch& batch,
                            const SelectorLayout& L, int state_dim) {
  const Eigen::Index P = static_cast<Eigen::Index>(L.pair_sample.size());
  const Eigen::Index cols = L.sweep ? L.pair_offset + P : L.b;
  Matrix in = Matrix::Zero(state_dim + L.K, cols);
  if (!L.sweep) {
    in.topRows(state_dim) = batch.states;
    for (Eigen::Index s = 0; s < L.b; ++s)
      in(state_dim + batch.tasks[static_cast<std::size_t>(s)], s) = 1.0;
    return in;
  }
  for (int k = 0; k < L.K; ++k) {
    in.block(0, k * L.b, state_dim, L.b) = batch.states;
    in.block(state_dim + k, k * L.b, 1, L.b).setOnes();
  }
  for (Eigen::Index p = 0; p < P; ++p) {
    const auto s = L.pair_sample[static_cast<std::size_t>(p)];
    in.block(0, L.pair_offset + p, state_dim, 1) = batch.prev_states.col(s);
    in(state_dim + batch.tasks[static_cast<std::size_t>(s)], L.pair_offset + p) = 1.0;
  }
  return in;
}

MapsLoss evaluate(const MapsModel& model, const TransitionBatch& batch,
                  const TotalLossWeights& tw, const SelectorLossWeights& sw,
                  bool regularized, bool want_grads) {
  check_batch(model, batch);
  const auto& arch = model.arch;
  const int M = arch.num_modules;
  const int K = arch.num_tasks;
  const Eigen::Index d = arch.feature_dim;
  const Eigen::Index b = batch.size();

  // Modules see the state only.
  std::vector<ForwardTrace> module_traces(static_cast<std::size_t>(M));
  std::vector<Matrix> features(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i)
    features[i] = forward(model.modules[i], batch.states, &module_traces[i]);

  const SelectorLayout L = layout_for(batch, K, regularized);
  ForwardTrace sel_trace;
  const Matrix logits =
      forward(model.selector, build_selector_input(batch, L, arch.state_dim),
              &sel_trace);
  const Matrix scores = softmax_columns(logits);

  Matrix own(M, b);
  for (Eigen::Index s = 0; s < b; ++s)
    own.col(s) = scores.col(L.own_column[static_cast<std::size_t>(s)]);

  const Matrix head_in = gate_features(features, own);
  ForwardTrace head_trace;
  const Matrix actions = forward(model.head, head_in, &head_trace);

  const Matrix residual = actions - batch.actions;
  MapsLoss out;
  out.value.bc = residual.squaredNorm() / static_cast<double>(b);

  SelectorLossResult sel;
  std::vector<Matrix> by_task;
  Matrix pair_cur, pair_prev;
  if (regularized) {
    by_task.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) by_task.push_back(scores.middleCols(k * b, b));
    const auto P = static_cast<Eigen::Index>(L.pair_sample.size());
    pair_cur.resize(M, P);
    for (Eigen::Index p = 0; p < P; ++p)
      pair_cur.col(p) = own.col(L.pair_sample[static_cast<std::size_t>(p)]);
    pair_prev = scores.middleCols(L.pair_offset, P);
    SelectorLossInput input{by_task, &own, &pair_cur, &pair_prev};
    sel = selector_loss(input, sw);
    out.value.terms = sel.terms;
    out.value.total = tw.imitate * out.value.bc + tw.selector * sel.value;
  } else {
    out.value.total = out.value.bc;
  }
  if (!std::isfinite(out.value.total)) return out;
  if (!want_grads) return out;

  out.grads = zeros_like(model);
  const double imitate = regularized ? tw.imitate : 1.0;

  // Head.
  const Matrix action_grad = (2.0 * imitate / static_cast<double>(b)) * residual;
  Matrix head_in_grad;
  backward(model.head, head_trace, action_grad, out.grads.head, &head_in_grad);

  // Gating: head_in block i = g_i * mu_i.
  Matrix own_grad(M, b);
  for (int i = 0; i < M; ++i) {
    const auto block = head_in_grad.middleRows(i * d, d);
    own_grad.row(i) =
        (block.array() * features[i].array()).colwise().sum().matrix();
    const Matrix feat_grad =
        block.array().rowwise() * own.row(i).array();
    backward(model.modules[i], module_traces[i], feat_grad,
             out.grads.modules[i]);
  }

  // Selector: scatter everything onto the wide score matrix.
  Matrix scores_grad = Matrix::Zero(M, scores.cols());
  if (regularized) {
    const double ws = tw.selector;
    for (int k = 0; k < K; ++k)
      scores_grad.middleCols(k * b, b) += ws * sel.grad_by_task[k];
    own_grad += ws * sel.grad_own;
    for (std::size_t p = 0; p < L.pair_sample.size(); ++p) {
      own_grad.col(L.pair_sample[p]) +=
          ws * sel.grad_pair_current.col(static_cast<Eigen::Index>(p));
      scores_grad.col(L.pair_offset + static_cast<Eigen::Index>(p)) +=
          ws * sel.grad_pair_previous.col(static_cast<Eigen::Index>(p));
    }
  }
  for (Eigen::Index s = 0; s < b; ++s)
    scores_grad.col(L.own_column[static_cast<std::size_t>(s)]) += own_grad.col(s);
  backward(model.selector, sel_trace, softmax_backward(scores, scores_grad),
           out.grads.selector);
  return out;
}

}  // namespace

void MapsArchitecture::validate() const {
  require(state_dim >= 1 && action_dim >= 1 && num_tasks >= 1,
          ErrorKind::invalid_argument, "architecture: non-positive dimension");
  require(num_modules >= 2, ErrorKind::invalid_argument,
          "architecture: need at least two modules (M = 1 is rejected)");
  require(feature_dim >= 1 && hidden_width >= 1 && module_hidden_layers >= 0 &&
              selector_hidden_layers >= 0,
          ErrorKind::invalid_argument, "architecture: bad layer sizes");
}

MapsModel make_maps_model(const MapsArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  MapsModel m;
  m.arch = arch;
  const auto module_sizes = hidden_stack(arch.state_dim, arch.hidden_width,
                                         arch.module_hidden_layers,
                                         arch.feature_dim);
  for (int i = 0; i < arch.num_modules; ++i)
    m.modules.push_back(
        init_params(module_sizes, mix_seed(seed, static_cast<std::uint64_t>(i))));
  m.selector = init_params(
      hidden_stack(arch.state_dim + arch.num_tasks, arch.hidden_width,
                   arch.selector_hidden_layers, arch.num_modules),
      mix_seed(seed, 1000));
  const int head_sizes[] = {arch.num_modules * arch.feature_dim,
                            arch.action_dim};
  m.head = init_params(head_sizes, mix_seed(seed, 2000));
  return m;
}

MapsModel zeros_like(const MapsModel& like) {
  MapsModel z;
  z.arch = like.arch;
  for (const auto& m : like.modules) z.modules.push_back(zeros_like(m));
  z.selector = zeros_like(like.selector);
  z.head = zeros_like(like.head);
  return z;
}

std::vector<MlpParams*> networks(MapsModel& model) {
  std::vector<MlpParams*> out;
  for (auto& m : model.modules) out.push_back(&m);
  out.push_back(&model.selector);
  out.push_back(&model.head);
  return out;
}

std::vector<const MlpParams*> networks(const MapsModel& model) {
  std::vector<const MlpParams*> out;
  for (const auto& m : model.modules) out.push_back(&m);
  out.push_back(&model.selector);
  out.push_back(&model.head);
  return out;
}

void TotalLossWeights::validate() const {
  require(std::isfinite(imitate) && std::isfinite(selector) && imitate >= 0.0 &&
              selector >= 0.0,
          ErrorKind::invalid_argument,
          "total loss weights must be finite and non-negative");
}

Matrix gate_features(std::span<const Matrix> features, const Matrix& scores) {
  const auto M = static_cast<Eigen::Index>(features.size());
  require(scores.rows() == M, ErrorKind::dimension_mismatch,
          "gate_features: score rows != module count");
  const Eigen::Index d = features.empty() ? 0 : features[0].rows();
  Matrix out(M * d, scores.cols());
  for (Eigen::Index i = 0; i < M; ++i) {
    require(features[i].cols() == scores.cols() && features[i].rows() == d,
            ErrorKind::dimension_mismatch, "gate_features: feature shape");
    out.middleRows(i * d, d) =
        features[i].array().rowwise() * scores.row(i).array();
  }
  return out;
}

PolicyPass policy_forward(const MapsModel& model, const Matrix& states,
                          std::span<const int> tasks,
                          const Matrix* forced_scores) {
  const auto& arch = model.arch;
  require(states.rows() == arch.state_dim, ErrorKind::dimension_mismatch,
          "policy_forward: state length " + std::to_string(states.rows()) +
              " != " + std::to_string(arch.state_dim));
  PolicyPass pass;
  if (forced_scores != nullptr) {
    require(forced_scores->rows() == arch.num_modules &&
                forced_scores->cols() == states.cols(),
            ErrorKind::dimension_mismatch, "policy_forward: forced scores shape");
    pass.scores = *forced_scores;
  } else {
    pass.scores =
        selector_scores(model.selector, states, tasks, arch.num_tasks).scores;
  }
  for (const auto& m : model.modules) pass.features.push_back(forward(m, states));
  pass.actions = forward(model.head, gate_features(pass.features, pass.scores));
  return pass;
}

MapsLoss bc_loss(const MapsModel& model, const TransitionBatch& batch,
                 bool want_grads) {
  return evaluate(model, batch, TotalLossWeights{1.0, 0.0},
                  SelectorLossWeights{}, false, want_grads);
}

MapsLoss total_loss(const MapsModel& model, const TransitionBatch& batch,
                    const TotalLossWeights& total_weights,
                    const SelectorLossWeights& selector_weights,
                    bool want_grads) {
  total_weights.validate();
  selector_weights.validate();
  return evaluate(model, batch, total_weights, selector_weights, true,
                  want_grads);
}

}  // namespace maps
