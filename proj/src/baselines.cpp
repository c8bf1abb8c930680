#include "maps/baselines.hpp"

#include "maps/error.hpp"
#include "maps/selector.hpp"

#include <vector>

namespace maps {
namespace {

std::vector<int> policy_sizes(int input, const BaselineArchitecture& a,
                              int hidden, int output) {
  std::vector<int> s{input};
  for (int i = 0; i < hidden; ++i) s.push_back(a.hidden_width);
  s.push_back(output);
  return s;
}

void check(const TransitionBatch& batch, int state_dim, int action_dim) {
  require(batch.size() > 0, ErrorKind::invalid_argument, "empty batch");
  require(batch.states.rows() == state_dim && batch.actions.rows() == action_dim,
          ErrorKind::dimension_mismatch, "batch does not match the policy");
  require(batch.actions.allFinite(), ErrorKind::non_finite,
          "non-finite expert action");
}

}  // namespace

MlpParams make_single_policy(const BaselineArchitecture& arch,
                             std::uint64_t seed) {
  return init_params(
      policy_sizes(arch.state_dim, arch, arch.hidden_layers, arch.action_dim),
      seed);
}

MtBcModel make_mt_bc(const BaselineArchitecture& arch, std::uint64_t seed) {
  return MtBcModel{arch.num_tasks,
                   init_params(policy_sizes(arch.state_dim + arch.num_tasks,
                                            arch, arch.hidden_layers,
                                            arch.action_dim),
                               seed)};
}

MtmhBcModel make_mtmh_bc(const BaselineArchitecture& arch, std::uint64_t seed) {
  MtmhBcModel m;
  m.num_tasks = arch.num_tasks;
  // The trunk's last layer is tanh-activated, so trunk + head has the same
  // depth as the other baselines.
  m.trunk = init_params(policy_sizes(arch.state_dim, arch,
                                     arch.hidden_layers - 1, arch.hidden_width),
                        seed, /*activate_output=*/true);
  const int head_sizes[] = {arch.hidden_width, arch.action_dim};
  for (int k = 0; k < arch.num_tasks; ++k)
    m.heads.push_back(
        init_params(head_sizes, mix_seed(seed, static_cast<std::uint64_t>(k))));
  return m;
}

NetLoss plain_bc_loss(const MlpParams& net, const TransitionBatch& batch,
                      bool want_grads) {
  check(batch, net.input_size(), net.output_size());
  ForwardTrace trace;
  const Matrix residual = forward(net, batch.states, &trace) - batch.actions;
  const double b = static_cast<double>(batch.size());
  NetLoss out;
  out.value = residual.squaredNorm() / b;
  if (want_grads) {
    out.grads = zeros_like(net);
    backward(net, trace, (2.0 / b) * residual, out.grads);
  }
  return out;
}

MtBcLoss mt_bc_loss(const MtBcModel& model, const TransitionBatch& batch,
                    bool want_grads) {
  check(batch, model.net.input_size() - model.num_tasks,
        model.net.output_size());
  ForwardTrace trace;
  const Matrix in = selector_input(batch.states, batch.tasks, model.num_tasks);
  const Matrix residual = forward(model.net, in, &trace) - batch.actions;
  const double b = static_cast<double>(batch.size());
  MtBcLoss out;
  out.value = residual.squaredNorm() / b;
  if (want_grads) {
    out.grads = MtBcModel{model.num_tasks, zeros_like(model.net)};
    backward(model.net, trace, (2.0 / b) * residual, out.grads.net);
  }
  return out;
}

MtmhBcLoss mtmh_bc_loss(const MtmhBcModel& model, const TransitionBatch& batch,
                        bool want_grads) {
  check(batch, model.trunk.input_size(), model.heads.front().output_size());
  ForwardTrace trunk_trace;
  const Matrix shared = forward(model.trunk, batch.states, &trunk_trace);
  const double b = static_cast<double>(batch.size());

  MtmhBcLoss out;
  if (want_grads) {
    out.grads.num_tasks = model.num_tasks;
    out.grads.trunk = zeros_like(model.trunk);
    for (const auto& h : model.heads) out.grads.heads.push_back(zeros_like(h));
  }
  Matrix shared_grad = Matrix::Zero(shared.rows(), shared.cols());
  double total = 0.0;
  for (int k = 0; k < model.num_tasks; ++k) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index s = 0; s < batch.size(); ++s)
      if (batch.tasks[static_cast<std::size_t>(s)] == k) cols.push_back(s);
    if (cols.empty()) continue;
    Matrix in(shared.rows(), static_cast<Eigen::Index>(cols.size()));
    Matrix target(batch.actions.rows(), in.cols());
    for (Eigen::Index j = 0; j < in.cols(); ++j) {
      in.col(j) = shared.col(cols[static_cast<std::size_t>(j)]);
      target.col(j) = batch.actions.col(cols[static_cast<std::size_t>(j)]);
    }
    ForwardTrace head_trace;
    const Matrix residual = forward(model.heads[k], in, &head_trace) - target;
    total += residual.squaredNorm();
    if (want_grads) {
      Matrix in_grad;
      backward(model.heads[k], head_trace, (2.0 / b) * residual,
               out.grads.heads[k], &in_grad);
      for (Eigen::Index j = 0; j < in.cols(); ++j)
        shared_grad.col(cols[static_cast<std::size_t>(j)]) = in_grad.col(j);
    }
  }
  out.value = total / b;
  if (want_grads) backward(model.trunk, trunk_trace, shared_grad, out.grads.trunk);
  return out;
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::maps: return "maps";
    case Method::single: return "single";
    case Method::mt: return "mt";
    case Method::mtmh: return "mtmh";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::maps, Method::single, Method::mt, Method::mtmh})
    if (to_string(m) == name) return m;
  fail(ErrorKind::invalid_argument,
       "unknown method '" + std::string(name) + "' (maps|single|mt|mtmh)");
}

Method method_of(const AnyModel& model) {
  return static_cast<Method>(model.index());
}

int num_tasks_of(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MapsModel>) return m.arch.num_tasks;
        else return m.num_tasks;
      },
      model);
}

int action_dim_of(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MapsModel>) return m.arch.action_dim;
        else if constexpr (std::is_same_v<T, SingleBcAgents>)
          return m.nets.front().output_size();
        else if constexpr (std::is_same_v<T, MtBcModel>)
          return m.net.output_size();
        else return m.heads.front().output_size();
      },
      model);
}

Matrix act(const AnyModel& model, const Matrix& states,
           std::span<const int> tasks) {
  require(static_cast<Eigen::Index>(tasks.size()) == states.cols(),
          ErrorKind::dimension_mismatch, "act: task count != state count");
  return std::visit(
      [&](const auto& m) -> Matrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MapsModel>) {
          return policy_forward(m, states, tasks).actions;
        } else if constexpr (std::is_same_v<T, MtBcModel>) {
          return forward(m.net, selector_input(states, tasks, m.num_tasks));
        } else {
          Matrix out(action_dim_of(model), states.cols());
          std::vector<std::vector<Eigen::Index>> cols(static_cast<std::size_t>(m.num_tasks));
          for (Eigen::Index s = 0; s < states.cols(); ++s) {
            const int k = tasks[static_cast<std::size_t>(s)];
            require(k >= 0 && k < m.num_tasks, ErrorKind::invalid_argument,
                    "act: task out of range");
            cols[static_cast<std::size_t>(k)].push_back(s);
          }
          for (int k = 0; k < m.num_tasks; ++k) {
            const auto& idx = cols[static_cast<std::size_t>(k)];
            if (idx.empty()) continue;
            const Matrix x = states(Eigen::all, idx);
            if constexpr (std::is_same_v<T, SingleBcAgents>) {
              out(Eigen::all, idx) = forward(m.nets[k], x);
            } else {
              out(Eigen::all, idx) = forward(m.heads[k], forward(m.trunk, x));
            }
          }
          return out;
        }
      },
      model);
}

Vector act(const AnyModel& model, const Vector& state, int task) {
  const Matrix states = state;
  const int tasks[] = {task};
  return act(model, states, tasks).col(0);
}

}  // namespace maps
