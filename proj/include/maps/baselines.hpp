#pragma once

#include "maps/dataset.hpp"
#include "maps/maps_policy.hpp"
#include "maps/nncore.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace maps {

/// Independent per-task policies; `nets[k]` serves task k.
struct SingleBcAgents {
  int num_tasks = 0;
  std::vector<MlpParams> nets;

  bool operator==(const SingleBcAgents&) const = default;
};

/// One policy with the task one-hot appended to the state.
struct MtBcModel {
  int num_tasks = 0;
  MlpParams net;

  bool operator==(const MtBcModel&) const = default;
};

/// Shared tanh trunk with one affine output head per task.
struct MtmhBcModel {
  int num_tasks = 0;
  MlpParams trunk;
  std::vector<MlpParams> heads;

  bool operator==(const MtmhBcModel&) const = default;
};

/// Layer sizes shared by every baseline policy.
struct BaselineArchitecture {
  int state_dim = 0;
  int action_dim = 0;
  int num_tasks = 0;
  int hidden_width = 128;
  int hidden_layers = 3;
};

MlpParams make_single_policy(const BaselineArchitecture& arch,
                             std::uint64_t seed);
MtBcModel make_mt_bc(const BaselineArchitecture& arch, std::uint64_t seed);
MtmhBcModel make_mtmh_bc(const BaselineArchitecture& arch, std::uint64_t seed);

struct NetLoss {
  double value = 0.0;
  MlpParams grads;
};

/// Mean squared action error of a plain policy (no task input).
NetLoss plain_bc_loss(const MlpParams& net, const TransitionBatch& batch,
                      bool want_grads = true);

struct MtBcLoss {
  double value = 0.0;
  MtBcModel grads;
};
MtBcLoss mt_bc_loss(const MtBcModel& model, const TransitionBatch& batch,
                    bool want_grads = true);

struct MtmhBcLoss {
  double value = 0.0;
  MtmhBcModel grads;
};
/// Each sample is routed through the head of its task; the other heads get
/// no gradient from it.
MtmhBcLoss mtmh_bc_loss(const MtmhBcModel& model, const TransitionBatch& batch,
                        bool want_grads = true);

enum class Method { maps, single, mt, mtmh };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view name);

using AnyModel = std::variant<MapsModel, SingleBcAgents, MtBcModel, MtmhBcModel>;

Method method_of(const AnyModel& model);
int num_tasks_of(const AnyModel& model);
int action_dim_of(const AnyModel& model);

/// Batched actions for (state, task) columns.
Matrix act(const AnyModel& model, const Matrix& states,
           std::span<const int> tasks);
Vector act(const AnyModel& model, const Vector& state, int task);

}  // namespace maps
