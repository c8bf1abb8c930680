#pragma once

#include "maps/types.hpp"

#include <vector>

namespace maps {

/// One demonstration: `states` is (state_dim, T), `actions` is
/// (action_dim, T); column t is the pair (s_t, a_t).
struct Trajectory {
  int task = 0;
  Matrix states;
  Matrix actions;

  Eigen::Index length() const { return states.cols(); }
  bool operator==(const Trajectory&) const = default;
};

/// Expert trajectories of every task. Task indices are dense in [0, K).
struct DemoDataset {
  int state_dim = 0;
  int action_dim = 0;
  int num_tasks = 0;
  std::vector<Trajectory> trajectories;

  /// Throws unless every trajectory is non-empty, finite, correctly shaped
  /// and every task in [0, K) has at least one trajectory.
  void validate() const;

  std::vector<std::vector<const Trajectory*>> by_task() const;
  std::size_t transition_count() const;
  std::size_t transition_count(int task) const;

  bool operator==(const DemoDataset&) const = default;
};

/// A batch of transitions. `prev_states.col(i)` is meaningful only when
/// `has_prev[i]` is set, i.e. the sample is not the head of its trajectory.
struct TransitionBatch {
  Matrix states;       // (state_dim, b)
  Matrix prev_states;  // (state_dim, b)
  Matrix actions;      // (action_dim, b)
  std::vector<int> tasks;
  std::vector<char> has_prev;

  Eigen::Index size() const { return states.cols(); }
};

/// Every transition of `data` in one batch, in trajectory order.
TransitionBatch full_batch(const DemoDataset& data);

/// Restricts a dataset to one task and relabels it as task 0 of a
/// single-task dataset.
DemoDataset single_task_view(const DemoDataset& data, int task);

}  // namespace maps
