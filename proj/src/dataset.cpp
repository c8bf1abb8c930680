#include "maps/dataset.hpp"

#include "maps/error.hpp"

namespace maps {

void DemoDataset::validate() const {
  require(state_dim >= 1 && action_dim >= 1 && num_tasks >= 1,
          ErrorKind::invalid_argument, "dataset: non-positive dimensions");
  std::vector<int> per_task(static_cast<std::size_t>(num_tasks), 0);
  for (const auto& tr : trajectories) {
    require(tr.task >= 0 && tr.task < num_tasks, ErrorKind::invalid_argument,
            "dataset: task index out of range");
    require(tr.length() >= 1, ErrorKind::invalid_argument,
            "dataset: empty trajectory");
    require(tr.states.rows() == state_dim && tr.actions.rows() == action_dim &&
                tr.actions.cols() == tr.states.cols(),
            ErrorKind::dimension_mismatch, "dataset: trajectory shape");
    require(tr.states.allFinite() && tr.actions.allFinite(),
            ErrorKind::non_finite, "dataset: non-finite entry");
    per_task[static_cast<std::size_t>(tr.task)] += 1;
  }
  for (int k = 0; k < num_tasks; ++k)
    require(per_task[static_cast<std::size_t>(k)] > 0,
            ErrorKind::invalid_argument,
            "dataset: task " + std::to_string(k) + " has no trajectories");
}

std::vector<std::vector<const Trajectory*>> DemoDataset::by_task() const {
  std::vector<std::vector<const Trajectory*>> out(
      static_cast<std::size_t>(num_tasks));
  for (const auto& tr : trajectories)
    out[static_cast<std::size_t>(tr.task)].push_back(&tr);
  return out;
}

std::size_t DemoDataset::transition_count() const {
  std::size_t n = 0;
  for (const auto& tr : trajectories) n += static_cast<std::size_t>(tr.length());
  return n;
}

std::size_t DemoDataset::transition_count(int task) const {
  std::size_t n = 0;
  for (const auto& tr : trajectories)
    if (tr.task == task) n += static_cast<std::size_t>(tr.length());
  return n;
}

TransitionBatch full_batch(const DemoDataset& data) {
  const auto n = static_cast<Eigen::Index>(data.transition_count());
  TransitionBatch batch;
  batch.states.resize(data.state_dim, n);
  batch.prev_states = Matrix::Zero(data.state_dim, n);
  batch.actions.resize(data.action_dim, n);
  batch.tasks.reserve(static_cast<std::size_t>(n));
  batch.has_prev.reserve(static_cast<std::size_t>(n));
  Eigen::Index col = 0;
  for (const auto& tr : data.trajectories) {
    for (Eigen::Index t = 0; t < tr.length(); ++t, ++col) {
      batch.states.col(col) = tr.states.col(t);
      batch.actions.col(col) = tr.actions.col(t);
      if (t > 0) batch.prev_states.col(col) = tr.states.col(t - 1);
      batch.tasks.push_back(tr.task);
      batch.has_prev.push_back(t > 0 ? 1 : 0);
    }
  }
  return batch;
}

DemoDataset single_task_view(const DemoDataset& data, int task) {
  require(task >= 0 && task < data.num_tasks, ErrorKind::invalid_argument,
          "single_task_view: task out of range");
  DemoDataset out;
  out.state_dim = data.state_dim;
  out.action_dim = data.action_dim;
  out.num_tasks = 1;
  for (const auto& tr : data.trajectories) {
    if (tr.task != task) continue;
    Trajectory copy = tr;
    copy.task = 0;
    out.trajectories.push_back(std::move(copy));
  }
  return out;
}

}  // namespace maps
