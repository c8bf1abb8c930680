#pragma once

#include "maps/dataset.hpp"
#include "maps/maps_policy.hpp"
#include "maps/nncore.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace maps::test {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                            double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -scale, scale);
  return m;
}

/// Columns drawn from a softmax of random logits, so every entry is interior.
inline Matrix random_simplex_columns(Rng& rng, Eigen::Index m, Eigen::Index n,
                                     double spread = 2.0) {
  return softmax_columns(random_matrix(rng, m, n, spread));
}

/// Perturbs the biases too, so gradient checks see non-zero biases.
inline void jitter(MlpParams& p, Rng& rng, double scale = 0.3) {
  for_each_parameter(p, [&](double& v) { v += uniform(rng, -scale, scale); });
}

/// |a - n| / max(|a|, |n|, floor).
inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Central differences of `loss` with respect to every entry of `params`,
/// compared with `analytic` (same order).
inline GradCheck check_gradients(const std::vector<double*>& params,
                                 const std::vector<double>& analytic,
                                 const std::function<double()>& loss,
                                 double step = 1e-5, double floor = 1e-6) {
  GradCheck r;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& x = *params[i];
    const double saved = x;
    x = saved + step;
    const double up = loss();
    x = saved - step;
    const double down = loss();
    x = saved;
    const double numeric = (up - down) / (2.0 * step);
    r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic[i], numeric, floor));
    ++r.checked;
  }
  return r;
}

inline void collect(MlpParams& p, std::vector<double*>& out) {
  for_each_parameter(p, [&](double& v) { out.push_back(&v); });
}

inline void collect_values(const MlpParams& p, std::vector<double>& out) {
  for_each_parameter(p, [&](const double& v) { out.push_back(v); });
}

inline void collect(MapsModel& m, std::vector<double*>& out) {
  for (MlpParams* n : networks(m)) collect(*n, out);
}

inline void collect_values(const MapsModel& m, std::vector<double>& out) {
  for (const MlpParams* n : networks(m)) collect_values(*n, out);
}

/// Random trajectories of random lengths, every task represented.
inline DemoDataset random_dataset(Rng& rng, int state_dim, int action_dim,
                                  int num_tasks, int per_task, int min_len,
                                  int max_len) {
  DemoDataset d;
  d.state_dim = state_dim;
  d.action_dim = action_dim;
  d.num_tasks = num_tasks;
  for (int k = 0; k < num_tasks; ++k) {
    for (int n = 0; n < per_task; ++n) {
      Trajectory t;
      t.task = k;
      const int len = uniform_int(rng, min_len, max_len);
      t.states = random_matrix(rng, state_dim, len);
      t.actions = random_matrix(rng, action_dim, len);
      d.trajectories.push_back(std::move(t));
    }
  }
  return d;
}

/// Small MAPS architecture for fast exact-gradient tests.
inline MapsArchitecture small_arch(int state_dim, int action_dim, int num_tasks,
                                   int num_modules) {
  MapsArchitecture a;
  a.state_dim = state_dim;
  a.action_dim = action_dim;
  a.num_tasks = num_tasks;
  a.num_modules = num_modules;
  a.feature_dim = 4;
  a.hidden_width = 5;
  a.module_hidden_layers = 2;
  a.selector_hidden_layers = 2;
  return a;
}

}  // namespace maps::test
