#pragma once

#include "maps/baselines.hpp"
#include "maps/config.hpp"
#include "maps/envs.hpp"
#include "maps/maps_policy.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace maps {

struct Rollout {
  std::vector<EnvState> states;  // includes the start and the final state
  std::vector<Vec2> actions;
  std::vector<Vector> scores;    // per step, MAPS models only
  bool succeeded = false;
  bool aborted = false;          // non-finite action
};

/// Closed-loop rollout that stops at the goal or after `horizon` steps.
/// `forced_module` pins the MAPS scores to a one-hot on that module.
Rollout rollout(const AnyModel& model, const TaskSpec& spec,
                const EnvState& start, int horizon,
                std::optional<int> forced_module = std::nullopt);

Rollout single_module_rollout(const MapsModel& model, const TaskSpec& spec,
                              int module, const EnvState& start);

/// Fraction of `starts` from which the policy succeeds, per task.
std::vector<double> success_rate(const AnyModel& model, const TaskSuite& suite,
                                 std::span<const Vec2> starts);
std::vector<double> success_rate(const AnyModel& model, const TaskSuite& suite,
                                 int n_starts, std::uint64_t seed);

/// Success of the scripted expert itself, for audits.
std::vector<double> expert_success_rate(const TaskSuite& suite,
                                        std::span<const Vec2> starts);

/// Mean gate per (task, module). `argmax_fraction` is the share of steps on
/// which each module had the largest score.
struct UsageReport {
  Matrix mean_gate;        // (K, M)
  Matrix argmax_fraction;  // (K, M)
  Vector effective_modules;  // (K), exp of the entropy of each mean-gate row

  int num_tasks() const { return static_cast<int>(mean_gate.rows()); }
  int num_modules() const { return static_cast<int>(mean_gate.cols()); }

  /// exp(entropy) of the task-averaged gate vector.
  double aggregate_effective_modules() const;
  /// Mean over task pairs of sum_i min(gate_k1_i, gate_k2_i).
  double pairwise_overlap() const;
};

double effective_module_count(const Vector& gates);

/// Usage from per-task score matrices, each (M, n_k).
UsageReport usage_from_scores(std::span<const Matrix> scores_by_task);
UsageReport module_usage(const MapsModel& model, const DemoDataset& data);
UsageReport module_usage(const MapsModel& model,
                         std::span<const std::vector<Rollout>> rollouts_by_task);

enum class SelectorTerm { share, explore, sparse, smooth };

std::string_view to_string(SelectorTerm term) noexcept;
SelectorTerm parse_term(std::string_view name);

/// Copy of `config` with exactly the chosen selector weight set to zero.
TrainConfig ablated_config(const TrainConfig& config, SelectorTerm term);

struct AblationResult {
  SelectorTerm term;
  TrainConfig config;
  MapsModel model;
  UsageReport usage;
  std::vector<double> success;
};

AblationResult ablate(const TrainConfig& config, const DemoDataset& train,
                      const DemoDataset& val, const TaskSuite& suite,
                      SelectorTerm term, std::span<const Vec2> starts);

struct ComparisonCell {
  SuiteId suite;
  int task = 0;
  int experts = 0;
  Method method = Method::maps;
  std::vector<double> per_seed;
  double mean = 0.0;
  double stddev = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonCell> cells;

  const ComparisonCell* find(SuiteId suite, int task, int experts,
                             Method method) const;
};

struct CompareOptions {
  std::vector<SuiteId> suites;
  std::vector<int> expert_counts;
  std::vector<std::uint64_t> seeds;
  std::vector<Method> methods{Method::maps, Method::single, Method::mt,
                              Method::mtmh};
  int n_starts = 100;
  std::uint64_t eval_seed = 12345;
};

/// Called after every training run with the trained model and its data.
using TrainedCallback =
    std::function<void(SuiteId, int experts, std::uint64_t seed, Method,
                       const AnyModel&, const DemoDataset& demos)>;

/// Trains every method on every (suite, expert count, seed) and evaluates
/// all of them on the same start states.
ComparisonTable compare(const TrainConfig& config, const CompareOptions& options,
                        const TrainedCallback& on_trained = {});

/// Per method: how many (suite, task, expert count) cells beat, trail or tie
/// the single-agent mean. Fractions are normalized by the cell count.
struct Tally {
  Method method;
  int better = 0;
  int worse = 0;
  int ties = 0;

  int cells() const { return better + worse + ties; }
  double better_fraction() const;
  double worse_fraction() const;
};

std::vector<Tally> tally_against_single(const ComparisonTable& table);

}  // namespace maps
