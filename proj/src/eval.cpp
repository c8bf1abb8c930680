#include "maps/eval.hpp"

#include "maps/error.hpp"
#include "maps/selector.hpp"
#include "maps/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace maps {
namespace {

struct Episode {
  const TaskSpec* spec = nullptr;
  int task = 0;
  int horizon = 0;
  EnvState state;
  bool done = false;
  bool succeeded = false;
  bool aborted = false;
};

int state_dim_of(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MapsModel>) return m.arch.state_dim;
        else if constexpr (std::is_same_v<T, SingleBcAgents>)
          return m.nets.front().layer_sizes.front();
        else if constexpr (std::is_same_v<T, MtBcModel>)
          return m.net.layer_sizes.front() - m.num_tasks;
        else return m.trunk.layer_sizes.front();
      },
      model);
}

void check_model(const AnyModel& model) {
  require(action_dim_of(model) == kActionDim, ErrorKind::dimension_mismatch,
          "model action dim does not match the environment");
  require(state_dim_of(model) == kStateDim, ErrorKind::dimension_mismatch,
          "model state dim does not match the environment");
}

// Steps every episode in lockstep so the networks see one wide batch per
// step. `record` collects the trace of a single-episode run.
void run_episodes(const AnyModel& model, std::vector<Episode>& episodes,
                  std::optional<int> forced, Rollout* record) {
  const auto* maps_model = std::get_if<MapsModel>(&model);
  if (forced) {
    require(maps_model != nullptr, ErrorKind::invalid_argument,
            "forced module requires a MAPS model");
    require(*forced >= 0 && *forced < maps_model->arch.num_modules,
            ErrorKind::invalid_argument, "forced module out of range");
  }
  for (auto& e : episodes) {
    if (at_goal(*e.spec, e.state)) e.done = e.succeeded = true;
    else if (e.state.step >= e.horizon) e.done = true;
  }

  std::vector<std::size_t> active;
  for (;;) {
    active.clear();
    for (std::size_t i = 0; i < episodes.size(); ++i)
      if (!episodes[i].done) active.push_back(i);
    if (active.empty()) break;

    const auto n = static_cast<Eigen::Index>(active.size());
    Matrix obs(kStateDim, n);
    std::vector<int> tasks(active.size());
    for (Eigen::Index j = 0; j < n; ++j) {
      const Episode& e = episodes[active[static_cast<std::size_t>(j)]];
      obs.col(j) = observe(*e.spec, e.state);
      tasks[static_cast<std::size_t>(j)] = e.task;
    }

    Matrix actions;
    Matrix scores;
    if (maps_model) {
      Matrix forced_scores;
      if (forced) {
        forced_scores = Matrix::Zero(maps_model->arch.num_modules, n);
        forced_scores.row(*forced).setOnes();
      }
      PolicyPass pass = policy_forward(*maps_model, obs, tasks,
                                       forced ? &forced_scores : nullptr);
      actions = std::move(pass.actions);
      scores = std::move(pass.scores);
    } else {
      actions = act(model, obs, tasks);
    }

    for (Eigen::Index j = 0; j < n; ++j) {
      Episode& e = episodes[active[static_cast<std::size_t>(j)]];
      if (!actions.col(j).allFinite()) {
        e.done = e.aborted = true;
        continue;
      }
      const Vec2 a = actions.col(j).head<2>();
      if (record) {
        record->actions.push_back(a);
        if (maps_model) record->scores.push_back(scores.col(j));
      }
      e.state = env_step(*e.spec, e.state, a);
      if (record) record->states.push_back(e.state);
      if (at_goal(*e.spec, e.state)) e.done = e.succeeded = true;
      else if (e.state.step >= e.horizon) e.done = true;
    }
  }
}

DemoDataset merged(const DemoDataset& a, const DemoDataset& b) {
  DemoDataset out = a;
  out.trajectories.insert(out.trajectories.end(), b.trajectories.begin(),
                          b.trajectories.end());
  return out;
}

double sample_stddev(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

Rollout rollout(const AnyModel& model, const TaskSpec& spec,
                const EnvState& start, int horizon,
                std::optional<int> forced_module) {
  check_model(model);
  require(horizon >= 0 && horizon <= spec.horizon, ErrorKind::invalid_argument,
          "rollout horizon outside [0, task horizon]");
  require(spec.task >= 0 && spec.task < num_tasks_of(model),
          ErrorKind::invalid_argument, "task index not served by the model");
  std::vector<Episode> episodes(1);
  episodes[0].spec = &spec;
  episodes[0].task = spec.task;
  episodes[0].horizon = start.step + horizon <= spec.horizon ? start.step + horizon
                                                             : spec.horizon;
  episodes[0].state = start;

  Rollout out;
  out.states.push_back(start);
  run_episodes(model, episodes, forced_module, &out);
  out.succeeded = episodes[0].succeeded;
  out.aborted = episodes[0].aborted;
  return out;
}

Rollout single_module_rollout(const MapsModel& model, const TaskSpec& spec,
                              int module, const EnvState& start) {
  return rollout(AnyModel{model}, spec, start, spec.horizon - start.step, module);
}

std::vector<double> success_rate(const AnyModel& model, const TaskSuite& suite,
                                 std::span<const Vec2> starts) {
  check_model(model);
  require(num_tasks_of(model) == suite.num_tasks(), ErrorKind::dimension_mismatch,
          "model task count does not match the suite");
  require(!starts.empty(), ErrorKind::invalid_argument, "no start states");

  std::vector<Episode> episodes;
  episodes.reserve(suite.tasks.size() * starts.size());
  for (const TaskSpec& spec : suite.tasks) {
    for (const Vec2& p : starts) {
      Episode e;
      e.spec = &spec;
      e.task = spec.task;
      e.horizon = spec.horizon;
      e.state = reset(spec, p);
      episodes.push_back(e);
    }
  }
  run_episodes(model, episodes, std::nullopt, nullptr);

  std::vector<double> rates(suite.tasks.size(), 0.0);
  for (std::size_t i = 0; i < episodes.size(); ++i)
    if (episodes[i].succeeded) rates[i / starts.size()] += 1.0;
  for (double& r : rates) r /= static_cast<double>(starts.size());
  return rates;
}

std::vector<double> success_rate(const AnyModel& model, const TaskSuite& suite,
                                 int n_starts, std::uint64_t seed) {
  require(n_starts >= 1, ErrorKind::invalid_argument, "n_starts must be >= 1");
  const std::vector<Vec2> starts = sample_starts(suite, n_starts, seed);
  return success_rate(model, suite, starts);
}

std::vector<double> expert_success_rate(const TaskSuite& suite,
                                        std::span<const Vec2> starts) {
  require(!starts.empty(), ErrorKind::invalid_argument, "no start states");
  std::vector<double> rates;
  for (const TaskSpec& spec : suite.tasks) {
    int ok = 0;
    for (const Vec2& p : starts) ok += run_expert(spec, p).succeeded ? 1 : 0;
    rates.push_back(static_cast<double>(ok) / static_cast<double>(starts.size()));
  }
  return rates;
}

double effective_module_count(const Vector& gates) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < gates.size(); ++i)
    if (gates[i] > 0.0) h -= gates[i] * std::log(gates[i]);
  return std::clamp(std::exp(h), 1.0, static_cast<double>(gates.size()));
}

double UsageReport::aggregate_effective_modules() const {
  const Vector avg = mean_gate.colwise().mean().transpose();
  return effective_module_count(avg / avg.sum());
}

double UsageReport::pairwise_overlap() const {
  const int k = num_tasks();
  if (k < 2) return 1.0;
  double total = 0.0;
  int pairs = 0;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      total += mean_gate.row(a).cwiseMin(mean_gate.row(b)).sum();
      ++pairs;
    }
  }
  return total / pairs;
}

UsageReport usage_from_scores(std::span<const Matrix> scores_by_task) {
  require(!scores_by_task.empty(), ErrorKind::invalid_argument, "no tasks");
  const auto m = scores_by_task.front().rows();
  const auto k = static_cast<Eigen::Index>(scores_by_task.size());
  UsageReport r;
  r.mean_gate = Matrix::Zero(k, m);
  r.argmax_fraction = Matrix::Zero(k, m);
  r.effective_modules = Vector::Zero(k);
  for (Eigen::Index t = 0; t < k; ++t) {
    const Matrix& s = scores_by_task[static_cast<std::size_t>(t)];
    require(s.rows() == m, ErrorKind::dimension_mismatch,
            "score matrices disagree on the module count");
    require(s.cols() > 0, ErrorKind::invalid_argument,
            "task " + std::to_string(t) + " has no scored states");
    require(s.allFinite(), ErrorKind::non_finite, "non-finite scores");
    r.mean_gate.row(t) = s.rowwise().mean().transpose();
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      Eigen::Index best = 0;
      s.col(c).maxCoeff(&best);
      r.argmax_fraction(t, best) += 1.0;
    }
    r.argmax_fraction.row(t) /= static_cast<double>(s.cols());
    r.effective_modules[t] = effective_module_count(r.mean_gate.row(t).transpose());
  }
  return r;
}

UsageReport module_usage(const MapsModel& model, const DemoDataset& data) {
  data.validate();
  require(data.num_tasks == model.arch.num_tasks &&
              data.state_dim == model.arch.state_dim,
          ErrorKind::dimension_mismatch, "dataset does not match the model");
  std::vector<Matrix> scores;
  for (const auto& trajs : data.by_task()) {
    Eigen::Index n = 0;
    for (const Trajectory* t : trajs) n += t->length();
    Matrix states(data.state_dim, n);
    Eigen::Index c = 0;
    for (const Trajectory* t : trajs) {
      states.middleCols(c, t->length()) = t->states;
      c += t->length();
    }
    const std::vector<int> tasks(static_cast<std::size_t>(n), trajs.front()->task);
    scores.push_back(
        selector_scores(model.selector, states, tasks, model.arch.num_tasks).scores);
  }
  return usage_from_scores(scores);
}

UsageReport module_usage(const MapsModel& model,
                         std::span<const std::vector<Rollout>> rollouts_by_task) {
  std::vector<Matrix> scores;
  for (const auto& rollouts : rollouts_by_task) {
    std::size_t n = 0;
    for (const Rollout& r : rollouts) n += r.scores.size();
    Matrix s(model.arch.num_modules, static_cast<Eigen::Index>(n));
    Eigen::Index c = 0;
    for (const Rollout& r : rollouts)
      for (const Vector& v : r.scores) s.col(c++) = v;
    scores.push_back(std::move(s));
  }
  return usage_from_scores(scores);
}

std::string_view to_string(SelectorTerm term) noexcept {
  switch (term) {
    case SelectorTerm::share: return "share";
    case SelectorTerm::explore: return "explore";
    case SelectorTerm::sparse: return "sparse";
    case SelectorTerm::smooth: return "smooth";
  }
  return "?";
}

SelectorTerm parse_term(std::string_view name) {
  for (auto t : {SelectorTerm::share, SelectorTerm::explore, SelectorTerm::sparse,
                 SelectorTerm::smooth})
    if (to_string(t) == name) return t;
  fail(ErrorKind::invalid_argument,
       "unknown selector term '" + std::string(name) +
           "' (expected share|explore|sparse|smooth)");
}

TrainConfig ablated_config(const TrainConfig& config, SelectorTerm term) {
  TrainConfig c = config;
  switch (term) {
    case SelectorTerm::share: c.selector_weights.share = 0.0; break;
    case SelectorTerm::explore: c.selector_weights.explore = 0.0; break;
    case SelectorTerm::sparse: c.selector_weights.sparse = 0.0; break;
    case SelectorTerm::smooth: c.selector_weights.smooth = 0.0; break;
  }
  return c;
}

AblationResult ablate(const TrainConfig& config, const DemoDataset& train,
                      const DemoDataset& val, const TaskSuite& suite,
                      SelectorTerm term, std::span<const Vec2> starts) {
  AblationResult r{term, ablated_config(config, term), {}, {}, {}};
  r.model = train_maps(r.config, train, val).model;
  r.usage = module_usage(r.model, merged(train, val));
  r.success = success_rate(AnyModel{r.model}, suite, starts);
  return r;
}

const ComparisonCell* ComparisonTable::find(SuiteId suite, int task, int experts,
                                            Method method) const {
  for (const auto& c : cells)
    if (c.suite == suite && c.task == task && c.experts == experts &&
        c.method == method)
      return &c;
  return nullptr;
}

ComparisonTable compare(const TrainConfig& config, const CompareOptions& options,
                        const TrainedCallback& on_trained) {
  require(!options.suites.empty() && !options.expert_counts.empty() &&
              !options.seeds.empty() && !options.methods.empty(),
          ErrorKind::invalid_argument, "compare needs suites, counts, seeds, methods");
  ComparisonTable table;
  for (SuiteId id : options.suites) {
    const TaskSuite suite = make_suite(id);
    const std::vector<Vec2> starts =
        sample_starts(suite, options.n_starts, options.eval_seed);
    for (int experts : options.expert_counts) {
      require(experts >= 2, ErrorKind::invalid_argument,
              "need at least 2 demonstrations per task to split");
      const std::size_t first = table.cells.size();
      for (Method method : options.methods)
        for (int k = 0; k < suite.num_tasks(); ++k)
          table.cells.push_back({id, k, experts, method, {}, 0.0, 0.0});

      for (std::uint64_t seed : options.seeds) {
        TrainConfig c = config;
        c.seed = seed;
        const DemoDataset demos = generate_demos(
            suite, experts, mix_seed(seed, 400 + static_cast<std::uint64_t>(experts)));
        const DatasetSplit parts = split(demos, c.train_fraction, mix_seed(seed, 3));
        for (std::size_t mi = 0; mi < options.methods.size(); ++mi) {
          const Method method = options.methods[mi];
          const auto trained = train_method(method, c, parts.train, parts.val);
          if (on_trained) on_trained(id, experts, seed, method, trained.model, demos);
          const auto rates = success_rate(trained.model, suite, starts);
          for (int k = 0; k < suite.num_tasks(); ++k)
            table.cells[first + mi * static_cast<std::size_t>(suite.num_tasks()) +
                        static_cast<std::size_t>(k)]
                .per_seed.push_back(rates[static_cast<std::size_t>(k)]);
        }
      }
    }
  }
  for (auto& cell : table.cells) {
    double sum = 0.0;
    for (double v : cell.per_seed) sum += v;
    cell.mean = sum / static_cast<double>(cell.per_seed.size());
    cell.stddev = sample_stddev(cell.per_seed, cell.mean);
  }
  return table;
}

double Tally::better_fraction() const {
  return cells() == 0 ? 0.0 : static_cast<double>(better) / cells();
}

double Tally::worse_fraction() const {
  return cells() == 0 ? 0.0 : static_cast<double>(worse) / cells();
}

std::vector<Tally> tally_against_single(const ComparisonTable& table) {
  std::vector<Tally> out;
  for (const auto& cell : table.cells) {
    if (cell.method == Method::single) continue;
    const ComparisonCell* ref =
        table.find(cell.suite, cell.task, cell.experts, Method::single);
    require(ref != nullptr, ErrorKind::invalid_argument,
            "tally needs single-agent results for every cell");
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const Tally& t) { return t.method == cell.method; });
    if (it == out.end()) {
      out.push_back(Tally{cell.method});
      it = out.end() - 1;
    }
    if (cell.mean > ref->mean) ++it->better;
    else if (cell.mean < ref->mean) ++it->worse;
    else ++it->ties;
  }
  return out;
}

}  // namespace maps
