#include "maps/envs.hpp"

#include "maps/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace maps {
namespace {

constexpr Dynamics kNominal{1.0, 0.1, 2.0};

Box default_start_region() { return Box{Vec2(-0.9, -0.6), Vec2(-0.6, 0.6)}; }

TaskSpec base_task(SuiteId suite, int index, std::string name) {
  TaskSpec t;
  t.suite = suite;
  t.task = index;
  t.name = std::move(name);
  t.dynamics = kNominal;
  t.start_region = default_start_region();
  t.goal = Vec2(0.5, 0.0);
  return t;
}

Vec2 clip_action(Vec2 a) {
  return a.cwiseMax(Vec2::Constant(-1.0)).cwiseMin(Vec2::Constant(1.0));
}

bool near_waypoint(const TaskSpec& spec, const Vec2& p) {
  return spec.waypoint &&
         (p - *spec.waypoint).norm() <= 2.0 * spec.success_radius;
}

}  // namespace

std::string_view to_string(SuiteId id) noexcept {
  switch (id) {
    case SuiteId::scaled_dynamics: return "scaled";
    case SuiteId::morph: return "morph";
    case SuiteId::subbehavior: return "subbehavior";
  }
  return "unknown";
}

SuiteId parse_suite(std::string_view name) {
  for (SuiteId id :
       {SuiteId::scaled_dynamics, SuiteId::morph, SuiteId::subbehavior})
    if (to_string(id) == name) return id;
  fail(ErrorKind::invalid_argument,
       "unknown suite '" + std::string(name) + "' (scaled|morph|subbehavior)");
}

void TaskSpec::validate() const {
  require(dynamics.mass > 0.0 && dynamics.gain > 0.0 &&
              dynamics.damping >= 0.0 && dynamics.damping < 1.0,
          ErrorKind::invalid_argument, "task " + name + ": bad dynamics");
  require(horizon >= 1 && success_radius > 0.0, ErrorKind::invalid_argument,
          "task " + name + ": bad horizon or success radius");
  require(!waypoint || suite == SuiteId::subbehavior,
          ErrorKind::invalid_argument,
          "task " + name + ": waypoints belong to the subbehavior suite");
}

TaskSuite suite_scaled_dynamics() {
  TaskSuite s{SuiteId::scaled_dynamics, {}};
  const double factors[] = {0.5, 0.75, 1.0, 1.25, 1.5};
  for (int k = 0; k < 5; ++k) {
    auto t = base_task(s.id, k, "gain_x" + std::to_string(factors[k]).substr(0, 4));
    t.dynamics.gain *= factors[k];
    s.tasks.push_back(std::move(t));
  }
  return s;
}

TaskSuite suite_morph() {
  TaskSuite s{SuiteId::morph, {}};
  s.tasks.push_back(base_task(s.id, 0, "nominal"));
  auto heavy = base_task(s.id, 1, "mass_up");
  heavy.dynamics.mass *= 1.25;
  auto light = base_task(s.id, 2, "mass_down");
  light.dynamics.mass *= 0.75;
  auto sticky = base_task(s.id, 3, "damping_up");
  sticky.dynamics.damping *= 1.25;
  auto slick = base_task(s.id, 4, "damping_down");
  slick.dynamics.damping *= 0.75;
  for (auto* t : {&heavy, &light, &sticky, &slick}) s.tasks.push_back(*t);
  return s;
}

TaskSuite suite_subbehavior() {
  TaskSuite s{SuiteId::subbehavior, {}};
  const Vec2 waypoint(-0.2, 0.0);
  const struct {
    const char* name;
    Vec2 goal;
  } legs[] = {{"forward", Vec2(0.5, 0.0)},
              {"backward", Vec2(-0.7, 0.0)},
              {"lateral", Vec2(-0.2, 0.6)},
              {"stop", waypoint}};
  for (int k = 0; k < 4; ++k) {
    auto t = base_task(s.id, k, legs[k].name);
    t.waypoint = waypoint;
    t.goal = legs[k].goal;
    s.tasks.push_back(std::move(t));
  }
  return s;
}

TaskSuite make_suite(SuiteId id) {
  switch (id) {
    case SuiteId::scaled_dynamics: return suite_scaled_dynamics();
    case SuiteId::morph: return suite_morph();
    case SuiteId::subbehavior: return suite_subbehavior();
  }
  fail(ErrorKind::invalid_argument, "unknown suite id");
}

EnvState reset(const TaskSpec& spec, const Vec2& position) {
  EnvState s;
  s.position = position;
  s.waypoint_reached = near_waypoint(spec, position);
  return s;
}

EnvState env_step(const TaskSpec& spec, const EnvState& state, Vec2 action) {
  require(state.step < spec.horizon, ErrorKind::invalid_argument,
          "env_step: episode already at its horizon");
  const Vec2 a = clip_action(action);
  const auto& d = spec.dynamics;
  EnvState next;
  next.velocity =
      (1.0 - d.damping) * state.velocity + (d.gain / d.mass) * kTimeStep * a;
  next.position = state.position + kTimeStep * next.velocity;
  next.step = state.step + 1;
  next.waypoint_reached =
      state.waypoint_reached || near_waypoint(spec, next.position);
  return next;
}

Vector observe(const TaskSpec& spec, const EnvState& state) {
  Vector obs(kStateDim);
  obs << state.position, state.velocity,
      (!spec.waypoint || state.waypoint_reached) ? 1.0 : 0.0;
  return obs;
}

EnvState state_from_observation(const Vector& obs, int step) {
  require(obs.size() == kStateDim, ErrorKind::dimension_mismatch,
          "observation length");
  EnvState s;
  s.position = obs.head<2>();
  s.velocity = obs.segment<2>(2);
  s.step = step;
  s.waypoint_reached = obs(4) > 0.5;
  return s;
}

Vec2 current_subgoal(const TaskSpec& spec, const EnvState& state) {
  if (spec.waypoint && !state.waypoint_reached) return *spec.waypoint;
  return spec.goal;
}

bool at_goal(const TaskSpec& spec, const EnvState& state) {
  if (spec.waypoint && !state.waypoint_reached) return false;
  return (state.position - spec.goal).norm() <= spec.success_radius;
}

bool success(const TaskSpec& spec, std::span<const EnvState> trajectory) {
  if (trajectory.empty()) return false;
  if (spec.waypoint) {
    const bool passed = std::any_of(
        trajectory.begin(), trajectory.end(), [&](const EnvState& s) {
          return s.waypoint_reached || near_waypoint(spec, s.position);
        });
    if (!passed) return false;
  }
  return (trajectory.back().position - spec.goal).norm() <= spec.success_radius;
}

ExpertGains expert_gains(SuiteId) {
  // One setting works for all three suites: trajectories take 20-65 steps.
  return ExpertGains{25.0, 8.0};
}

Vec2 expert_action(const TaskSpec& spec, const EnvState& state) {
  const ExpertGains g = expert_gains(spec.suite);
  const Vec2 accel = g.kp * (current_subgoal(spec, state) - state.position) -
                     g.kd * state.velocity;
  return clip_action(accel * (spec.dynamics.mass / spec.dynamics.gain));
}

Vec2 sample_start(const TaskSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(spec.start_region.lo.x(),
                                            spec.start_region.hi.x());
  std::uniform_real_distribution<double> uy(spec.start_region.lo.y(),
                                            spec.start_region.hi.y());
  const double x = ux(rng);
  const double y = uy(rng);
  return Vec2(x, y);
}

std::vector<Vec2> sample_starts(const TaskSuite& suite, int n,
                                std::uint64_t seed) {
  require(!suite.tasks.empty() && n >= 0, ErrorKind::invalid_argument,
          "sample_starts: empty suite or negative count");
  std::mt19937_64 rng(seed);
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(sample_start(suite.tasks[0], rng));
  return out;
}

ExpertEpisode run_expert(const TaskSpec& spec, const TaskSpec& controller,
                         const Vec2& start) {
  ExpertEpisode ep;
  EnvState s = reset(spec, start);
  ep.states.push_back(s);
  int held = -1;  // steps taken since first reaching the goal
  while (s.step < spec.horizon) {
    if (held < 0 && at_goal(spec, s)) held = 0;
    if (held >= 0 && held++ == kExpertHoldSteps) break;
    const Vec2 a = expert_action(controller, s);
    s = env_step(spec, s, a);
    ep.actions.push_back(a);
    ep.states.push_back(s);
  }
  ep.succeeded = success(spec, ep.states);
  return ep;
}

ExpertEpisode run_expert(const TaskSpec& spec, const Vec2& start) {
  return run_expert(spec, spec, start);
}

DemoDataset generate_demos(const TaskSuite& suite, int n_per_task,
                           std::uint64_t seed) {
  require(n_per_task >= 1, ErrorKind::invalid_argument,
          "generate_demos: n_per_task must be positive");
  const int K = suite.num_tasks();
  std::vector<std::vector<Trajectory>> per_task(static_cast<std::size_t>(K));
  std::vector<std::string> errors(static_cast<std::size_t>(K));

#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < K; ++k) {
    const TaskSpec& spec = suite.tasks[k];
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    int attempts = 0;
    int failures = 0;
    auto& out = per_task[k];
    while (static_cast<int>(out.size()) < n_per_task) {
      ++attempts;
      const ExpertEpisode ep = run_expert(spec, sample_start(spec, rng));
      if (!ep.succeeded || ep.actions.empty()) {
        ++failures;
        if (failures > n_per_task / 20 + 1 && failures * 20 > attempts) {
          errors[k] = "expert for task " + spec.name + " failed " +
                      std::to_string(failures) + " of " +
                      std::to_string(attempts) + " attempts";
          break;
        }
        continue;
      }
      Trajectory tr;
      tr.task = k;
      const auto T = static_cast<Eigen::Index>(ep.actions.size());
      tr.states.resize(kStateDim, T);
      tr.actions.resize(kActionDim, T);
      for (Eigen::Index t = 0; t < T; ++t) {
        tr.states.col(t) = observe(spec, ep.states[static_cast<std::size_t>(t)]);
        tr.actions.col(t) = ep.actions[static_cast<std::size_t>(t)];
      }
      out.push_back(std::move(tr));
    }
    if (errors[k].empty() && failures * 20 > attempts)
      errors[k] = "expert for task " + spec.name + " failed " +
                  std::to_string(failures) + " of " + std::to_string(attempts) +
                  " attempts";
  }

  for (const auto& e : errors)
    if (!e.empty()) fail(ErrorKind::expert_failure, e);

  DemoDataset data;
  data.state_dim = kStateDim;
  data.action_dim = kActionDim;
  data.num_tasks = K;
  for (auto& v : per_task)
    for (auto& tr : v) data.trajectories.push_back(std::move(tr));
  return data;
}

std::vector<EnvState> replay(const TaskSpec& spec, const Trajectory& traj) {
  require(traj.length() >= 1, ErrorKind::invalid_argument, "replay: empty");
  std::vector<EnvState> states;
  EnvState s = state_from_observation(traj.states.col(0));
  if (!spec.waypoint) s.waypoint_reached = false;
  states.push_back(s);
  for (Eigen::Index t = 0; t < traj.length(); ++t) {
    s = env_step(spec, s, traj.actions.col(t));
    states.push_back(s);
  }
  return states;
}

}  // namespace maps
