#pragma once

#include "maps/dataset.hpp"
#include "maps/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace maps {

// Point-mass (double integrator) tasks on the arena [-1, 1]^2.
//
//   v' = (1 - damping) v + (gain / mass) a dt
//   p' = p + v' dt
//
// with the action clipped to [-1, 1] per axis. Three suites vary, in turn,
// the actuator strength, the body (mass / damping), and the goal structure.

inline constexpr double kTimeStep = 0.05;
inline constexpr int kHorizon = 100;
inline constexpr double kSuccessRadius = 0.05;
// Expert episodes keep acting this many steps after reaching the goal, so
// demonstrations show the agent settling there.
inline constexpr int kExpertHoldSteps = 10;
inline constexpr int kStateDim = 5;  // px, py, vx, vy, phase
inline constexpr int kActionDim = 2;

enum class SuiteId { scaled_dynamics, morph, subbehavior };

std::string_view to_string(SuiteId id) noexcept;
SuiteId parse_suite(std::string_view name);

struct Dynamics {
  double mass = 1.0;
  double damping = 0.1;
  double gain = 2.0;
};

struct Box {
  Vec2 lo;
  Vec2 hi;
};

struct TaskSpec {
  SuiteId suite = SuiteId::scaled_dynamics;
  int task = 0;
  std::string name;
  Dynamics dynamics;
  Box start_region;
  std::optional<Vec2> waypoint;  // SubBehavior only
  Vec2 goal;
  int horizon = kHorizon;
  double success_radius = kSuccessRadius;

  void validate() const;
};

struct TaskSuite {
  SuiteId id;
  std::vector<TaskSpec> tasks;

  int num_tasks() const { return static_cast<int>(tasks.size()); }
};

struct EnvState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  int step = 0;
  // Latched once the agent comes within 2 * success_radius of the waypoint.
  bool waypoint_reached = false;

  bool operator==(const EnvState&) const = default;
};

/// Gains scaled by 0.5, 0.75, 1, 1.25, 1.5 on identical geometry.
TaskSuite suite_scaled_dynamics();
/// Nominal body plus mass and damping each enlarged and shrunk by 25%.
TaskSuite suite_morph();
/// Shared waypoint leg, then forward / backward / lateral / stop goals.
TaskSuite suite_subbehavior();
TaskSuite make_suite(SuiteId id);

/// Zero velocity at `position`; the waypoint latch is evaluated immediately.
EnvState reset(const TaskSpec& spec, const Vec2& position);

EnvState env_step(const TaskSpec& spec, const EnvState& state, Vec2 action);

/// Policy input: position, velocity, and a phase flag that is 1 once the
/// waypoint is reached (always 1 for tasks without a waypoint).
Vector observe(const TaskSpec& spec, const EnvState& state);
EnvState state_from_observation(const Vector& obs, int step = 0);

/// Target the agent should currently steer toward.
Vec2 current_subgoal(const TaskSpec& spec, const EnvState& state);

/// True once the waypoint (if any) was passed and the agent is within the
/// success radius of the goal.
bool at_goal(const TaskSpec& spec, const EnvState& state);

/// Success predicate over a state sequence: the final state is within the
/// success radius of the goal and, for waypoint tasks, some state came within
/// twice the radius of the waypoint.
bool success(const TaskSpec& spec, std::span<const EnvState> trajectory);

struct ExpertGains {
  double kp = 25.0;
  double kd = 8.0;
};

ExpertGains expert_gains(SuiteId id);

/// Saturated PD controller toward the current subgoal, scaled by the inverse
/// actuator gain of `spec` so every task tracks the same reference motion.
Vec2 expert_action(const TaskSpec& spec, const EnvState& state);

Vec2 sample_start(const TaskSpec& spec, std::mt19937_64& rng);

/// Shared start positions for paired evaluation. All tasks of a suite use the
/// same start region, so one list serves every task.
std::vector<Vec2> sample_starts(const TaskSuite& suite, int n,
                                std::uint64_t seed);

struct ExpertEpisode {
  std::vector<EnvState> states;  // includes the terminal state
  std::vector<Vec2> actions;     // one per transition
  bool succeeded = false;
};

/// Rolls the expert of `controller` on the dynamics of `spec` until the goal
/// is reached, then for up to kExpertHoldSteps more steps (never past the
/// horizon). Success is judged on the final state.
ExpertEpisode run_expert(const TaskSpec& spec, const TaskSpec& controller,
                         const Vec2& start);
ExpertEpisode run_expert(const TaskSpec& spec, const Vec2& start);

/// Successful expert demonstrations, `n_per_task` per task. Per-task
/// generators are seeded from `seed`. Throws ErrorKind::expert_failure when
/// more than 5% of a task's attempts fail.
DemoDataset generate_demos(const TaskSuite& suite, int n_per_task,
                           std::uint64_t seed);

/// Replays a stored trajectory's actions from its first state.
std::vector<EnvState> replay(const TaskSpec& spec, const Trajectory& traj);

}  // namespace maps
