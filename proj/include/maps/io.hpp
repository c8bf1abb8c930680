#pragma once

#include "maps/baselines.hpp"
#include "maps/config.hpp"
#include "maps/dataset.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace maps {

// Binary formats. All integers are unsigned 32-bit and all reals 64-bit
// IEEE floats, both little-endian regardless of the host.
//
// Demo file:
//   "MAPSDEMO" u32 version u32 state_dim u32 action_dim u32 K u32 count
//   per trajectory: u32 task u32 length, then per step the state followed by
//   the action.
//
// Checkpoint:
//   "MAPSCKPT" u32 version u32 kind u32 config_bytes <config text>
//   then the model. Every network is stored as
//   u32 n_sizes u32 sizes... u32 activate_output, then per layer the weight
//   (u32 rows u32 cols, column-major values) and bias (u32 n, values).

inline constexpr std::uint32_t kDemoFormatVersion = 1;
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

void write_demos(std::ostream& out, const DemoDataset& data);
DemoDataset read_demos(std::istream& in);
void save_demos(const std::filesystem::path& path, const DemoDataset& data);
DemoDataset load_demos(const std::filesystem::path& path);

struct Checkpoint {
  TrainConfig config;
  AnyModel model;
};

void write_checkpoint(std::ostream& out, const TrainConfig& config,
                      const AnyModel& model);
Checkpoint read_checkpoint(std::istream& in);

/// Writes the policy of one task of a single-agent run. Loading the files
/// of every task together yields the full SingleBcAgents.
void write_single_task_checkpoint(std::ostream& out, const TrainConfig& config,
                                  const SingleBcAgents& agents, int task);

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& config,
                     const AnyModel& model);
void save_single_task_checkpoint(const std::filesystem::path& path,
                                 const TrainConfig& config,
                                 const SingleBcAgents& agents, int task);

/// Loads one checkpoint, or merges per-task single-agent checkpoints. All
/// files must agree on kind and config, and every task must appear once.
Checkpoint load_checkpoint(std::span<const std::filesystem::path> paths);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Like load_checkpoint but also rejects a kind or config that differs from
/// the expected one.
Checkpoint load_checkpoint(std::span<const std::filesystem::path> paths,
                           Method expected_kind, const TrainConfig& expected_config);

}  // namespace maps
