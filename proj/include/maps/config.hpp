#pragma once

#include "maps/maps_policy.hpp"
#include "maps/nncore.hpp"
#include "maps/selector.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace maps {

/// Everything that defines a training run.
struct TrainConfig {
  int num_modules = 5;
  int feature_dim = 128;
  int hidden_width = 128;
  int module_hidden_layers = 3;
  int selector_hidden_layers = 2;
  int batch_size = 32;
  int epochs = 500;
  std::uint64_t seed = 1;
  AdamOptions adam;
  TotalLossWeights total_weights;
  SelectorLossWeights selector_weights;
  double train_fraction = 0.7;

  void validate() const;
  bool operator==(const TrainConfig&) const;
};

/// Parses `key = value` lines; `#` starts a comment. Every key must be
/// present exactly once and unknown keys are rejected.
TrainConfig parse_config(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_config_text(c)) == c.
std::string to_config_text(const TrainConfig& config);

/// FNV-1a 64 of the canonical text.
std::uint64_t config_hash(const TrainConfig& config);

std::string hex64(std::uint64_t value);

}  // namespace maps
