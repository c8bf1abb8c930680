#pragma once

#include "maps/baselines.hpp"
#include "maps/config.hpp"
#include "maps/dataset.hpp"
#include "maps/maps_policy.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace maps {

struct DatasetSplit {
  DemoDataset train;
  DemoDataset val;
};

/// Per-task split at trajectory granularity: round(fraction * n) training
/// trajectories, clamped so both sides keep at least one.
DatasetSplit split(const DemoDataset& data, double fraction, std::uint64_t seed);

/// Stratified transition batches. Each epoch shuffles every task's
/// transitions and deals them into the same number of batches, so every
/// batch holds every task and an epoch visits each transition exactly once.
/// With equally sized tasks a batch holds about b/K samples per task.
class BatchStream {
 public:
  BatchStream(const DemoDataset& train, int batch_size, std::uint64_t seed);

  std::vector<TransitionBatch> next_epoch();
  int batches_per_epoch() const { return batches_; }

 private:
  struct Ref {
    const Trajectory* traj;
    Eigen::Index step;
  };

  const DemoDataset* data_;
  std::vector<std::vector<Ref>> per_task_;
  int batches_ = 0;
  std::mt19937_64 rng_;
};

BatchStream make_batches(const DemoDataset& train, int batch_size,
                         std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  bool validation = false;
  LossBreakdown losses;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainingHistory {
  std::vector<EpochRecord> records;
  double initial_val_bc = 0.0;
  int best_epoch = -1;  // -1 when no epoch ran
  std::uint64_t config_hash = 0;

  double final_val_bc() const;
};

template <typename Model>
struct TrainedModel {
  Model model;
  TrainingHistory history;
};

/// Joint Adam descent of modules, selector and head on the total loss.
/// Returns the parameters with the best validation BC loss.
TrainedModel<MapsModel> train_maps(const TrainConfig& config,
                                   const DemoDataset& train,
                                   const DemoDataset& val);
/// Splits `data` with the configured fraction first.
TrainedModel<MapsModel> train_maps(const TrainConfig& config,
                                   const DemoDataset& data);

/// One plain BC policy on a single task's data.
TrainedModel<MlpParams> train_single_bc(const TrainConfig& config,
                                        const DemoDataset& train,
                                        const DemoDataset& val, int task);
/// Independent policies for every task, trained in parallel.
TrainedModel<SingleBcAgents> train_single_bc_all(const TrainConfig& config,
                                                 const DemoDataset& train,
                                                 const DemoDataset& val);
TrainedModel<MtBcModel> train_mt_bc(const TrainConfig& config,
                                    const DemoDataset& train,
                                    const DemoDataset& val);
TrainedModel<MtmhBcModel> train_mtmh_bc(const TrainConfig& config,
                                        const DemoDataset& train,
                                        const DemoDataset& val);

/// Dispatches on the method. For `single` the history is the per-task
/// histories concatenated in task order.
TrainedModel<AnyModel> train_method(Method method, const TrainConfig& config,
                                    const DemoDataset& train,
                                    const DemoDataset& val);

MapsArchitecture architecture_for(const TrainConfig& config,
                                  const DemoDataset& data);
BaselineArchitecture baseline_architecture_for(const TrainConfig& config,
                                               const DemoDataset& data);

/// Header line of the history CSV.
inline constexpr const char* kHistoryHeader =
    "epoch,split,L_total,L_BC,L_share,L_explore,L_sparse,L_smooth";

/// `# config_hash=<hex>` line, the header, then one row per record.
void write_history_csv(std::ostream& out, const TrainingHistory& history);

}  // namespace maps
