#include "maps/trainer.hpp"

#include "maps/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

namespace maps {
namespace {

std::vector<MlpParams*> nets_of(MlpParams& p) { return {&p}; }
std::vector<MlpParams*> nets_of(MapsModel& m) { return networks(m); }
std::vector<MlpParams*> nets_of(MtBcModel& m) { return {&m.net}; }
std::vector<MlpParams*> nets_of(MtmhBcModel& m) {
  std::vector<MlpParams*> out{&m.trunk};
  for (auto& h : m.heads) out.push_back(&h);
  return out;
}

template <typename Model, typename Evaluate>
TrainedModel<Model> run_training(Model model, const TrainConfig& config,
                                 const DemoDataset& train,
                                 const DemoDataset& val, Evaluate evaluate) {
  TrainedModel<Model> out;
  out.history.config_hash = config_hash(config);
  const TransitionBatch val_batch = full_batch(val);
  {
    const auto [initial, unused] = evaluate(model, val_batch, false);
    out.history.initial_val_bc = initial.bc;
  }
  out.model = model;
  if (config.epochs == 0) return out;

  std::vector<AdamState> adam;
  for (auto* net : nets_of(model)) adam.push_back(AdamState::for_params(*net));

  BatchStream stream(train, config.batch_size, mix_seed(config.seed, 2));
  double best = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec{epoch, false, {}};
    const auto batches = stream.next_epoch();
    for (const auto& batch : batches) {
      auto [losses, grads] = evaluate(model, batch, true);
      if (!std::isfinite(losses.total))
        fail(ErrorKind::divergence,
             "non-finite training loss at epoch " + std::to_string(epoch) +
                 " (L_BC=" + std::to_string(losses.bc) + ")");
      auto params = nets_of(model);
      auto g = nets_of(grads);
      for (std::size_t i = 0; i < params.size(); ++i)
        adam_step(*params[i], *g[i], adam[i], config.adam);
      rec.losses.total += losses.total;
      rec.losses.bc += losses.bc;
      rec.losses.terms.share += losses.terms.share;
      rec.losses.terms.explore += losses.terms.explore;
      rec.losses.terms.sparse += losses.terms.sparse;
      rec.losses.terms.smooth += losses.terms.smooth;
    }
    const double n = static_cast<double>(batches.size());
    rec.losses.total /= n;
    rec.losses.bc /= n;
    rec.losses.terms.share /= n;
    rec.losses.terms.explore /= n;
    rec.losses.terms.sparse /= n;
    rec.losses.terms.smooth /= n;
    out.history.records.push_back(rec);

    const auto [val_losses, unused] = evaluate(model, val_batch, false);
    if (!std::isfinite(val_losses.total))
      fail(ErrorKind::divergence,
           "non-finite validation loss at epoch " + std::to_string(epoch));
    out.history.records.push_back(EpochRecord{epoch, true, val_losses});
    if (val_losses.bc < best) {
      best = val_losses.bc;
      out.model = model;
      out.history.best_epoch = epoch;
    }
  }
  return out;
}

void check_training_inputs(const TrainConfig& config, const DemoDataset& train,
                           const DemoDataset& val) {
  config.validate();
  train.validate();
  val.validate();
  require(train.num_tasks == val.num_tasks &&
              train.state_dim == val.state_dim &&
              train.action_dim == val.action_dim,
          ErrorKind::dimension_mismatch, "train/val datasets disagree");
}

template <typename Model>
TrainingHistory concat_histories(const std::vector<TrainedModel<Model>>& runs) {
  TrainingHistory h;
  for (const auto& r : runs) {
    h.config_hash = r.history.config_hash;
    h.initial_val_bc += r.history.initial_val_bc / static_cast<double>(runs.size());
    h.records.insert(h.records.end(), r.history.records.begin(),
                     r.history.records.end());
  }
  return h;
}

}  // namespace

double TrainingHistory::final_val_bc() const {
  for (auto it = records.rbegin(); it != records.rend(); ++it)
    if (it->validation) return it->losses.bc;
  return initial_val_bc;
}

DatasetSplit split(const DemoDataset& data, double fraction,
                   std::uint64_t seed) {
  data.validate();
  require(fraction > 0.0 && fraction < 1.0, ErrorKind::invalid_argument,
          "split: fraction must lie in (0, 1)");
  DatasetSplit out;
  for (auto* d : {&out.train, &out.val}) {
    d->state_dim = data.state_dim;
    d->action_dim = data.action_dim;
    d->num_tasks = data.num_tasks;
  }
  std::mt19937_64 rng(seed);
  const auto groups = data.by_task();
  for (int k = 0; k < data.num_tasks; ++k) {
    const auto& group = groups[static_cast<std::size_t>(k)];
    const int n = static_cast<int>(group.size());
    require(n >= 2, ErrorKind::invalid_argument,
            "split: task " + std::to_string(k) +
                " needs at least two trajectories");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const int n_train = std::clamp(
        static_cast<int>(std::lround(fraction * n)), 1, n - 1);
    // Keep the original relative order on each side.
    std::sort(order.begin(), order.begin() + n_train);
    std::sort(order.begin() + n_train, order.end());
    for (int i = 0; i < n; ++i) {
      auto& side = i < n_train ? out.train : out.val;
      side.trajectories.push_back(*group[static_cast<std::size_t>(order[i])]);
    }
  }
  return out;
}

BatchStream::BatchStream(const DemoDataset& train, int batch_size,
                         std::uint64_t seed)
    : data_(&train), rng_(seed) {
  train.validate();
  require(batch_size >= train.num_tasks, ErrorKind::invalid_argument,
          "batch size " + std::to_string(batch_size) +
              " is smaller than the task count " +
              std::to_string(train.num_tasks));
  per_task_.resize(static_cast<std::size_t>(train.num_tasks));
  for (const auto& tr : train.trajectories)
    for (Eigen::Index t = 0; t < tr.length(); ++t)
      per_task_[static_cast<std::size_t>(tr.task)].push_back(Ref{&tr, t});

  std::size_t smallest = std::numeric_limits<std::size_t>::max();
  for (const auto& v : per_task_) smallest = std::min(smallest, v.size());
  const std::size_t total = train.transition_count();
  const std::size_t wanted =
      (total + static_cast<std::size_t>(batch_size) - 1) /
      static_cast<std::size_t>(batch_size);
  batches_ = static_cast<int>(std::max<std::size_t>(1, std::min(wanted, smallest)));
}

std::vector<TransitionBatch> BatchStream::next_epoch() {
  for (auto& v : per_task_) std::shuffle(v.begin(), v.end(), rng_);
  const int sd = data_->state_dim;
  const int ad = data_->action_dim;
  const auto nb = static_cast<std::size_t>(batches_);

  std::vector<TransitionBatch> out(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    std::size_t count = 0;
    for (const auto& v : per_task_)
      count += (j + 1) * v.size() / nb - j * v.size() / nb;
    auto& batch = out[j];
    const auto b = static_cast<Eigen::Index>(count);
    batch.states.resize(sd, b);
    batch.prev_states = Matrix::Zero(sd, b);
    batch.actions.resize(ad, b);
    batch.tasks.reserve(count);
    batch.has_prev.reserve(count);
    Eigen::Index col = 0;
    for (const auto& v : per_task_) {
      const std::size_t lo = j * v.size() / nb;
      const std::size_t hi = (j + 1) * v.size() / nb;
      for (std::size_t i = lo; i < hi; ++i, ++col) {
        const Ref& r = v[i];
        batch.states.col(col) = r.traj->states.col(r.step);
        batch.actions.col(col) = r.traj->actions.col(r.step);
        const bool has_prev = r.step > 0;
        if (has_prev) batch.prev_states.col(col) = r.traj->states.col(r.step - 1);
        batch.tasks.push_back(r.traj->task);
        batch.has_prev.push_back(has_prev ? 1 : 0);
      }
    }
  }
  return out;
}

BatchStream make_batches(const DemoDataset& train, int batch_size,
                         std::uint64_t seed) {
  return BatchStream(train, batch_size, seed);
}

MapsArchitecture architecture_for(const TrainConfig& config,
                                  const DemoDataset& data) {
  MapsArchitecture a;
  a.state_dim = data.state_dim;
  a.action_dim = data.action_dim;
  a.num_tasks = data.num_tasks;
  a.num_modules = config.num_modules;
  a.feature_dim = config.feature_dim;
  a.hidden_width = config.hidden_width;
  a.module_hidden_layers = config.module_hidden_layers;
  a.selector_hidden_layers = config.selector_hidden_layers;
  return a;
}

BaselineArchitecture baseline_architecture_for(const TrainConfig& config,
                                               const DemoDataset& data) {
  BaselineArchitecture a;
  a.state_dim = data.state_dim;
  a.action_dim = data.action_dim;
  a.num_tasks = data.num_tasks;
  a.hidden_width = config.hidden_width;
  a.hidden_layers = config.module_hidden_layers;
  return a;
}

TrainedModel<MapsModel> train_maps(const TrainConfig& config,
                                   const DemoDataset& train,
                                   const DemoDataset& val) {
  check_training_inputs(config, train, val);
  MapsModel model =
      make_maps_model(architecture_for(config, train), mix_seed(config.seed, 1));
  return run_training(
      std::move(model), config, train, val,
      [&](const MapsModel& m, const TransitionBatch& batch, bool grads) {
        MapsLoss l = total_loss(m, batch, config.total_weights,
                                config.selector_weights, grads);
        return std::pair{l.value, std::move(l.grads)};
      });
}

TrainedModel<MapsModel> train_maps(const TrainConfig& config,
                                   const DemoDataset& data) {
  const auto parts = split(data, config.train_fraction, mix_seed(config.seed, 3));
  return train_maps(config, parts.train, parts.val);
}

TrainedModel<MlpParams> train_single_bc(const TrainConfig& config,
                                        const DemoDataset& train,
                                        const DemoDataset& val, int task) {
  check_training_inputs(config, train, val);
  const DemoDataset t = single_task_view(train, task);
  const DemoDataset v = single_task_view(val, task);
  MlpParams net = make_single_policy(baseline_architecture_for(config, t),
                                     mix_seed(config.seed, 100 + static_cast<std::uint64_t>(task)));
  return run_training(std::move(net), config, t, v,
                      [](const MlpParams& m, const TransitionBatch& batch,
                         bool grads) {
                        NetLoss l = plain_bc_loss(m, batch, grads);
                        LossBreakdown b;
                        b.total = b.bc = l.value;
                        return std::pair{b, std::move(l.grads)};
                      });
}

TrainedModel<SingleBcAgents> train_single_bc_all(const TrainConfig& config,
                                                 const DemoDataset& train,
                                                 const DemoDataset& val) {
  check_training_inputs(config, train, val);
  const int K = train.num_tasks;
  std::vector<TrainedModel<MlpParams>> runs(static_cast<std::size_t>(K));
  std::vector<std::string> errors(static_cast<std::size_t>(K));
  std::vector<ErrorKind> kinds(static_cast<std::size_t>(K), ErrorKind::divergence);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < K; ++k) {
    try {
      runs[k] = train_single_bc(config, train, val, k);
    } catch (const Error& e) {
      errors[k] = e.what();
      kinds[k] = e.kind();
    }
  }
  for (int k = 0; k < K; ++k)
    if (!errors[k].empty()) fail(kinds[k], errors[k]);

  TrainedModel<SingleBcAgents> out;
  out.model.num_tasks = K;
  for (auto& r : runs) out.model.nets.push_back(r.model);
  out.history = concat_histories(runs);
  return out;
}

TrainedModel<MtBcModel> train_mt_bc(const TrainConfig& config,
                                    const DemoDataset& train,
                                    const DemoDataset& val) {
  check_training_inputs(config, train, val);
  MtBcModel model =
      make_mt_bc(baseline_architecture_for(config, train), mix_seed(config.seed, 200));
  return run_training(std::move(model), config, train, val,
                      [](const MtBcModel& m, const TransitionBatch& batch,
                         bool grads) {
                        MtBcLoss l = mt_bc_loss(m, batch, grads);
                        LossBreakdown b;
                        b.total = b.bc = l.value;
                        return std::pair{b, std::move(l.grads)};
                      });
}

TrainedModel<MtmhBcModel> train_mtmh_bc(const TrainConfig& config,
                                        const DemoDataset& train,
                                        const DemoDataset& val) {
  check_training_inputs(config, train, val);
  MtmhBcModel model = make_mtmh_bc(baseline_architecture_for(config, train),
                                   mix_seed(config.seed, 300));
  return run_training(std::move(model), config, train, val,
                      [](const MtmhBcModel& m, const TransitionBatch& batch,
                         bool grads) {
                        MtmhBcLoss l = mtmh_bc_loss(m, batch, grads);
                        LossBreakdown b;
                        b.total = b.bc = l.value;
                        return std::pair{b, std::move(l.grads)};
                      });
}

TrainedModel<AnyModel> train_method(Method method, const TrainConfig& config,
                                    const DemoDataset& train,
                                    const DemoDataset& val) {
  auto wrap = [](auto&& run) {
    return TrainedModel<AnyModel>{AnyModel(std::move(run.model)),
                                  std::move(run.history)};
  };
  switch (method) {
    case Method::maps: return wrap(train_maps(config, train, val));
    case Method::single: return wrap(train_single_bc_all(config, train, val));
    case Method::mt: return wrap(train_mt_bc(config, train, val));
    case Method::mtmh: return wrap(train_mtmh_bc(config, train, val));
  }
  fail(ErrorKind::invalid_argument, "unknown method");
}

void write_history_csv(std::ostream& out, const TrainingHistory& history) {
  out << "# config_hash=" << hex64(history.config_hash) << '\n';
  out << kHistoryHeader << '\n';
  char buf[512];
  for (const auto& r : history.records) {
    const auto& l = r.losses;
    std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.epoch, r.validation ? "val" : "train", l.total, l.bc,
                  l.terms.share, l.terms.explore, l.terms.sparse,
                  l.terms.smooth);
    out << buf;
  }
}

}  // namespace maps
