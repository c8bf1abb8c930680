// Reference scalar kernels against the blocked OpenMP kernels, plus one
// full MAPS training step at the default widths.
#include "maps/kernels.hpp"
#include "maps/maps_policy.hpp"
#include "maps/nncore.hpp"
#include "maps/trainer.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using maps::Matrix;
using maps::Vector;

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

template <auto Kernel>
void BM_DenseForward(benchmark::State& state) {
  const auto width = state.range(0);
  const auto batch = state.range(1);
  const Matrix w = random_matrix(width, width, 1);
  const Vector b = random_matrix(width, 1, 2);
  const Matrix in = random_matrix(width, batch, 3);
  Matrix out;
  for (auto _ : state) {
    Kernel(w, b, in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * width * width * batch);
}

template <auto Kernel>
void BM_DenseBackward(benchmark::State& state) {
  const auto width = state.range(0);
  const auto batch = state.range(1);
  const Matrix w = random_matrix(width, width, 1);
  const Matrix in = random_matrix(width, batch, 3);
  const Matrix og = random_matrix(width, batch, 4);
  Matrix wg = Matrix::Zero(width, width);
  Vector bg = Vector::Zero(width);
  Matrix ig;
  for (auto _ : state) {
    Kernel(w, in, og, wg, bg, &ig);
    benchmark::DoNotOptimize(ig.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * width * width * batch);
}

void shapes(benchmark::internal::Benchmark* b) {
  for (int width : {32, 128})
    for (int batch : {32, 256, 4096}) b->Args({width, batch});
}

BENCHMARK(BM_DenseForward<maps::kernels::reference::dense_forward>)->Name("forward/reference")->Apply(shapes);
BENCHMARK(BM_DenseForward<maps::kernels::dense_forward>)->Name("forward/parallel")->Apply(shapes);
BENCHMARK(BM_DenseBackward<maps::kernels::reference::dense_backward>)->Name("backward/reference")->Apply(shapes);
BENCHMARK(BM_DenseBackward<maps::kernels::dense_backward>)->Name("backward/parallel")->Apply(shapes);

void BM_MapsTrainingStep(benchmark::State& state) {
  maps::MapsArchitecture arch;
  arch.state_dim = 5;
  arch.action_dim = 2;
  arch.num_tasks = 4;
  const maps::MapsModel model = maps::make_maps_model(arch, 1);
  const auto b = state.range(0);
  maps::TransitionBatch batch;
  batch.states = random_matrix(5, b, 5);
  batch.prev_states = random_matrix(5, b, 6);
  batch.actions = random_matrix(2, b, 7);
  for (Eigen::Index i = 0; i < b; ++i) {
    batch.tasks.push_back(static_cast<int>(i % 4));
    batch.has_prev.push_back(i % 5 != 0);
  }
  for (auto _ : state) {
    auto loss = maps::total_loss(model, batch, {}, {});
    benchmark::DoNotOptimize(loss.value.total);
  }
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_MapsTrainingStep)->Name("maps/total_loss_with_grads")->Arg(32)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
