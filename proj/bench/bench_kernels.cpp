// Parallel kernels against their serial references. Thread count follows
// OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "latent/nnindex.hpp"
#include "latent/random.hpp"
#include "latent/zipf.hpp"

namespace {

latent::PointSet Gaussian(std::size_t n, std::size_t d, std::uint64_t seed,
                          latent::PointId first_id) {
  latent::Rng rng(seed);
  latent::PointSet out(d);
  out.Reserve(n);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : row) x = rng.Normal();
    out.Add(first_id + static_cast<latent::PointId>(i), row);
  }
  return out;
}

// args: points, dimension
void KnnBatchParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const latent::ExactIndex index(Gaussian(n, d, 1, 0));
  const auto queries = Gaussian(n, d, 2, 1 << 24);
  for (auto _ : state) benchmark::DoNotOptimize(index.KnnBatch(queries, 10, false));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void KnnBatchSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto points = Gaussian(n, d, 1, 0);
  const auto queries = Gaussian(n, d, 2, 1 << 24);
  for (auto _ : state) {
    benchmark::DoNotOptimize(latent::reference::KnnBatchSerial(points, queries, 10, false));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

struct AssignSetup {
  latent::LabeledPoints points{1};
  std::vector<double> centroids;
  std::size_t k;
  std::vector<std::size_t> labels;
  std::vector<double> d2;

  AssignSetup(std::size_t n, std::size_t d, std::size_t k_) : points(d), k(k_) {
    latent::Rng rng(3);
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& x : row) x = rng.Normal();
      points.Add("p" + std::to_string(i), row);
    }
    centroids.assign(points.data().begin(), points.data().begin() + k * d);
    labels.resize(n);
    d2.resize(n);
  }
};

// args: points, dimension, clusters
void AssignParallel(benchmark::State& state) {
  AssignSetup s(state.range(0), state.range(1), state.range(2));
  for (auto _ : state) {
    latent::AssignClusters(s.points, s.centroids, s.k, s.labels, s.d2);
    benchmark::ClobberMemory();
  }
}

void AssignSerial(benchmark::State& state) {
  AssignSetup s(state.range(0), state.range(1), state.range(2));
  for (auto _ : state) {
    latent::reference::AssignClustersSerial(s.points, s.centroids, s.k, s.labels, s.d2);
    benchmark::ClobberMemory();
  }
}

}  // namespace

BENCHMARK(KnnBatchParallel)->Args({10000, 2})->Args({4000, 12})->Args({2000, 300})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(KnnBatchSerial)->Args({10000, 2})->Args({4000, 12})->Args({2000, 300})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(AssignParallel)->Args({20000, 300, 50})->Unit(benchmark::kMillisecond);
BENCHMARK(AssignSerial)->Args({20000, 300, 50})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
