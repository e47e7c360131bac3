#include <benchmark/benchmark.h>

#include <random>

#include "crowdroute/worker_model.hpp"

namespace {

using namespace crowdroute;

ScoreMatrix low_rank(std::size_t n, std::size_t m, double observed, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(3, static_cast<Eigen::Index>(n), [&] { return u(rng); });
  const Eigen::MatrixXd b = Eigen::MatrixXd::NullaryExpr(3, static_cast<Eigen::Index>(m), [&] { return u(rng); });
  std::vector<WorkerId> workers;
  std::vector<LandmarkId> landmarks;
  for (std::size_t i = 0; i < n; ++i) workers.push_back("w" + std::to_string(i));
  for (std::size_t j = 0; j < m; ++j) landmarks.push_back("l" + std::to_string(j));
  ScoreMatrix s(workers, landmarks);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (u(rng) < observed) s.set(i, j, a.col(static_cast<Eigen::Index>(i)).dot(b.col(static_cast<Eigen::Index>(j))));
    }
  }
  return s;
}

void BM_TrainPmf(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = low_rank(n, n * 3 / 2, 0.4, 3);
  PmfConfig config;
  config.latent_dim = 3;
  config.max_iters = 2000;
  config.learning_rate = 0.02;
  for (auto _ : state) benchmark::DoNotOptimize(train_pmf(m, config));
  state.counters["observed"] = static_cast<double>(m.nnz());
}
BENCHMARK(BM_TrainPmf)->Arg(20)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Gradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = low_rank(n, n, 0.3, 9);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Constant(8, static_cast<Eigen::Index>(n), 0.1);
  const Eigen::MatrixXd l = Eigen::MatrixXd::Constant(8, static_cast<Eigen::Index>(n), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(pmf_gradient(m, w, l, 0.05, 0.05));
}
BENCHMARK(BM_Gradient)->Arg(50)->Arg(200);

}  // namespace
