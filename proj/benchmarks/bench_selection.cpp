#include <benchmark/benchmark.h>

#include <random>

#include "crowdroute/landmark_select.hpp"
#include "crowdroute/question_tree.hpp"

namespace {

using namespace crowdroute;

struct Instance {
  CandidateSet routes;
  SignificanceMap significance;
};

// n routes over a pool of `pool` landmarks; each route keeps a landmark with
// probability 1/2 and always passes the shared endpoints.
Instance make_instance(std::size_t n, std::size_t pool, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(0.5);
  std::uniform_real_distribution<double> sig(0.0, 1.0);
  Instance inst;
  for (std::size_t j = 0; j < pool; ++j) inst.significance["p" + std::to_string(j)] = sig(rng);
  inst.significance["src"] = 1.0;
  inst.significance["dst"] = 1.0;
  std::vector<CandidateSet::Entry> entries;
  while (entries.size() < n) {
    std::vector<LandmarkId> seq{"src"};
    for (std::size_t j = 0; j < pool; ++j) {
      if (keep(rng)) seq.push_back("p" + std::to_string(j));
    }
    seq.push_back("dst");
    entries.push_back({"r" + std::to_string(entries.size()), LandmarkRoute(seq)});
    inst.routes = CandidateSet(entries);
    if (inst.routes.size() < entries.size()) entries.pop_back();
  }
  return inst;
}

template <SelectionAlgorithm A>
void BM_Select(benchmark::State& state) {
  const auto inst = make_instance(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 11);
  const SelectionProblem problem(inst.routes, inst.significance);
  for (auto _ : state) benchmark::DoNotOptimize(select_landmarks(problem, A));
  state.counters["beneficial"] = static_cast<double>(problem.beneficial_count());
}

void selection_args(benchmark::internal::Benchmark* b) {
  for (int n : {3, 6}) {
    for (int pool : {8, 12, 16}) b->Args({n, pool});
  }
}

BENCHMARK(BM_Select<SelectionAlgorithm::kBruteForce>)->Apply(selection_args);
BENCHMARK(BM_Select<SelectionAlgorithm::kIncremental>)->Apply(selection_args);
BENCHMARK(BM_Select<SelectionAlgorithm::kGreedy>)->Apply(selection_args);

void BM_BuildTree(benchmark::State& state) {
  const auto inst = make_instance(static_cast<std::size_t>(state.range(0)), 16, 5);
  const SelectionProblem problem(inst.routes, inst.significance);
  const auto chosen = greedy_select(problem).chosen;
  const LandmarkSet selected(chosen.begin(), chosen.end());
  for (auto _ : state) benchmark::DoNotOptimize(build_tree(selected, inst.routes, inst.significance));
}
BENCHMARK(BM_BuildTree)->Arg(4)->Arg(8)->Arg(16);

}  // namespace
