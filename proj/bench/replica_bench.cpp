// Serial vs OpenMP throughput for the replica-parallel kernels.

#include <benchmark/benchmark.h>

#include "unlearn/verify.hpp"

using namespace unlearn;

namespace {

struct Fixture {
  Dataset dataset;
  UnlearnRequest request;
  LossSpec spec;
  RunConfig run;

  Fixture() {
    dataset = synthesize_dataset(100, 5, 1.0, 7);
    request = make_request(dataset, SelectionRule::RandomSeeded, 10, 3);
    ProjectionSet ball;
    ball.center = Vec::Zero(5);
    ball.radius = 2.0;
    Vec theta0 = Vec::Zero(5);
    theta0[0] = 1.0;
    spec = certified_constants(Family::Quadratic, {}, 1.0, ball, theta0);
    run.eta = 0.1;
    run.T = 200;
    run.K = 50;
    run.batch_size = 8;
    run.dimension = 5;
    run.projected = true;
    run.algorithm = AlgorithmKind::R2D;
    run.seed = 42;
    run.theta0 = theta0;
  }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

void run_triples(ExecMode mode, std::int64_t replicas) {
  const Fixture& f = fixture();
  std::vector<double> finals(replicas);
  parallel_for(replicas, mode, [&](std::int64_t r) {
    finals[r] = run_coupled_triple(f.run, f.dataset, f.request, f.spec,
                                   static_cast<std::uint32_t>(r))
                    .dist_final;
  });
  benchmark::DoNotOptimize(finals.data());
}

void BM_CoupledTriples_Serial(benchmark::State& state) {
  for (auto _ : state) run_triples(ExecMode::Serial, state.range(0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CoupledTriples_OpenMP(benchmark::State& state) {
  for (auto _ : state) run_triples(ExecMode::OpenMP, state.range(0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void run_contraction(ExecMode mode, std::int64_t trials) {
  const Fixture& f = fixture();
  VerifyOptions opt;
  opt.trials = trials;
  opt.seed = 1;
  opt.mode = mode;
  benchmark::DoNotOptimize(check_contraction(f.spec, 0.5, opt).worst_margin);
}

void BM_ContractionCheck_Serial(benchmark::State& state) {
  for (auto _ : state) run_contraction(ExecMode::Serial, state.range(0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ContractionCheck_OpenMP(benchmark::State& state) {
  for (auto _ : state) run_contraction(ExecMode::OpenMP, state.range(0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_CoupledTriples_Serial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoupledTriples_OpenMP)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ContractionCheck_Serial)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ContractionCheck_OpenMP)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
