#include "safeloop/analysis.hpp"
#include "safeloop/sim.hpp"
#include "safeloop/synthesis.hpp"

#include <benchmark/benchmark.h>

using namespace safeloop;

namespace {

HatSystem case_study() {
  HatSystem h;
  h.Ahat = -Matrix::Identity(2, 2);
  h.Bhat = Matrix::Zero(2, 1);
  h.Bhat(0, 0) = 1.0;
  h.Chat = Matrix::Zero(1, 2);
  h.Chat(0, 0) = 1.0;
  h.B1 = Matrix(2, 4);
  h.B1 << Matrix::Identity(2, 2), Matrix::Identity(2, 2);
  h.B1 *= 2.5;
  return h;
}

Matrix attack_shape() {
  Vector d(4);
  d << 0.5, 1.0, 0.4, 0.7;
  return d.asDiagonal();
}

Execution mode(const benchmark::State& s) { return s.range(0) ? Execution::Parallel : Execution::Serial; }

void BM_AssessGrid(benchmark::State& state) {
  const HatSystem h = case_study();
  const ClosedLoop cl(h.Ahat, Matrix(2, 0), Matrix(0, 2), Matrix(0, 0), h.B1);
  const Ellipsoid safe(0.022 * Matrix::Identity(2, 2));
  ScalarGrid grid = ScalarGrid::defaults();
  grid.deltas = {0.99};
  AnalysisOptions o;
  o.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(assess_worst_attack(cl, safe, grid, o));
}

void BM_SynthesisGrid(benchmark::State& state) {
  const HatSystem h = case_study();
  const Ellipsoid safe(0.022 * Matrix::Identity(2, 2));
  ScalarGrid grid = ScalarGrid::defaults();
  grid.alphas = {0.0625, 0.125, 0.25, 0.5, 1.0};
  grid.deltas = {0.9, 0.99};
  SynthesisOptions o;
  o.execution = mode(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(synthesize_grid(h, safe, attack_shape(), grid, Objective::MinTraceX, o));
}

void BM_SimulationBatch(benchmark::State& state) {
  const HatSystem h = case_study();
  const ClosedLoop cl(h.Ahat, Matrix(2, 0), Matrix(0, 2), Matrix(0, 0), h.B1);
  const Matrix Ra = attack_shape();
  std::vector<BatchRun> runs;
  for (std::uint64_t i = 0; i < 32; ++i) runs.push_back({Vector::Constant(2, 0.1), AttackPolicy::random(Ra, 0.1, i)});
  const Ellipsoid safe(0.022 * Matrix::Identity(2, 2));
  for (auto _ : state)
    benchmark::DoNotOptimize(check_batch(cl, runs, 1.0, 1e-3, safe, Matrix::Identity(2, 2), mode(state)));
}

}  // namespace

BENCHMARK(BM_AssessGrid)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SynthesisGrid)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulationBatch)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
