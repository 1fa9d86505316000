// Serial reference paths against the OpenMP paths for the heavy kernels.
#include <benchmark/benchmark.h>

#include "nhm/bands.hpp"
#include "nhm/emsum.hpp"
#include "nhm/oracle.hpp"
#include "nhm/ribbon.hpp"
#include "nhm/scatter.hpp"

using namespace nhm;

namespace {

const Lattice2D rect = Lattice2D::rectangular(0.2, 1.1);

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::parallel : Exec::serial; }

void BM_sample_grid(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(sample_grid(rect, q0, {}, cone_box(q0), 61, 0.0, exec_of(s)));
}

void BM_assemble_ribbon(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(assemble_ribbon(rect, {1, 1}, 80, 0.1 * pi / 0.2, q0, exec_of(s)));
}

void BM_interaction_hamiltonian(benchmark::State& s) {
  const DipoleScene scene = array_scene(Lattice2D::square(0.2), 24, 24);
  for (auto _ : s) benchmark::DoNotOptimize(interaction_hamiltonian(scene, exec_of(s)));
}

void BM_hollow_sum(benchmark::State& s) {
  const TilingSpec spec = make_tiling(rect, 6, 8.0);
  const SmoothField f = green_field(q0);
  const Vec2 k(0.31 * q0, -0.17 * q0);
  for (auto _ : s) benchmark::DoNotOptimize(hollow_sum(f, spec, k, exec_of(s)));
}

void BM_realspace_oracle(benchmark::State& s) {
  OracleOptions opt;
  opt.h = 0.3;
  opt.n = 10;
  opt.exec = exec_of(s);
  for (auto _ : s) benchmark::DoNotOptimize(realspace_green_sum(rect, Vec2(0.2 * q0, 0.1 * q0), q0, Vec2::Zero(), opt));
}

}  // namespace

// argument 0 runs the serial reference, 1 the OpenMP path
BENCHMARK(BM_sample_grid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_assemble_ribbon)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_interaction_hamiltonian)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_hollow_sum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_realspace_oracle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
