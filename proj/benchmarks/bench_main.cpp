#include <benchmark/benchmark.h>

#include "gfflab/clusters.hpp"
#include "gfflab/experiments.hpp"
#include "gfflab/gff.hpp"
#include "gfflab/green.hpp"
#include "gfflab/kernel.hpp"
#include "gfflab/loopsoup.hpp"

using namespace gfflab;

namespace {

DomainGraph half_disc(int r) {
  DomainSpec s;
  s.shape = Shape::half_disc;
  s.width = r;
  return build_domain(s);
}

DomainGraph square(int side) {
  DomainSpec s;
  s.width = s.height = side;
  return build_domain(s);
}

void BM_GreenFactor(benchmark::State& st) {
  DomainGraph d = half_disc(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(green(d, GreenMode::automatic, false));
  st.counters["vertices"] = d.free_count();
}
BENCHMARK(BM_GreenFactor)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_SampleGff(benchmark::State& st) {
  DomainGraph d = half_disc(static_cast<int>(st.range(0)));
  GreenMatrix g = green(d, GreenMode::automatic, false);
  Rng rng = rng_stream(1, 0);
  for (auto _ : st) benchmark::DoNotOptimize(sample_gff(g, d, {}, Gauge::marked_point, rng));
}
BENCHMARK(BM_SampleGff)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_CellComplex(benchmark::State& st) {
  DomainGraph d = half_disc(static_cast<int>(st.range(0)));
  GreenMatrix g = green(d, GreenMode::automatic, false);
  Rng rng = rng_stream(1, 1);
  FieldSample f = sample_gff(g, d, {}, Gauge::marked_point, rng);
  for (auto _ : st) {
    EdgeZeroMarks m = cable_zero_marks(f, d, rng);
    benchmark::DoNotOptimize(boundary_cells(f, m, d, rng));
  }
}
BENCHMARK(BM_CellComplex)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_Soup(benchmark::State& st) {
  DomainGraph d = square(static_cast<int>(st.range(0)));
  TransitionKernel k(d);
  SoupSampler s(k, 1.0, st.range(1) ? SoupMethod::length_bridge : SoupMethod::excursion);
  Rng rng = rng_stream(1, 2);
  for (auto _ : st) benchmark::DoNotOptimize(s.sample(rng));
  st.SetLabel(st.range(1) ? "length_bridge" : "excursion");
}
BENCHMARK(BM_Soup)->Args({7, 0})->Args({7, 1})->Args({17, 0})->Args({17, 1})->Unit(benchmark::kMicrosecond);

void BM_CableClusters(benchmark::State& st) {
  DomainGraph d = square(static_cast<int>(st.range(0)));
  TransitionKernel k(d);
  SoupSampler s(k, 1.0);
  Rng rng = rng_stream(1, 3);
  for (auto _ : st) {
    LoopSoup soup = s.sample(rng);
    OccupationField o = occupation(soup, k, rng);
    benchmark::DoNotOptimize(cable_soup_clusters(soup, o, d, rng));
  }
}
BENCHMARK(BM_CableClusters)->Arg(7)->Arg(17)->Unit(benchmark::kMicrosecond);

void BM_MassPoint(benchmark::State& st) {
  const int len = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(mass_point(len, len / 5, 0.1));
}
BENCHMARK(BM_MassPoint)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
