#include <benchmark/benchmark.h>

#include <random>

#include "mgq/batch.hpp"

using namespace mgq;

namespace {

ManifoldModel h2_model(double B) {
  ModelSpec s;
  s.base = BaseKind::hyperboloid_h2;
  s.n = 2;
  if (B != 0.0) s.field = {FieldKind::area_form, B, {}};
  return builtin_model(s);
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

void BM_FrontMap(benchmark::State& st, bool parallel) {
  auto m = h2_model(0.0);
  Grid scan = Grid::square(2, 3.0, static_cast<int>(st.range(0)));
  for (auto _ : st) {
    auto f = parallel ? front_map_batch(m, v2(-0.5, 0), v2(0.5, 0), scan)
                      : front_map_batch_ref(m, v2(-0.5, 0), v2(0.5, 0), scan);
    benchmark::DoNotOptimize(f.J.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(scan.size()));
}

void BM_StarFiber(benchmark::State& st, bool parallel) {
  auto m = h2_model(1.0);
  std::mt19937_64 rng(5);
  PVec x0(4), x1(4);
  x0 << 0.1, -0.2, 0.3, 0.1;
  x1 << -0.1, 0.1, -0.2, 0.2;
  auto F = random_gaussian(rng, 2, x0, 0.6, 1.2, 1.0).fourier(m, 0.3);
  auto G = random_gaussian(rng, 2, x1, 0.6, 1.2, 1.0).fourier(m, 0.3);
  ConvolutionOptions o;
  o.m_nodes = o.u_nodes = static_cast<int>(st.range(0));
  std::vector<Vec> ps{v2(0.3, 0.1)};
  for (auto _ : st) {
    auto v = parallel ? star_fiber_omp(m, F, G, v2(0.1, -0.2), ps, o)
                      : star_fiber_ref(m, F, G, v2(0.1, -0.2), ps, o);
    benchmark::DoNotOptimize(v.data());
  }
}

void BM_Sigma(benchmark::State& st, bool parallel) {
  auto m = h2_model(1.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  std::vector<PhasePoint> xs, xps;
  for (long i = 0; i < st.range(0); ++i) {
    xs.push_back({v2(u(rng), u(rng)), v2(u(rng), u(rng))});
    xps.push_back({v2(u(rng), u(rng)), v2(u(rng), u(rng))});
  }
  for (auto _ : st) {
    auto r = parallel ? sigma_batch(m, xs, xps) : sigma_batch_ref(m, xs, xps);
    benchmark::DoNotOptimize(r.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_FrontMap, ref, false)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_FrontMap, omp, true)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_StarFiber, ref, false)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_StarFiber, omp, true)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Sigma, ref, false)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Sigma, omp, true)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
