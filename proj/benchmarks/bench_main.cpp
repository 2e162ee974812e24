#include <benchmark/benchmark.h>

#include <random>

#include "ctm/harness.hpp"
#include "ctm/neighbour_index.hpp"
#include "ctm/normals.hpp"
#include "ctm/preprocess.hpp"
#include "ctm/synth.hpp"

using namespace ctm;

namespace {

std::vector<Vec3> random_points(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  return pts;
}

}  // namespace

static void BM_IndexBuild(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(NeighbourIndex(pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IndexBuild)->Arg(1000)->Arg(10000)->Arg(100000);

static void BM_NearestQuery(benchmark::State& state) {
  const NeighbourIndex index(random_points(static_cast<std::size_t>(state.range(0))));
  const auto queries = random_points(1024);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(index.nearest(queries[i++ & 1023]));
}
BENCHMARK(BM_NearestQuery)->Arg(1000)->Arg(100000);

static void BM_Normals(benchmark::State& state) {
  CheckerboardSpec spec;
  spec.point_spacing = spec.side_length() / static_cast<double>(state.range(0));
  const PointCloud board = generate_checkerboard(spec);
  NormalParams p;
  p.radius = 2.5 * spec.point_spacing;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_normals(board, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(board.size()));
}
BENCHMARK(BM_Normals)->Arg(20)->Arg(100);

static void BM_Otsu(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(100000);
  for (auto& x : v) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(otsu_threshold(v));
}
BENCHMARK(BM_Otsu);

// One simulation trial: the unit of work in every sweep.
static void BM_Trial(benchmark::State& state) {
  TrialConfig cfg;
  cfg.method = state.range(0) == 0 ? Method::Coloured : Method::PointToPlane;
  cfg.icp = default_trial_icp(cfg.spec);
  cfg.shift_fraction = 0.5;
  cfg.in_plane_deg = 10;
  cfg.out_plane_deg = 10;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = seed++;
    benchmark::DoNotOptimize(run_trial(cfg));
  }
}
BENCHMARK(BM_Trial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
