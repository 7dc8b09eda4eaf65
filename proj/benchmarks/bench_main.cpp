#include <benchmark/benchmark.h>

#include <random>

#include "welfarecast/composite.hpp"
#include "welfarecast/diagnose.hpp"
#include "welfarecast/regress.hpp"
#include "welfarecast/weather.hpp"

using namespace welfarecast;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index p, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = z(rng);
  return x;
}

// Ridge problem setup (standardize + Gram) and one solve, primal and dual shapes.
void BM_RidgeFit(benchmark::State& state) {
  const auto n = state.range(0), p = state.range(1);
  const Eigen::MatrixXd x = random_matrix(n, p, 1);
  const Eigen::VectorXd y = random_matrix(n, 1, 2).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(ridge_fit(x, y, 10.0).intercept);
}
BENCHMARK(BM_RidgeFit)->Args({50, 10})->Args({960, 48})->Args({960, 1072})->Unit(benchmark::kMillisecond);

void BM_CvSelectLambda(benchmark::State& state) {
  const auto n = state.range(0), p = state.range(1);
  DesignMatrix d;
  d.values = random_matrix(n, p, 3);
  for (Eigen::Index j = 0; j < p; ++j) d.feature_names.push_back("x" + std::to_string(j));
  for (Eigen::Index i = 0; i < n; ++i) d.groups.push_back(std::to_string(i / 8));
  d.keys.resize(static_cast<std::size_t>(n));
  const Eigen::VectorXd y = d.values.col(0) + random_matrix(n, 1, 4).col(0);
  const auto grid = default_lambda_grid();
  for (auto _ : state) benchmark::DoNotOptimize(cv_select_lambda(d, y, grid, 5, 42).best_lambda);
}
BENCHMARK(BM_CvSelectLambda)->Args({400, 48})->Args({400, 1072})->Unit(benchmark::kMillisecond);

void BM_Quintiles(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 40);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (double& e : v) e = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(empirical_quintiles(v));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Quintiles)->Arg(30)->Arg(200)->Arg(10000);

void BM_WssTss(benchmark::State& state) {
  const Eigen::MatrixXd x = random_matrix(1200, state.range(0), 6);
  std::vector<std::string> groups;
  for (int i = 0; i < 1200; ++i) groups.push_back("ea" + std::to_string(i / 8));
  for (auto _ : state) benchmark::DoNotOptimize(wss_tss_ratio(x, groups));
}
BENCHMARK(BM_WssTss)->Arg(48)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_MedianComposite(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> u(0, 1);
  TileStack s;
  s.width = s.height = kExportTileSide;
  s.bands = {Band::RED, Band::GREEN, Band::BLUE, Band::NIR, Band::SWIR1, Band::SWIR2, Band::TEMP1};
  const Date end = parse_date("2016-01-01");
  const auto pixels = static_cast<std::size_t>(kExportTileSide * kExportTileSide);
  for (int o = 0; o < state.range(0); ++o) {
    TileObservation obs;
    obs.date = end - std::chrono::days{1 + o * 16};
    obs.bands.assign(s.bands.size(), std::vector<float>(pixels));
    for (auto& b : obs.bands)
      for (float& v : b) v = u(rng);
    obs.cloudy.resize(pixels);
    for (auto& c : obs.cloudy) c = u(rng) < 0.3f;
    s.observations.push_back(std::move(obs));
  }
  for (auto _ : state) benchmark::DoNotOptimize(median_composite(s, end).valid.data());
}
BENCHMARK(BM_MedianComposite)->Arg(8)->Arg(22)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
