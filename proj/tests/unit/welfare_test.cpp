#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "welfarecast/error.hpp"
#include "welfarecast/welfare.hpp"

using namespace welfarecast;

namespace {

AssetInventory inv(SurveySource src, const std::string& hh, std::map<std::string, int> own, const std::string& ea = "e",
                   int year = 2012) {
  return {hh, src, year, ea, std::move(own)};
}

std::vector<double> loadings_of(const AssetIndexModel& m) { return {m.loadings.data(), m.loadings.data() + m.loadings.size()}; }

}  // namespace

TEST_CASE("pooled matrix keeps assets asked in both surveys") {
  const std::vector<AssetInventory> invs{
      inv(SurveySource::GHS, "g1", {{"radio", 1}, {"tv", 0}}),
      inv(SurveySource::GHS, "g2", {{"radio", 0}, {"tv", 1}}),
      inv(SurveySource::DHS, "d1", {{"tv", 1}, {"car", 0}}),
  };
  const auto pooled = build_pooled_asset_matrix(invs);
  CHECK(pooled.asset_names == std::vector<std::string>{"tv"});
  REQUIRE(pooled.values.rows() == 3);
  CHECK(pooled.values(0, 0) == 0.0);
  CHECK(pooled.values(1, 0) == 1.0);
  CHECK(pooled.values(2, 0) == 1.0);
}

TEST_CASE("pooled matrix errors") {
  const std::vector<AssetInventory> ghs_only{inv(SurveySource::GHS, "g1", {{"tv", 1}}),
                                             inv(SurveySource::GHS, "g2", {{"tv", 1}})};
  CHECK_THROWS_WITH_AS(build_pooled_asset_matrix(ghs_only), doctest::Contains("both GHS and DHS"), Error);
  try {
    build_pooled_asset_matrix(ghs_only);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoCommonAssets);
  }
  const std::vector<AssetInventory> gap{inv(SurveySource::GHS, "g1", {{"tv", 1}, {"radio", 1}}),
                                        inv(SurveySource::GHS, "g2", {{"tv", 1}}),
                                        inv(SurveySource::DHS, "d1", {{"tv", 0}, {"radio", 0}})};
  try {
    build_pooled_asset_matrix(gap);
    FAIL("expected MissingAssetError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingAsset);
  }
}

TEST_CASE("pooled matrix reproduces a 4x3 input cell for cell") {
  const int cells[4][3] = {{1, 0, 1}, {0, 0, 1}, {1, 1, 0}, {0, 1, 1}};
  std::vector<AssetInventory> invs;
  for (int i = 0; i < 4; ++i)
    invs.push_back(inv(i < 2 ? SurveySource::GHS : SurveySource::DHS, "h" + std::to_string(i),
                       {{"a", cells[i][0]}, {"b", cells[i][1]}, {"c", cells[i][2]}}));
  const auto pooled = build_pooled_asset_matrix(invs);
  CHECK(pooled.asset_names == std::vector<std::string>{"a", "b", "c"});
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) CHECK(pooled.values(i, j) == cells[i][j]);
}

TEST_CASE("asset index: symmetric and degenerate cases") {
  Eigen::MatrixXd twin(4, 2);
  twin << 1, 1, 0, 0, 1, 1, 0, 0;
  const auto m = fit_asset_index(twin, {"a", "b"});
  CHECK(m.loadings(0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(m.loadings(1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  Eigen::MatrixXd with_constant(4, 2);
  with_constant << 1, 1, 0, 1, 1, 1, 0, 1;
  const auto c = fit_asset_index(with_constant, {"a", "always"});
  CHECK(c.asset_names == std::vector<std::string>{"a"});
  CHECK(c.dropped_assets == std::vector<std::string>{"always"});
  REQUIRE(c.loadings.size() == 1);
  CHECK(c.loadings(0) == 1.0);

  Eigen::MatrixXd all_constant = Eigen::MatrixXd::Ones(3, 2);
  CHECK_THROWS_AS(fit_asset_index(all_constant, {"a", "b"}), Error);
  CHECK_THROWS_AS(fit_asset_index(Eigen::MatrixXd::Ones(1, 2), {"a", "b"}), Error);
}

TEST_CASE("asset index agrees with power iteration on random binary matrices") {
  oracle::Gen gen(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = gen.binary_matrix(20, 5);
    std::vector<std::size_t> kept;
    const auto reference = oracle::pca_power_iteration(x, &kept);
    std::vector<std::string> names{"a", "b", "c", "d", "e"};
    try {
      const auto m = fit_asset_index(fixture::to_eigen(x), names);
      REQUIRE(static_cast<std::size_t>(m.loadings.size()) == kept.size());
      CHECK(std::fabs(oracle::cosine(loadings_of(m), reference)) > 1.0 - 1e-10);
      CHECK(m.loadings.norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(m.loadings.sum() >= 0.0);
    } catch (const Error& e) {
      CHECK(kept.empty());
    }
  }
}

TEST_CASE("PC1 beats random directions and ignores row order") {
  oracle::Gen gen(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = gen.binary_matrix(30, 4);
    const Eigen::MatrixXd mx = fixture::to_eigen(x);
    AssetIndexModel m;
    try {
      m = fit_asset_index(mx, {"a", "b", "c", "d"});
    } catch (const Error&) {
      continue;
    }
    if (m.loadings.size() != 4) continue;
    Eigen::MatrixXd z = (mx.rowwise() - m.means.transpose()).array().rowwise() / m.stdevs.transpose().array();
    const double best = (z * m.loadings).squaredNorm();
    for (int r = 0; r < 100; ++r) {
      Eigen::VectorXd u(4);
      for (int j = 0; j < 4; ++j) u(j) = gen.normal();
      u.normalize();
      CHECK(best >= (z * u).squaredNorm() - 1e-9);
    }
    std::vector<int> order(30);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), gen.engine);
    Eigen::MatrixXd permuted(30, 4);
    for (int i = 0; i < 30; ++i) permuted.row(i) = mx.row(order[static_cast<std::size_t>(i)]);
    const auto p = fit_asset_index(permuted, {"a", "b", "c", "d"});
    CHECK((p.loadings - m.loadings).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("dropping a constant column leaves the rest in agreement with the oracle") {
  oracle::Gen gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = gen.binary_matrix(25, 4);
    const auto reference = oracle::pca_power_iteration(x);
    for (auto& row : x) row.push_back(1.0);
    const auto m = fit_asset_index(fixture::to_eigen(x), {"a", "b", "c", "d", "k"});
    CHECK(m.dropped_assets == std::vector<std::string>{"k"});
    CHECK(std::fabs(oracle::cosine(loadings_of(m), reference)) > 1.0 - 1e-10);
  }
}

TEST_CASE("scores: symmetry and training projection") {
  Eigen::MatrixXd half(2, 2);
  half << 1, 1, 0, 0;
  const auto hm = fit_asset_index(half, {"a", "b"});
  const double s_hi = score_asset_index(hm, inv(SurveySource::GHS, "h", {{"a", 1}, {"b", 1}}));
  const double s_lo = score_asset_index(hm, inv(SurveySource::GHS, "l", {{"a", 0}, {"b", 0}}));
  CHECK(s_hi == doctest::Approx(-s_lo));
  const auto groups = aggregate_asset_index(hm, std::vector<AssetInventory>{inv(SurveySource::GHS, "h", {{"a", 1}, {"b", 1}}),
                                                                            inv(SurveySource::GHS, "l", {{"a", 0}, {"b", 0}})});
  REQUIRE(groups.size() == 1);
  CHECK(std::fabs(groups.begin()->second) < 1e-15);

  oracle::Gen gen(8);
  const auto rx = gen.binary_matrix(15, 3);
  const Eigen::MatrixXd ex = fixture::to_eigen(rx);
  const auto rm = fit_asset_index(ex, {"a", "b", "c"});
  for (int i = 0; i < 15; ++i) {
    AssetInventory row{"h", SurveySource::GHS, 2012, "e", {}};
    for (int j = 0; j < 3; ++j) row.ownership[std::string(1, static_cast<char>('a' + j))] = static_cast<int>(ex(i, j));
    double expected = 0.0;
    for (Eigen::Index k = 0; k < rm.loadings.size(); ++k) {
      const auto j = static_cast<Eigen::Index>(rm.asset_names[static_cast<std::size_t>(k)][0] - 'a');
      expected += (ex(i, j) - rm.means(k)) / rm.stdevs(k) * rm.loadings(k);
    }
    CHECK(score_asset_index(rm, row) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("a household at the column means scores zero") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 0, 0, 1, 1, 1, 0, 0;  // means (0.5, 0.5)
  auto m = fit_asset_index(x, {"a", "b"});
  // Shift the means to a representable binary point to probe centering.
  m.means << 1.0, 0.0;
  CHECK(score_asset_index(m, inv(SurveySource::GHS, "h", {{"a", 1}, {"b", 0}})) == 0.0);
}

TEST_CASE("log consumption aggregation") {
  const VisitKey key{"e", 1, Visit::PostPlanting};
  std::vector<HouseholdConsumptionRecord> one{{"h", key, std::exp(1.0), 1}};
  CHECK(aggregate_log_consumption(one, key).value == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<HouseholdConsumptionRecord> two{{"a", key, 2.0, 2}, {"b", key, 6.0, 2}};
  CHECK(aggregate_log_consumption(two, key).value == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  oracle::Gen gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<HouseholdConsumptionRecord> g;
    for (int i = 0; i < gen.integer(1, 12); ++i) g.push_back({"h" + std::to_string(i), key, gen.real(1, 5000), gen.integer(1, 9)});
    const double base = aggregate_log_consumption(g, key).value;
    const double c = gen.real(0.01, 100);
    auto scaled = g;
    for (auto& h : scaled) h.total_expenditure *= c;
    CHECK(aggregate_log_consumption(scaled, key).value == doctest::Approx(base + std::log(c)).epsilon(1e-12));
    auto shuffled = g;
    std::shuffle(shuffled.begin(), shuffled.end(), gen.engine);
    CHECK(aggregate_log_consumption(shuffled, key).value == doctest::Approx(base).epsilon(1e-14));
    auto doubled = g;
    doubled.insert(doubled.end(), g.begin(), g.end());
    CHECK(aggregate_log_consumption(doubled, key).value == doctest::Approx(base).epsilon(1e-14));
  }

  std::vector<HouseholdConsumptionRecord> other{{"a", {"x", 1, Visit::PostPlanting}, 2.0, 1}};
  CHECK_THROWS_AS(aggregate_log_consumption(other, key), Error);
  std::vector<HouseholdConsumptionRecord> zero{{"a", key, 0.0, 1}};
  CHECK_THROWS_AS(aggregate_log_consumption(zero, key), Error);
}

TEST_CASE("asset targets attach to the wave whose post-planting visit ended in the survey year") {
  SurveyBundle b;
  b.visits = {{{"e", 1, Visit::PostPlanting}, parse_date("2010-09-20"), 9, 7},
              {{"e", 1, Visit::PostHarvest}, parse_date("2011-02-20"), 9, 7},
              {{"e", 2, Visit::PostPlanting}, parse_date("2012-09-20"), 9, 7}};
  b.assets = {inv(SurveySource::GHS, "g1", {{"tv", 1}, {"radio", 0}}, "e", 2010),
              inv(SurveySource::GHS, "g2", {{"tv", 0}, {"radio", 1}}, "e", 2010),
              inv(SurveySource::GHS, "g3", {{"tv", 1}, {"radio", 1}}, "e", 2012),
              inv(SurveySource::DHS, "d1", {{"tv", 0}, {"radio", 0}}, "z", 2013)};
  const auto model = fit_asset_index(build_pooled_asset_matrix(b.assets));
  const auto targets = asset_index_targets(b, model);
  REQUIRE(targets.size() == 3);
  std::map<VisitKey, double> by_key;
  for (const auto& t : targets) by_key[t.key] = t.value;
  CHECK(by_key.at({"e", 1, Visit::PostPlanting}) == by_key.at({"e", 1, Visit::PostHarvest}));
  CHECK(by_key.at({"e", 2, Visit::PostPlanting}) > by_key.at({"e", 1, Visit::PostPlanting}));

  fixture::TempDir dir;
  write_targets(targets, dir / "t.csv");
  CHECK(read_targets(dir / "t.csv") == targets);
  CHECK(parse_target("asset") == TargetKind::AssetIndex);
  CHECK(parse_target("consumption") == TargetKind::LogPCConsumption);
  CHECK(target_code(TargetKind::LogPCConsumption) == "log_consumption");
}
