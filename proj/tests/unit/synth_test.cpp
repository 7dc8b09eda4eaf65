#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "welfarecast/diagnose.hpp"
#include "welfarecast/error.hpp"
#include "welfarecast/ingest.hpp"
#include "welfarecast/pipeline.hpp"
#include "welfarecast/synth.hpp"

using namespace welfarecast;

namespace {

ScenarioConfig small(std::uint64_t seed) {
  ScenarioConfig c;
  c.n_eas = 30;
  c.n_dhs_eas = 15;
  c.households_per_ea = 4;
  c.seed = seed;
  return c;
}

const char* kFiles[] = {"visits.csv", "households.csv", "assets.csv", "weather.csv", "features.csv",
                        "truth.csv",  "scenario.cfg",   "grid/image_features.csv", "grid/weather_features.csv"};

}  // namespace

TEST_CASE("scenario truth bounds") {
  ScenarioConfig c;
  c.asset_share = 0.5;
  c.weather_share = 0.3;
  c.noise_share = 0.2;
  const auto t = scenario_truth(c);
  CHECK(t.consumption_full == doctest::Approx(0.8));
  CHECK(t.consumption_image_only == doctest::Approx(0.5));
  CHECK(t.noise == doctest::Approx(0.2));
  const auto d = scenario_truth(ScenarioConfig{});
  CHECK(d.consumption_full == doctest::Approx(0.75));
  CHECK(d.consumption_image_only == doctest::Approx(0.45));
}

TEST_CASE("scenario config validation and text form") {
  ScenarioConfig c;
  c.asset_share = 0.8;
  c.weather_share = 0.3;
  CHECK_THROWS_AS(c.validate(), Error);
  c = ScenarioConfig{};
  c.n_eas = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = ScenarioConfig{};
  c.asset_share = -0.1;
  CHECK_THROWS_AS(c.validate(), Error);

  const auto parsed = parse_scenario_config("# comment\nn_eas = 12\nseed=7\nweather_share=0.1\n");
  CHECK(parsed.n_eas == 12);
  CHECK(parsed.seed == 7);
  CHECK(parsed.weather_share == 0.1);
  CHECK_THROWS_AS(parse_scenario_config("n_eaz=3\n"), Error);

  fixture::TempDir dir;
  write_scenario_config(parsed, dir / "s.cfg");
  const auto back = read_scenario_config(dir / "s.cfg");
  CHECK(back.n_eas == 12);
  CHECK(back.weather_share == 0.1);
  CHECK(back.image_noise == parsed.image_noise);
}

TEST_CASE("generated files pass ingest and are byte-identical per seed") {
  fixture::TempDir a, b, c;
  generate_scenario(small(5), a.path());
  generate_scenario(small(5), b.path());
  generate_scenario(small(6), c.path());
  for (const char* f : kFiles) {
    CAPTURE(f);
    REQUIRE(std::filesystem::exists(a / f));
    CHECK(fixture::read_text(a / f) == fixture::read_text(b / f));
  }
  CHECK(fixture::read_text(a / "features.csv") != fixture::read_text(c / "features.csv"));

  const auto bundle = load_survey_bundle(a / "visits.csv", a / "households.csv", a / "assets.csv");
  CHECK(bundle.visits.size() == 30 * 4 * 2);
  CHECK(bundle.households.size() == 30 * 4 * 2 * 4);
  CHECK(load_image_features(a / "features.csv").size() == bundle.visits.size());

  RunConfig rc;
  rc.use_data_dir(a.path());
  const auto data = prepare_data(rc, FeatureSet{true, true, true});
  CHECK(data.weather_features.size() == bundle.visits.size());
  CHECK(data.targets.size() == 2 * bundle.visits.size());
}

TEST_CASE("coordinate jitter moves EAs but keeps them valid") {
  auto c = small(8);
  c.jitter_km = 10.0;
  fixture::TempDir j, p;
  generate_scenario(c, j.path());
  generate_scenario(small(8), p.path());
  const auto jittered = load_survey_bundle(j / "visits.csv", j / "households.csv", j / "assets.csv");
  const auto plain = load_survey_bundle(p / "visits.csv", p / "households.csv", p / "assets.csv");
  REQUIRE(jittered.visits.size() == plain.visits.size());
  int moved = 0;
  for (std::size_t i = 0; i < plain.visits.size(); ++i) {
    const double dlat = (jittered.visits[i].lat - plain.visits[i].lat) * 111.0;
    CHECK(std::fabs(dlat) <= 10.0 + 1e-9);
    moved += dlat != 0.0;
  }
  CHECK(moved > 0);
}

TEST_CASE("default scenario: image features vary less within EAs than consumption") {
  fixture::TempDir dir;
  generate_scenario(ScenarioConfig{}, dir.path());
  RunConfig rc;
  rc.use_data_dir(dir.path());
  const auto diag = variance_diagnostics(prepare_data(rc, FeatureSet{true, true, false}));
  std::vector<double> r;
  for (const auto& v : diag.feature_ratios) r.push_back(*v);
  std::sort(r.begin(), r.end());
  REQUIRE(diag.consumption_ratio.has_value());
  CHECK(r[r.size() / 2] < *diag.consumption_ratio);
  CHECK(*diag.asset_index_ratio < *diag.consumption_ratio);
}
