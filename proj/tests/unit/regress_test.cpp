#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "welfarecast/error.hpp"
#include "welfarecast/regress.hpp"

using namespace welfarecast;

namespace {

DesignMatrix design(const Eigen::MatrixXd& x, int groups_count) {
  DesignMatrix d;
  d.values = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    d.groups.push_back("g" + std::to_string(i % groups_count));
    d.keys.push_back({d.groups.back(), 1, Visit::PostPlanting});
  }
  return d;
}

double max_abs_diff(const Eigen::VectorXd& a, const std::vector<double>& b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a(i) - b[static_cast<std::size_t>(i)]));
  return m;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("feature sets and fusion widths") {
  CHECK(parse_feature_set("weather") == FeatureSet{false, false, true});
  CHECK(parse_feature_set("weather,nl+ms") == FeatureSet{true, true, true});
  CHECK(to_string(FeatureSet{true, false, true}) == "ms,weather");
  CHECK(feature_set_label(FeatureSet{true, true, false}) == "ms+nl");
  CHECK_THROWS_AS(parse_feature_set(""), Error);
  CHECK_THROWS_AS(parse_feature_set("ms,sar"), Error);

  ImageFeatureRecord img{{"e", 1, Visit::PostPlanting}, std::vector<double>(512, 1.0), std::vector<double>(512, 2.0)};
  WeatherFeatureVector w;
  w.values.fill(3.0);
  CHECK(fuse_features(nullptr, &w, {false, false, true}).size() == 48);
  const auto full = fuse_features(&img, &w, {true, true, true});
  REQUIRE(full.size() == 1072);
  CHECK(full[0] == 1.0);
  CHECK(full[512] == 2.0);
  CHECK(full[1024] == 3.0);
  CHECK(feature_names({true, true, true})[1024] == "w01");
  CHECK(kind_of([&] { fuse_features(nullptr, &w, {true, false, false}); }) == ErrorKind::MissingBlock);
}

TEST_CASE("one standardized feature matches the closed form") {
  // z is already standardized (mean 0, population sd 1).
  Eigen::MatrixXd x(4, 1);
  x << -1, -1, 1, 1;
  Eigen::VectorXd y(4);
  y << 0.5, -0.25, 2.0, 1.75;
  for (double lambda : {0.0, 0.5, 3.0, 100.0}) {
    const auto m = ridge_fit(x, y, lambda);
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double expected = x.col(0).dot(yc) / (x.col(0).squaredNorm() + lambda);
    CHECK(std::fabs(m.coefficients(0) - expected) < 1e-12);
    CHECK(m.intercept == doctest::Approx(y.mean()).epsilon(1e-15));
  }
}

TEST_CASE("huge lambda shrinks to the mean") {
  oracle::Gen gen(1);
  const auto x = fixture::to_eigen(gen.normal_matrix(40, 6));
  const auto y = fixture::to_eigen(gen.normal_vector(40));
  const auto m = ridge_fit(x, y, 1e12);
  CHECK(m.coefficients.cwiseAbs().maxCoeff() < 1e-6);
  const auto p = predict_aligned(m, x);
  CHECK((p.array() - y.mean()).abs().maxCoeff() < 1e-6);
}

TEST_CASE("closed form agrees with gradient descent") {
  oracle::Gen gen(99);
  const auto grid = default_lambda_grid();
  for (int trial = 0; trial < 25; ++trial) {
    const auto xm = gen.normal_matrix(50, 10);
    std::vector<double> y(50);
    for (std::size_t i = 0; i < 50; ++i) y[i] = xm[i][0] - 2.0 * xm[i][3] + 0.5 * gen.normal();
    const double lambda = grid[static_cast<std::size_t>(gen.integer(0, static_cast<int>(grid.size()) - 1))];
    const auto m = ridge_fit(fixture::to_eigen(xm), fixture::to_eigen(y), lambda);
    const auto ref = oracle::ridge_gradient_descent(xm, y, lambda);
    CAPTURE(lambda);
    CHECK(max_abs_diff(m.coefficients, ref.beta) < 1e-8);
  }
}

TEST_CASE("dual system for wide designs agrees with gradient descent") {
  oracle::Gen gen(42);
  for (int trial = 0; trial < 5; ++trial) {
    const auto xm = gen.normal_matrix(15, 40);
    const auto y = gen.normal_vector(15);
    const double lambda = gen.real(0.5, 20.0);
    const auto m = ridge_fit(fixture::to_eigen(xm), fixture::to_eigen(y), lambda);
    const auto ref = oracle::ridge_gradient_descent(xm, y, lambda);
    CHECK(max_abs_diff(m.coefficients, ref.beta) < 1e-8);
  }
}

TEST_CASE("collinear design at lambda 0 is singular; constant columns are dropped") {
  Eigen::MatrixXd x(5, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 4, 6;
  CHECK(kind_of([&] { ridge_fit(x, y, 0.0); }) == ErrorKind::SingularSystem);
  CHECK_NOTHROW(ridge_fit(x, y, 1e-3));

  Eigen::MatrixXd with_const(5, 2);
  with_const << 1, 7, 2, 7, 3, 7, 4, 7, 5, 7;
  const auto m = ridge_fit(with_const, y, 0.1);
  CHECK(m.stdevs(1) == 0.0);
  CHECK(m.coefficients(1) == 0.0);
  CHECK(std::isfinite(predict_row(m, std::vector<double>{3.0, 9.0})));
}

TEST_CASE("predictions at the training means return the intercept") {
  oracle::Gen gen(5);
  const auto x = fixture::to_eigen(gen.normal_matrix(30, 4));
  const auto y = fixture::to_eigen(gen.normal_vector(30));
  const auto m = ridge_fit(x, y, 0.7);
  const Eigen::VectorXd means = x.colwise().mean();
  CHECK(predict_row(m, std::vector<double>(means.data(), means.data() + means.size())) == m.intercept);
}

TEST_CASE("column scaling does not change predictions; shrinkage is monotone") {
  oracle::Gen gen(6);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x = fixture::to_eigen(gen.normal_matrix(30, 5));
    const auto y = fixture::to_eigen(gen.normal_vector(30));
    const double lambda = gen.real(0.01, 50.0);
    const auto base = predict_aligned(ridge_fit(x, y, lambda), x);
    const Eigen::Index j = gen.integer(0, 4);
    const double c = gen.real(0.001, 1000.0);
    x.col(j) *= c;
    const auto scaled = predict_aligned(ridge_fit(x, y, lambda), x);
    CHECK((base - scaled).cwiseAbs().maxCoeff() < 1e-8);

    const double l1 = gen.real(0.001, 10.0), l2 = l1 * gen.real(1.01, 100.0);
    CHECK(ridge_fit(x, y, l1).coefficients.norm() >= ridge_fit(x, y, l2).coefficients.norm());
  }
}

TEST_CASE("predict aligns columns by name") {
  oracle::Gen gen(8);
  const auto x = fixture::to_eigen(gen.normal_matrix(20, 3));
  const auto y = fixture::to_eigen(gen.normal_vector(20));
  const auto d = design(x, 5);
  const auto m = ridge_fit(d, y, 1.0);
  DesignMatrix swapped = d;
  swapped.feature_names = {"x3", "x1", "x2"};
  swapped.values.col(0) = x.col(2);
  swapped.values.col(1) = x.col(0);
  swapped.values.col(2) = x.col(1);
  CHECK((predict(m, swapped) - predict(m, d)).cwiseAbs().maxCoeff() < 1e-12);
  swapped.feature_names[0] = "other";
  CHECK(kind_of([&] { predict(m, swapped); }) == ErrorKind::MissingFeature);
}

TEST_CASE("r2_score") {
  Eigen::VectorXd y(3), yhat(3);
  y << 1, 2, 3;
  yhat << 1, 2, 4;
  CHECK(r2_score(y, yhat) == doctest::Approx(0.5));
  CHECK(kind_of([&] { r2_score(Eigen::VectorXd::Ones(3), yhat); }) == ErrorKind::DegenerateTarget);
}

TEST_CASE("group folds keep every EA on one side") {
  oracle::Gen gen(13);
  std::vector<std::string> groups;
  for (int i = 0; i < 200; ++i) groups.push_back("ea" + std::to_string(gen.integer(0, 36)));
  const auto folds = assign_group_folds(groups, 5, 77);
  std::map<std::string, std::set<int>> seen;
  for (std::size_t i = 0; i < groups.size(); ++i) seen[groups[i]].insert(folds[i]);
  std::set<int> used;
  for (const auto& [g, f] : seen) {
    CHECK(f.size() == 1);
    used.insert(*f.begin());
  }
  CHECK(used.size() == 5);
  CHECK(assign_group_folds(groups, 5, 77) == folds);
  CHECK(kind_of([&] { assign_group_folds({"a", "b", "c", "a"}, 5, 1); }) == ErrorKind::TooFewGroups);
}

TEST_CASE("cross-validated lambda") {
  oracle::Gen gen(17);
  const auto x = fixture::to_eigen(gen.normal_matrix(60, 4));
  Eigen::VectorXd y = 1.5 * x.col(0) - x.col(2) + 0.2 * x.col(3);
  const auto d = design(x, 12);

  const std::vector<double> single{3.0};
  const auto one = cv_select_lambda(d, y, single, 4, 1);
  CHECK(one.best_lambda == 3.0);
  CHECK(one.table.size() == 4);

  const auto grid = default_lambda_grid();
  REQUIRE(grid.size() == 17);
  CHECK(grid.front() == doctest::Approx(1e-4));
  CHECK(grid.back() == doctest::Approx(1e4));
  const auto noiseless = cv_select_lambda(d, y, grid, 5, 3);
  CHECK(noiseless.best_lambda == grid.front());
  // exhaustive check of the selection rule
  std::size_t arg = 0;
  for (std::size_t l = 0; l < grid.size(); ++l)
    if (noiseless.mean_r2[l] >= noiseless.mean_r2[arg]) arg = l;
  CHECK(noiseless.grid[arg] == noiseless.best_lambda);

  // constant features: every lambda predicts the fold mean, so all tie
  const Eigen::VectorXd noise = fixture::to_eigen(gen.normal_vector(60));
  const auto flat = design(Eigen::MatrixXd::Constant(60, 2, 4.0), 12);
  const std::vector<double> two{0.1, 10.0};
  const auto tie = cv_select_lambda(flat, noise, two, 3, 2);
  CHECK(tie.mean_r2[0] == tie.mean_r2[1]);
  CHECK(tie.best_lambda == 10.0);

  // folds partition groups, and a rerun is identical
  const auto again = cv_select_lambda(d, y, grid, 5, 3);
  CHECK(again.fold_of_row == noiseless.fold_of_row);
  CHECK(again.mean_r2 == noiseless.mean_r2);
  std::map<std::string, std::set<int>> seen;
  for (std::size_t i = 0; i < d.groups.size(); ++i) seen[d.groups[i]].insert(noiseless.fold_of_row[i]);
  for (const auto& [g, f] : seen) CHECK(f.size() == 1);

  const auto few = design(x, 3);
  CHECK(kind_of([&] { cv_select_lambda(few, y, grid, 5, 1); }) == ErrorKind::TooFewGroups);
}

TEST_CASE("model and cv table files") {
  oracle::Gen gen(23);
  const auto x = fixture::to_eigen(gen.normal_matrix(25, 3));
  const auto y = fixture::to_eigen(gen.normal_vector(25));
  auto m = ridge_fit(design(x, 5), y, 0.3);
  m.train_metadata["target"] = "log_consumption";
  fixture::TempDir dir;
  write_model(m, dir / "m.json");
  const auto back = read_model(dir / "m.json");
  CHECK(back.lambda == m.lambda);
  CHECK(back.feature_names == m.feature_names);
  CHECK(back.means == m.means);
  CHECK(back.stdevs == m.stdevs);
  CHECK(back.coefficients == m.coefficients);
  CHECK(back.intercept == m.intercept);
  CHECK(back.train_metadata == m.train_metadata);

  const auto cv = cv_select_lambda(design(x, 5), y, default_lambda_grid(), 5, 1);
  write_cv_table(cv, dir / "cv.csv");
  const auto text = fixture::read_text(dir / "cv.csv");
  CHECK(text.rfind("lambda,fold,r2\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 17 * 5);
}
