#include "welfarecast/welfare.hpp"

#include <cmath>
#include <set>

#include "welfarecast/csv.hpp"
#include "welfarecast/error.hpp"
#include "welfarecast/parallel.hpp"

namespace welfarecast {

namespace {

bool is_constant(double stdev, double mean) {
  return stdev <= 1e-12 * std::max(1.0, std::abs(mean));
}

}  // namespace

PooledAssetMatrix build_pooled_asset_matrix(std::span<const AssetInventory> inventories) {
  if (inventories.size() < 2) fail(ErrorKind::Value, "asset index needs at least 2 households");

  std::set<std::string> in_ghs;
  std::set<std::string> in_dhs;
  for (const auto& inv : inventories) {
    auto& target = inv.source == SurveySource::GHS ? in_ghs : in_dhs;
    for (const auto& [name, owned] : inv.ownership) target.insert(name);
  }
  PooledAssetMatrix pooled;
  std::set_intersection(in_ghs.begin(), in_ghs.end(), in_dhs.begin(), in_dhs.end(),
                        std::back_inserter(pooled.asset_names));
  if (pooled.asset_names.empty())
    fail(ErrorKind::NoCommonAssets, "no asset is collected by both GHS and DHS inventories");

  pooled.values.resize(static_cast<Eigen::Index>(inventories.size()),
                       static_cast<Eigen::Index>(pooled.asset_names.size()));
  for (std::size_t i = 0; i < inventories.size(); ++i) {
    const auto& inv = inventories[i];
    for (std::size_t j = 0; j < pooled.asset_names.size(); ++j) {
      auto it = inv.ownership.find(pooled.asset_names[j]);
      if (it == inv.ownership.end())
        fail(ErrorKind::MissingAsset, "household " + inv.hh_id + " has no entry for shared asset '" +
                                          pooled.asset_names[j] + "'");
      pooled.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = it->second;
    }
  }
  return pooled;
}

AssetIndexModel fit_asset_index(const Eigen::MatrixXd& matrix, const std::vector<std::string>& asset_names) {
  if (static_cast<std::size_t>(matrix.cols()) != asset_names.size())
    fail(ErrorKind::Dimension, "asset matrix has " + std::to_string(matrix.cols()) + " columns but " +
                                   std::to_string(asset_names.size()) + " names");
  if (matrix.rows() < 2) fail(ErrorKind::DegenerateMatrix, "asset index needs at least 2 rows");
  {
    std::set<std::string> unique(asset_names.begin(), asset_names.end());
    if (unique.size() != asset_names.size()) fail(ErrorKind::Value, "duplicate asset names");
  }

  const double n = static_cast<double>(matrix.rows());
  const Eigen::VectorXd all_means = matrix.colwise().mean();
  std::vector<Eigen::Index> kept;
  AssetIndexModel model;
  std::vector<double> kept_stdevs;
  for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
    const double var = (matrix.col(j).array() - all_means(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    if (is_constant(sd, all_means(j))) {
      model.dropped_assets.push_back(asset_names[static_cast<std::size_t>(j)]);
      log_warning("asset '" + asset_names[static_cast<std::size_t>(j)] + "' has zero variance; dropped");
      continue;
    }
    kept.push_back(j);
    kept_stdevs.push_back(sd);
  }
  if (kept.empty()) fail(ErrorKind::DegenerateMatrix, "every asset column is constant");

  const auto p = static_cast<Eigen::Index>(kept.size());
  model.means.resize(p);
  model.stdevs.resize(p);
  Eigen::MatrixXd z(matrix.rows(), p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const Eigen::Index j = kept[static_cast<std::size_t>(k)];
    model.asset_names.push_back(asset_names[static_cast<std::size_t>(j)]);
    model.means(k) = all_means(j);
    model.stdevs(k) = kept_stdevs[static_cast<std::size_t>(k)];
    z.col(k) = (matrix.col(j).array() - model.means(k)) / model.stdevs(k);
  }

  const Eigen::MatrixXd correlation = (z.transpose() * z) / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(correlation);
  if (eig.info() != Eigen::Success) fail(ErrorKind::DegenerateMatrix, "eigendecomposition failed");
  Eigen::VectorXd v = eig.eigenvectors().col(p - 1);
  v.normalize();

  // Orient so that loadings sum to >= 0; an exact tie goes to the first
  // nonzero loading being positive.
  const double total = v.sum();
  int sign = 1;
  if (std::abs(total) > 1e-12) {
    sign = total < 0 ? -1 : 1;
  } else {
    for (Eigen::Index k = 0; k < p; ++k) {
      if (std::abs(v(k)) > 1e-12) {
        sign = v(k) < 0 ? -1 : 1;
        break;
      }
    }
  }
  model.sign = sign;
  model.loadings = sign * v;
  return model;
}

double score_asset_index(const AssetIndexModel& model, const AssetInventory& inventory) {
  double score = 0.0;
  for (std::size_t k = 0; k < model.asset_names.size(); ++k) {
    auto it = inventory.ownership.find(model.asset_names[k]);
    if (it == inventory.ownership.end())
      fail(ErrorKind::MissingAsset,
           "household " + inventory.hh_id + " has no entry for asset '" + model.asset_names[k] + "'");
    const auto i = static_cast<Eigen::Index>(k);
    score += model.loadings(i) * ((it->second - model.means(i)) / model.stdevs(i));
  }
  return score;
}

std::string_view target_code(TargetKind kind) {
  return kind == TargetKind::AssetIndex ? "asset_index" : "log_consumption";
}

TargetKind parse_target(std::string_view text) {
  if (text == "asset_index" || text == "asset") return TargetKind::AssetIndex;
  if (text == "log_consumption" || text == "consumption") return TargetKind::LogPCConsumption;
  fail(ErrorKind::Config, "unknown target '" + std::string(text) + "' (expected asset or consumption)");
}

WelfareTarget aggregate_log_consumption(std::span<const HouseholdConsumptionRecord> records,
                                        const VisitKey& key) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& rec : records) {
    if (rec.key != key) continue;
    const double per_capita = rec.total_expenditure / rec.household_size;
    if (!(per_capita > 0.0))
      fail(ErrorKind::NonpositiveConsumption,
           "household " + rec.hh_id + " has non-positive per-capita consumption in " + to_string(key));
    sum += per_capita;
    ++count;
  }
  if (count == 0) fail(ErrorKind::EmptyGroup, "no household records for " + to_string(key));
  return {key, TargetKind::LogPCConsumption, std::log(sum / static_cast<double>(count))};
}

std::vector<WelfareTarget> log_consumption_targets(const SurveyBundle& bundle) {
  std::map<VisitKey, std::vector<HouseholdConsumptionRecord>> groups;
  for (const auto& h : bundle.households) groups[h.key].push_back(h);
  std::vector<WelfareTarget> targets;
  for (const auto& v : bundle.visits) {
    auto it = groups.find(v.key);
    if (it == groups.end()) continue;
    targets.push_back(aggregate_log_consumption(it->second, v.key));
  }
  return targets;
}

std::map<AssetGroupKey, double> aggregate_asset_index(const AssetIndexModel& model,
                                                      std::span<const AssetInventory> inventories) {
  std::map<AssetGroupKey, std::pair<double, std::size_t>> sums;
  for (const auto& inv : inventories) {
    auto& [sum, count] = sums[{inv.source, inv.ea_id, inv.survey_year}];
    sum += score_asset_index(model, inv);
    ++count;
  }
  std::map<AssetGroupKey, double> means;
  for (const auto& [key, acc] : sums) means.emplace(key, acc.first / static_cast<double>(acc.second));
  return means;
}

std::vector<WelfareTarget> asset_index_targets(const SurveyBundle& bundle, const AssetIndexModel& model) {
  const auto groups = aggregate_asset_index(model, bundle.assets);

  // (ea_id, year of post-planting end date) -> wave
  std::map<std::pair<std::string, int>, int> wave_of;
  for (const auto& v : bundle.visits) {
    if (v.key.visit != Visit::PostPlanting) continue;
    wave_of.emplace(std::make_pair(v.key.ea_id, year_of(v.end_date)), v.key.wave);
  }
  std::map<std::pair<std::string, int>, double> by_wave;
  for (const auto& [key, value] : groups) {
    if (key.source != SurveySource::GHS) continue;
    auto it = wave_of.find({key.ea_id, key.survey_year});
    if (it == wave_of.end()) {
      log_warning("GHS assets for " + key.ea_id + " in " + std::to_string(key.survey_year) +
                  " match no post-planting visit");
      continue;
    }
    by_wave.emplace(std::make_pair(key.ea_id, it->second), value);
  }

  std::vector<WelfareTarget> targets;
  for (const auto& v : bundle.visits) {
    auto it = by_wave.find({v.key.ea_id, v.key.wave});
    if (it != by_wave.end()) targets.push_back({v.key, TargetKind::AssetIndex, it->second});
  }
  return targets;
}

void write_targets(const std::vector<WelfareTarget>& targets, const std::filesystem::path& file) {
  csv::Writer out(file);
  out.row({"ea_id", "wave", "visit", "kind", "value"});
  for (const auto& t : targets)
    out.row({t.key.ea_id, std::to_string(t.key.wave), std::string(visit_code(t.key.visit)),
             std::string(target_code(t.kind)), csv::format_real(t.value)});
  out.close();
}

std::vector<WelfareTarget> read_targets(const std::filesystem::path& file) {
  const auto doc = csv::read(file);
  doc.require_prefix({"ea_id", "wave", "visit", "kind", "value"});
  std::vector<WelfareTarget> targets;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const std::string ctx = file.string() + " row " + std::to_string(r + 2);
    if (row.size() != doc.header.size()) fail(ErrorKind::Schema, ctx + ": wrong field count");
    WelfareTarget t;
    t.key.ea_id = row[0];
    t.key.wave = static_cast<int>(csv::parse_int(row[1], ctx));
    t.key.visit = parse_visit(row[2]);
    t.kind = parse_target(row[3]);
    t.value = csv::parse_real(row[4], ctx);
    if (!std::isfinite(t.value)) fail(ErrorKind::NonFinite, ctx + ": non-finite target");
    targets.push_back(std::move(t));
  }
  return targets;
}

}  // namespace welfarecast
