#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "welfarecast/ingest.hpp"

namespace welfarecast {

// Households x assets binary matrix over the assets collected by both surveys.
struct PooledAssetMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> asset_names;  // sorted
};

// Keeps assets that appear in at least one GHS and at least one DHS
// inventory. Row order follows the input. Throws NoCommonAssetsError when the
// surveys share no asset and MissingAssetError when a household lacks one of
// the shared assets.
PooledAssetMatrix build_pooled_asset_matrix(std::span<const AssetInventory> inventories);

// First principal component of the correlation matrix of the asset columns.
struct AssetIndexModel {
  std::vector<std::string> asset_names;  // retained (non-constant) assets
  Eigen::VectorXd means;
  Eigen::VectorXd stdevs;    // population standard deviations, all > 0
  Eigen::VectorXd loadings;  // unit norm
  int sign = 1;              // flip applied to the raw eigenvector
  std::vector<std::string> dropped_assets;
};

AssetIndexModel fit_asset_index(const Eigen::MatrixXd& matrix, const std::vector<std::string>& asset_names);
inline AssetIndexModel fit_asset_index(const PooledAssetMatrix& pooled) {
  return fit_asset_index(pooled.values, pooled.asset_names);
}

double score_asset_index(const AssetIndexModel& model, const AssetInventory& inventory);

enum class TargetKind { AssetIndex, LogPCConsumption };

// "asset_index" / "log_consumption".
std::string_view target_code(TargetKind kind);
// Accepts the codes above plus the short CLI forms "asset" / "consumption".
TargetKind parse_target(std::string_view text);

struct WelfareTarget {
  VisitKey key;
  TargetKind kind = TargetKind::AssetIndex;
  double value = 0.0;

  bool operator==(const WelfareTarget&) const = default;
};

// ln(mean over the key's households of expenditure / size). The mean is taken
// before the log.
WelfareTarget aggregate_log_consumption(std::span<const HouseholdConsumptionRecord> records,
                                        const VisitKey& key);

// One target per visit that has at least one household record, in visit order.
std::vector<WelfareTarget> log_consumption_targets(const SurveyBundle& bundle);

struct AssetGroupKey {
  SurveySource source = SurveySource::GHS;
  std::string ea_id;
  int survey_year = 0;

  auto operator<=>(const AssetGroupKey&) const = default;
};

// Mean household score per (source, ea_id, survey_year). GHS and DHS
// inventories are aggregated the same way.
std::map<AssetGroupKey, double> aggregate_asset_index(const AssetIndexModel& model,
                                                      std::span<const AssetInventory> inventories);

// Attaches GHS group means to visits: a group (ea_id, year) belongs to the wave
// whose post-planting visit ended in that year (assets are only asked at
// post-planting), and both visits of that wave receive the value.
std::vector<WelfareTarget> asset_index_targets(const SurveyBundle& bundle, const AssetIndexModel& model);

void write_targets(const std::vector<WelfareTarget>& targets, const std::filesystem::path& file);
std::vector<WelfareTarget> read_targets(const std::filesystem::path& file);

}  // namespace welfarecast
