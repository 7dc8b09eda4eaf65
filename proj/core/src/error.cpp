#include "welfarecast/error.hpp"

namespace welfarecast {

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(error_name(kind)) + ": " + message), kind_(kind), detail_(message) {}

std::string_view error_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::Referential: return "ReferentialError";
    case ErrorKind::Value: return "ValueError";
    case ErrorKind::DuplicateDate: return "DuplicateDateError";
    case ErrorKind::Dimension: return "DimensionError";
    case ErrorKind::NonFinite: return "NonFiniteError";
    case ErrorKind::NoCommonAssets: return "NoCommonAssetsError";
    case ErrorKind::DegenerateMatrix: return "DegenerateMatrixError";
    case ErrorKind::MissingAsset: return "MissingAssetError";
    case ErrorKind::EmptyGroup: return "EmptyGroupError";
    case ErrorKind::NonpositiveConsumption: return "NonpositiveConsumptionError";
    case ErrorKind::EmptySeries: return "EmptySeriesError";
    case ErrorKind::InsufficientCoverage: return "InsufficientCoverageError";
    case ErrorKind::ShapeMismatch: return "ShapeMismatchError";
    case ErrorKind::Size: return "SizeError";
    case ErrorKind::MissingBlock: return "MissingBlockError";
    case ErrorKind::SingularSystem: return "SingularSystemError";
    case ErrorKind::TooFewGroups: return "TooFewGroupsError";
    case ErrorKind::MissingFeature: return "MissingFeatureError";
    case ErrorKind::DegenerateTarget: return "DegenerateTargetError";
    case ErrorKind::Empty: return "EmptyError";
    case ErrorKind::InvalidSpec: return "InvalidSpecError";
    case ErrorKind::ConfigMismatch: return "ConfigMismatchError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Config: return "ConfigError";
  }
  return "Error";
}

int exit_code(ErrorKind kind) noexcept {
  return 10 + static_cast<int>(kind);
}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace welfarecast
