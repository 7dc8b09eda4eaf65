#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace welfarecast {

// Every failure the library reports carries one of these kinds. The CLI maps
// each kind to a distinct process exit code (see exit_code()).
enum class ErrorKind {
  Schema,
  Referential,
  Value,
  DuplicateDate,
  Dimension,
  NonFinite,
  NoCommonAssets,
  DegenerateMatrix,
  MissingAsset,
  EmptyGroup,
  NonpositiveConsumption,
  EmptySeries,
  InsufficientCoverage,
  ShapeMismatch,
  Size,
  MissingBlock,
  SingularSystem,
  TooFewGroups,
  MissingFeature,
  DegenerateTarget,
  Empty,
  InvalidSpec,
  ConfigMismatch,
  Io,
  Config,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

// Stable identifier, e.g. "SchemaError".
std::string_view error_name(ErrorKind kind) noexcept;

// Process exit code for a kind, 10 + the enumerator value. The CLI keeps 0,
// 2 and 3 for success, usage errors and unexpected failures.
int exit_code(ErrorKind kind) noexcept;

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace welfarecast
