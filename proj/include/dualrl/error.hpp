#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dualrl {

enum class ErrorKind {
  kInvalidArgument,
  kParseError,
  kNonStochasticRow,
  kNegativeEntry,
  kBadDiscount,
  kShapeMismatch,
  kMissingPolicy,
  kSingularSystem,
  kUndiscountedUnsupported,
  kIdentityMismatch,
  kNotErgodic,
  kBudgetExceeded,
  kNonconvergence,
  kDomainError,
  kSupportViolation,
  kUnsupportedConstrainedGenerator,
  kInfeasible,
  kNonFiniteObjective,
  kCoverageError,
  kClosedFormUnsupported,
  kInnerNonconvergence,
  kMissingCatalogEntry,
};

std::string_view to_string(ErrorKind kind);

// All library failures surface as this exception; kind() is stable and
// is what the CLI maps onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dualrl
