#include "dualrl/error.hpp"

namespace dualrl {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kNonStochasticRow: return "NonStochasticRow";
    case ErrorKind::kNegativeEntry: return "NegativeEntry";
    case ErrorKind::kBadDiscount: return "BadDiscount";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kMissingPolicy: return "MissingPolicy";
    case ErrorKind::kSingularSystem: return "SingularSystem";
    case ErrorKind::kUndiscountedUnsupported: return "UndiscountedUnsupported";
    case ErrorKind::kIdentityMismatch: return "IdentityMismatch";
    case ErrorKind::kNotErgodic: return "NotErgodic";
    case ErrorKind::kBudgetExceeded: return "BudgetExceeded";
    case ErrorKind::kNonconvergence: return "Nonconvergence";
    case ErrorKind::kDomainError: return "DomainError";
    case ErrorKind::kSupportViolation: return "SupportViolation";
    case ErrorKind::kUnsupportedConstrainedGenerator: return "UnsupportedConstrainedGenerator";
    case ErrorKind::kInfeasible: return "Infeasible";
    case ErrorKind::kNonFiniteObjective: return "NonFiniteObjective";
    case ErrorKind::kCoverageError: return "CoverageError";
    case ErrorKind::kClosedFormUnsupported: return "ClosedFormUnsupported";
    case ErrorKind::kInnerNonconvergence: return "InnerNonconvergence";
    case ErrorKind::kMissingCatalogEntry: return "MissingCatalogEntry";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace dualrl
