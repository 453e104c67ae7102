#include "emkit/error.hpp"

namespace emkit {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::constraint_violation: return "constraint_violation";
    case ErrorKind::numerical_failure: return "numerical_failure";
    case ErrorKind::impossible_data: return "impossible_data";
    case ErrorKind::mendelian_violation: return "mendelian_violation";
    case ErrorKind::degenerate_input: return "degenerate_input";
    case ErrorKind::monotonicity_violation: return "monotonicity_violation";
  }
  return "unknown";
}

namespace {

std::string decorate(ErrorKind kind, const std::string& message,
                     std::optional<std::size_t> iteration) {
  std::string out{to_string(kind)};
  out += ": ";
  out += message;
  if (iteration) out += " (iteration " + std::to_string(*iteration) + ")";
  return out;
}

}  // namespace

EmError::EmError(ErrorKind kind, const std::string& message,
                 std::optional<std::size_t> iteration)
    : std::runtime_error(decorate(kind, message, iteration)),
      kind_(kind),
      iteration_(iteration) {}

}  // namespace emkit
