#include "emkit/em.hpp"

namespace emkit {

void EmConfig::validate() const {
  if (max_iterations < 1) {
    throw EmError(ErrorKind::constraint_violation,
                  "max_iterations must be at least 1");
  }
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(monotonicity_slack > 0.0)) {
    throw EmError(ErrorKind::constraint_violation,
                  "tolerances must be strictly positive");
  }
}

std::string_view to_string(StopReason reason) noexcept {
  switch (reason) {
    case StopReason::tolerance_met: return "tolerance_met";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::degenerate_input: return "degenerate_input";
  }
  return "unknown";
}

bool assert_monotone(std::span<const double> log_likelihoods, double slack) {
  for (std::size_t i = 1; i < log_likelihoods.size(); ++i) {
    if (log_likelihoods[i] - log_likelihoods[i - 1] < -slack) return false;
  }
  return true;
}

}  // namespace emkit
