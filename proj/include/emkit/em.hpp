#pragma once

// Generic fixed-point EM driver.
//
// A model bundles three pure operations over its own parameter, expected
// statistics and data types:
//
//   Stats  e_step(const Params&, const Data&)
//   Params m_step(const Stats&, const Data&)
//   double log_likelihood(const Params&, const Data&)
//
// plus satisfies_constraints(const Params&) used to validate the starting
// point and every iterate. A model may optionally expose
// is_degenerate(const Data&), in which case a degenerate dataset stops the
// run before the first iteration.
//
// run_em evaluates the objective once at the initial point and once after
// each M-step. It stops when the change in log-likelihood falls below the
// relative or absolute tolerance, or after max_iterations updates.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <string_view>
#include <vector>

#include "emkit/error.hpp"

namespace emkit {

struct EmConfig {
  std::size_t max_iterations = 10000;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double monotonicity_slack = 1e-10;

  // Throws constraint_violation when a tolerance is not strictly positive or
  // max_iterations is zero.
  void validate() const;
};

enum class StopReason { tolerance_met, max_iterations, degenerate_input };

std::string_view to_string(StopReason reason) noexcept;

template <class Params>
struct TraceEntry {
  std::size_t iteration = 0;
  Params params;
  double log_likelihood = 0.0;
};

template <class Params>
struct EmTrace {
  std::vector<TraceEntry<Params>> entries;
  bool converged = false;
  StopReason stop_reason = StopReason::max_iterations;

  // Number of EM updates performed (entries beyond the initial point).
  std::size_t iterations() const {
    return entries.empty() ? 0 : entries.size() - 1;
  }

  std::vector<double> log_likelihoods() const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.log_likelihood);
    return out;
  }
};

template <class Params>
struct EmResult {
  Params final_params;
  EmTrace<Params> trace;
};

template <class M>
concept EmModel = requires(const M& m, const typename M::Params& p,
                           const typename M::Stats& s,
                           const typename M::Data& d) {
  { m.e_step(p, d) } -> std::same_as<typename M::Stats>;
  { m.m_step(s, d) } -> std::same_as<typename M::Params>;
  { m.log_likelihood(p, d) } -> std::convertible_to<double>;
  { m.satisfies_constraints(p) } -> std::convertible_to<bool>;
};

// True iff every successive difference is >= -slack.
bool assert_monotone(std::span<const double> log_likelihoods, double slack);

template <class Params>
bool assert_monotone(const EmTrace<Params>& trace, double slack) {
  const auto values = trace.log_likelihoods();
  return assert_monotone(std::span<const double>(values), slack);
}

namespace detail {

// Allowance for rounding in the objective itself: a sum of many terms of
// magnitude |ll| cannot be reproduced more precisely than a few ulps of |ll|.
inline double roundoff_allowance(double a, double b) {
  constexpr double kUlps = 16.0;
  return kUlps * std::numeric_limits<double>::epsilon() *
         std::max(std::abs(a), std::abs(b));
}

inline void check_finite(double ll, std::size_t iteration) {
  if (std::isfinite(ll)) return;
  if (ll == -std::numeric_limits<double>::infinity()) {
    throw EmError(ErrorKind::impossible_data,
                  "log-likelihood is -inf: observed data has zero probability "
                  "under the current parameters",
                  iteration);
  }
  throw EmError(ErrorKind::numerical_failure,
                "log-likelihood is not finite", iteration);
}

}  // namespace detail

template <EmModel M>
EmResult<typename M::Params> run_em(const M& model, const typename M::Data& data,
                                    const typename M::Params& init,
                                    const EmConfig& config = {}) {
  using Params = typename M::Params;
  config.validate();
  if (!model.satisfies_constraints(init)) {
    throw EmError(ErrorKind::constraint_violation,
                  "initial parameters violate the model constraints", 0);
  }

  EmTrace<Params> trace;
  Params current = init;
  double ll = model.log_likelihood(current, data);

  if constexpr (requires { model.is_degenerate(data); }) {
    if (model.is_degenerate(data)) {
      trace.entries.push_back({0, current, ll});
      trace.converged = false;
      trace.stop_reason = StopReason::degenerate_input;
      return {std::move(current), std::move(trace)};
    }
  }

  detail::check_finite(ll, 0);
  trace.entries.push_back({0, current, ll});

  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    Params next = model.m_step(model.e_step(current, data), data);
    if (!model.satisfies_constraints(next)) {
      throw EmError(ErrorKind::constraint_violation,
                    "M-step left the constraint set", it);
    }
    const double next_ll = model.log_likelihood(next, data);
    detail::check_finite(next_ll, it);

    const double delta = next_ll - ll;
    if (delta < -(config.monotonicity_slack +
                  detail::roundoff_allowance(ll, next_ll))) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "log-likelihood decreased from " << ll << " to " << next_ll;
      throw EmError(ErrorKind::monotonicity_violation, msg.str(), it);
    }

    trace.entries.push_back({it, next, next_ll});
    current = std::move(next);
    const double change = std::abs(delta);
    const double prev_ll = ll;
    ll = next_ll;

    if (change < config.abs_tol || change < config.rel_tol * std::abs(prev_ll)) {
      trace.converged = true;
      trace.stop_reason = StopReason::tolerance_met;
      return {std::move(current), std::move(trace)};
    }
  }

  trace.converged = false;
  trace.stop_reason = StopReason::max_iterations;
  return {std::move(current), std::move(trace)};
}

}  // namespace emkit
