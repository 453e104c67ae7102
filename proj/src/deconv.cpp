#include "emkit/deconv.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace emkit::deconv {

PenetrationKernel::PenetrationKernel(std::size_t ports, std::size_t sizes,
                                     std::vector<double> values)
    : ports_(ports), sizes_(sizes), w_(std::move(values)) {
  if (ports_ == 0 || sizes_ == 0) {
    throw EmError(ErrorKind::degenerate_input, "kernel must have at least one port and one size class");
  }
  if (w_.size() != ports_ * sizes_) {
    throw EmError(ErrorKind::degenerate_input, "kernel values do not match its shape");
  }
}

std::vector<double> PenetrationKernel::column_sums() const {
  std::vector<double> out(sizes_, 0.0);
  for (std::size_t i = 0; i < ports_; ++i) {
    for (std::size_t j = 0; j < sizes_; ++j) out[j] += (*this)(i, j);
  }
  return out;
}

BatteryMeasurement::BatteryMeasurement(std::uint64_t zero_port,
                                       std::vector<std::uint64_t> port_counts,
                                       PenetrationKernel kernel)
    : zero_port_(zero_port), port_counts_(std::move(port_counts)), kernel_(std::move(kernel)) {
  if (zero_port_ == 0) {
    throw EmError(ErrorKind::degenerate_input, "zero-port count P_0 must be positive");
  }
  if (port_counts_.size() != kernel_.ports()) {
    throw EmError(ErrorKind::degenerate_input,
                  "kernel has " + std::to_string(kernel_.ports()) + " rows but " +
                      std::to_string(port_counts_.size()) + " port counts were given");
  }
  for (std::size_t i = 0; i < kernel_.ports(); ++i) {
    for (std::size_t j = 0; j < kernel_.sizes(); ++j) {
      const double w = kernel_(i, j);
      if (!(w >= 0.0 && w <= 1.0)) {
        throw EmError(ErrorKind::degenerate_input,
                      "kernel entry (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                          ") is outside [0, 1]");
      }
    }
  }
  weights_ = kernel_.column_sums();
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    if (weights_[j] < kMinDetectionWeight) {
      throw EmError(ErrorKind::degenerate_input,
                    "size class " + std::to_string(j + 1) +
                        " is never detected (column sum of the kernel is zero)");
    }
  }
}

double BatteryMeasurement::total_port_count() const {
  double total = 0.0;
  for (auto p : port_counts_) total += static_cast<double>(p);
  return total;
}

bool is_nonnegative(const SizeDistribution& f) {
  for (double v : f.f) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
  }
  return !f.f.empty();
}

std::vector<double> fitted_means(const SizeDistribution& f, const BatteryMeasurement& meas) {
  const auto& k = meas.kernel();
  if (f.f.size() != k.sizes()) {
    throw EmError(ErrorKind::constraint_violation,
                  "size distribution length does not match the kernel");
  }
  const double p0 = static_cast<double>(meas.zero_port());
  std::vector<double> mu(k.ports(), 0.0);
  for (std::size_t i = 0; i < k.ports(); ++i) {
    double flux = 0.0;
    for (std::size_t j = 0; j < k.sizes(); ++j) flux += k(i, j) * f.f[j];
    mu[i] = p0 * flux;
  }
  return mu;
}

CompleteCountArray deconv_e_step(const SizeDistribution& f, const BatteryMeasurement& meas) {
  const auto& k = meas.kernel();
  if (f.f.size() != k.sizes()) {
    throw EmError(ErrorKind::constraint_violation,
                  "size distribution length does not match the kernel");
  }
  CompleteCountArray out;
  out.ports = k.ports();
  out.sizes = k.sizes();
  out.z.assign(out.ports * out.sizes, 0.0);
  out.columns.assign(out.sizes, 0.0);
  for (std::size_t i = 0; i < k.ports(); ++i) {
    const double p_i = static_cast<double>(meas.port_counts()[i]);
    if (p_i == 0.0) continue;
    double flux = 0.0;
    for (std::size_t j = 0; j < k.sizes(); ++j) flux += k(i, j) * f.f[j];
    if (!(flux > 0.0)) {
      throw EmError(ErrorKind::impossible_data,
                    "port " + std::to_string(i + 1) +
                        " has counts but zero expected flux under the current distribution");
    }
    for (std::size_t j = 0; j < k.sizes(); ++j) {
      const double zij = p_i * (k(i, j) * f.f[j] / flux);
      out.z[i * out.sizes + j] = zij;
    }
  }
  for (std::size_t i = 0; i < out.ports; ++i) {
    for (std::size_t j = 0; j < out.sizes; ++j) out.columns[j] += out(i, j);
  }
  return out;
}

SizeDistribution deconv_m_step(std::span<const double> column_totals, std::uint64_t zero_port,
                               std::span<const double> detection_weights) {
  if (column_totals.size() != detection_weights.size()) {
    throw EmError(ErrorKind::constraint_violation,
                  "column totals and detection weights differ in length");
  }
  if (zero_port == 0) {
    throw EmError(ErrorKind::degenerate_input, "zero-port count P_0 must be positive");
  }
  const double p0 = static_cast<double>(zero_port);
  SizeDistribution out;
  out.f.resize(column_totals.size());
  for (std::size_t j = 0; j < column_totals.size(); ++j) {
    out.f[j] = column_totals[j] / (p0 * detection_weights[j]);
  }
  return out;
}

double deconv_log_likelihood(const SizeDistribution& f, const BatteryMeasurement& meas) {
  const auto mu = fitted_means(f, meas);
  double ll = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double p_i = static_cast<double>(meas.port_counts()[i]);
    if (p_i > 0.0) {
      if (!(mu[i] > 0.0)) return -std::numeric_limits<double>::infinity();
      ll += p_i * std::log(mu[i]);
    }
    ll -= mu[i];
  }
  return ll;
}

NormalizedDistribution normalize_distribution(const SizeDistribution& f) {
  NormalizedDistribution out;
  for (double v : f.f) out.total += v;
  if (!(out.total > 0.0)) {
    throw EmError(ErrorKind::degenerate_input, "size distribution has zero total mass");
  }
  out.proportions.reserve(f.f.size());
  for (double v : f.f) out.proportions.push_back(v / out.total);
  return out;
}

SizeDistribution initial_distribution(const BatteryMeasurement& meas) {
  double weight_total = 0.0;
  for (double w : meas.detection_weights()) weight_total += w;
  const double level =
      meas.total_port_count() / (static_cast<double>(meas.zero_port()) * weight_total);
  return {std::vector<double>(meas.kernel().sizes(), level)};
}

EmResult<SizeDistribution> fit(const BatteryMeasurement& meas, const EmConfig& config) {
  return fit(meas, initial_distribution(meas), config);
}

EmResult<SizeDistribution> fit(const BatteryMeasurement& meas, const SizeDistribution& init,
                               const EmConfig& config) {
  if (init.f.size() != meas.kernel().sizes()) {
    throw EmError(ErrorKind::constraint_violation,
                  "initial distribution length does not match the kernel");
  }
  return run_em(DeconvModel{}, meas, init, config);
}

namespace synthetic {

PenetrationKernel penetration_kernel(std::size_t ports, std::size_t sizes) {
  std::vector<double> w(ports * sizes);
  for (std::size_t i = 0; i < ports; ++i) {
    const double screens = static_cast<double>(i + 1);
    for (std::size_t j = 0; j < sizes; ++j) {
      const double rate = 2.0 * std::pow(0.6, static_cast<double>(j));
      w[i * sizes + j] = std::exp(-rate * screens);
    }
  }
  return {ports, sizes, std::move(w)};
}

std::vector<std::uint64_t> simulate_counts(const PenetrationKernel& kernel,
                                           const SizeDistribution& truth,
                                           std::uint64_t zero_port, std::mt19937_64& rng) {
  std::vector<std::uint64_t> out(kernel.ports());
  const double p0 = static_cast<double>(zero_port);
  for (std::size_t i = 0; i < kernel.ports(); ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < kernel.sizes(); ++j) mean += kernel(i, j) * truth.f[j];
    mean *= p0;
    if (mean > 0.0) {
      std::poisson_distribution<std::uint64_t> draw(mean);
      out[i] = draw(rng);
    }
  }
  return out;
}

}  // namespace synthetic

}  // namespace emkit::deconv
