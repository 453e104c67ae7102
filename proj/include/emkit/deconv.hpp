#pragma once

// Poisson ML-EM deconvolution of diffusion-battery port counts into a
// discrete particle-size distribution.
//
// Complete data: Z_ij, the number of size-j particles exiting port i,
// independent Poisson with mean P_0 * w_ij * f_j. Only the row totals P_i
// are observed. The zero-port count P_0 is a known scale, not a parameter.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "emkit/em.hpp"

namespace emkit::deconv {

// Penetration kernel: ports x size classes, w(i, j) = P(size j exits port i).
class PenetrationKernel {
 public:
  PenetrationKernel() = default;
  // Row-major values; throws degenerate_input on a shape mismatch.
  PenetrationKernel(std::size_t ports, std::size_t sizes, std::vector<double> values);

  std::size_t ports() const { return ports_; }
  std::size_t sizes() const { return sizes_; }
  double operator()(std::size_t i, std::size_t j) const { return w_[i * sizes_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return {w_.data() + i * sizes_, sizes_};
  }
  // W_j = sum_i w_ij, the probability a size-j particle is counted anywhere.
  std::vector<double> column_sums() const;

 private:
  std::size_t ports_ = 0;
  std::size_t sizes_ = 0;
  std::vector<double> w_;
};

// Size classes whose total detection weight falls below this are rejected.
inline constexpr double kMinDetectionWeight = 1e-12;

class BatteryMeasurement {
 public:
  // Throws degenerate_input when P_0 is zero, the count vector does not
  // match the kernel rows, an entry of w lies outside [0,1], or a size class
  // is unidentifiable (W_j < kMinDetectionWeight).
  BatteryMeasurement(std::uint64_t zero_port, std::vector<std::uint64_t> port_counts,
                     PenetrationKernel kernel);

  std::uint64_t zero_port() const { return zero_port_; }
  const std::vector<std::uint64_t>& port_counts() const { return port_counts_; }
  const PenetrationKernel& kernel() const { return kernel_; }
  const std::vector<double>& detection_weights() const { return weights_; }
  double total_port_count() const;

 private:
  std::uint64_t zero_port_;
  std::vector<std::uint64_t> port_counts_;
  PenetrationKernel kernel_;
  std::vector<double> weights_;
};

struct SizeDistribution {
  std::vector<double> f;
};

struct CompleteCountArray {
  std::size_t ports = 0;
  std::size_t sizes = 0;
  std::vector<double> z;        // row-major ports x sizes
  std::vector<double> columns;  // N_j

  double operator()(std::size_t i, std::size_t j) const { return z[i * sizes + j]; }
};

bool is_nonnegative(const SizeDistribution& f);

// Z_ij = P_i * w_ij f_j / sum_k w_ik f_k. Throws impossible_data when a port
// with P_i > 0 has zero expected flux.
CompleteCountArray deconv_e_step(const SizeDistribution& f,
                                 const BatteryMeasurement& meas);

// f_j = N_j / (P_0 * W_j).
SizeDistribution deconv_m_step(std::span<const double> column_totals,
                               std::uint64_t zero_port,
                               std::span<const double> detection_weights);

// mu_i = P_0 * sum_j w_ij f_j.
std::vector<double> fitted_means(const SizeDistribution& f,
                                 const BatteryMeasurement& meas);

// Poisson log-likelihood sum_i P_i log(mu_i) - mu_i without the log(P_i!)
// constant; -inf when mu_i = 0 with P_i > 0.
double deconv_log_likelihood(const SizeDistribution& f,
                             const BatteryMeasurement& meas);

struct NormalizedDistribution {
  std::vector<double> proportions;
  double total = 0.0;
};

// Throws degenerate_input when the total mass is zero.
NormalizedDistribution normalize_distribution(const SizeDistribution& f);

// Uniform start f_j = sum_i P_i / (P_0 * sum_j W_j), which already satisfies
// the flux identity sum_j f_j P_0 W_j = sum_i P_i.
SizeDistribution initial_distribution(const BatteryMeasurement& meas);

struct DeconvModel {
  using Params = SizeDistribution;
  using Stats = CompleteCountArray;
  using Data = BatteryMeasurement;

  Stats e_step(const Params& p, const Data& d) const { return deconv_e_step(p, d); }
  Params m_step(const Stats& s, const Data& d) const {
    return deconv_m_step(s.columns, d.zero_port(), d.detection_weights());
  }
  double log_likelihood(const Params& p, const Data& d) const {
    return deconv_log_likelihood(p, d);
  }
  bool satisfies_constraints(const Params& p) const { return is_nonnegative(p); }
  // Every port count is zero: the MLE is f = 0 and nothing is identifiable.
  bool is_degenerate(const Data& d) const { return d.total_port_count() == 0.0; }
};

EmResult<SizeDistribution> fit(const BatteryMeasurement& meas, const EmConfig& config = {});
EmResult<SizeDistribution> fit(const BatteryMeasurement& meas, const SizeDistribution& init,
                               const EmConfig& config = {});

namespace synthetic {

// NOT A PHYSICAL MODEL. Test kernel with monotone penetration curves:
// w_ij = exp(-rate_j * screens_i), where screens grow with the port index
// and the removal rate falls with particle size, so small particles are
// removed at early ports and large ones only at late ports.
PenetrationKernel penetration_kernel(std::size_t ports, std::size_t sizes);

// Draws P_i ~ Poisson(P_0 * sum_j w_ij f_j).
std::vector<std::uint64_t> simulate_counts(const PenetrationKernel& kernel,
                                           const SizeDistribution& truth,
                                           std::uint64_t zero_port, std::mt19937_64& rng);

}  // namespace synthetic

}  // namespace emkit::deconv
