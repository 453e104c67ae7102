#include "emkit/abo.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <tuple>
#include <utility>

namespace emkit::abo {

namespace {

// log-likelihood contribution of `count` subjects on a category of
// probability `prob`; zero counts contribute nothing even when prob == 0.
double term(std::uint64_t count, double prob) {
  if (count == 0) return 0.0;
  if (prob <= 0.0) return -std::numeric_limits<double>::infinity();
  return static_cast<double>(count) * std::log(prob);
}

// Splits `count` subjects of an ambiguous phenotype (allele x) into
// (homozygote xx, heterozygote xO).
std::pair<double, double> split(std::uint64_t count, double p_x, double p_o,
                                const char* label) {
  if (count == 0) return {0.0, 0.0};
  if (p_x <= 0.0) {
    throw EmError(ErrorKind::impossible_data,
                  std::string("blood type ") + label +
                      " observed but its allele frequency is zero");
  }
  // p_x^2 / (p_x^2 + 2 p_x p_o) with the common p_x factor cancelled.
  const double homo_share = p_x / (p_x + 2.0 * p_o);
  const double n = static_cast<double>(count);
  const double homo = n * homo_share;
  return {homo, n - homo};
}

}  // namespace

bool on_simplex(const AlleleFrequencies& f, double tol) {
  for (double p : {f.p_a, f.p_b, f.p_o}) {
    if (!(p >= 0.0 && p <= 1.0)) return false;
  }
  return std::abs(f.sum() - 1.0) <= tol;
}

PhenotypeProbabilities phenotype_probabilities(const AlleleFrequencies& f) {
  return {f.p_a * f.p_a + 2.0 * f.p_a * f.p_o,
          f.p_b * f.p_b + 2.0 * f.p_b * f.p_o, 2.0 * f.p_a * f.p_b,
          f.p_o * f.p_o};
}

ExpectedGenotypeCounts abo_e_step(const AlleleFrequencies& freqs,
                                  const BloodTypeCounts& counts) {
  ExpectedGenotypeCounts g;
  std::tie(g.g_aa, g.g_ao) = split(counts.a, freqs.p_a, freqs.p_o, "A");
  std::tie(g.g_bb, g.g_bo) = split(counts.b, freqs.p_b, freqs.p_o, "B");
  g.g_ab = static_cast<double>(counts.ab);
  g.g_oo = static_cast<double>(counts.o);
  return g;
}

AlleleFrequencies abo_m_step(const ExpectedGenotypeCounts& g, std::uint64_t n) {
  if (n == 0) {
    throw EmError(ErrorKind::degenerate_input, "gene counting with zero subjects");
  }
  const double alleles = 2.0 * static_cast<double>(n);
  return {(2.0 * g.g_aa + g.g_ao + g.g_ab) / alleles,
          (2.0 * g.g_bb + g.g_bo + g.g_ab) / alleles,
          (2.0 * g.g_oo + g.g_ao + g.g_bo) / alleles};
}

double abo_log_likelihood(const AlleleFrequencies& freqs,
                          const BloodTypeCounts& counts) {
  const auto p = phenotype_probabilities(freqs);
  return term(counts.a, p.a) + term(counts.b, p.b) + term(counts.ab, p.ab) +
         term(counts.o, p.o);
}

EmResult<AlleleFrequencies> fit(const BloodTypeCounts& counts,
                                const AlleleFrequencies& init,
                                const EmConfig& config) {
  if (counts.total() == 0) {
    throw EmError(ErrorKind::degenerate_input, "no subjects in blood-type counts");
  }
  return run_em(AboModel{}, counts, init, config);
}

}  // namespace emkit::abo
