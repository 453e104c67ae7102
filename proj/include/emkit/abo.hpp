#pragma once

// ABO allele-frequency estimation by gene counting under Hardy-Weinberg
// equilibrium. Blood types A and B are ambiguous (AA/AO, BB/BO); AB and O
// identify the genotype.

#include <cstdint>

#include "emkit/em.hpp"

namespace emkit::abo {

struct BloodTypeCounts {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::uint64_t ab = 0;
  std::uint64_t o = 0;

  std::uint64_t total() const { return a + b + ab + o; }
};

struct AlleleFrequencies {
  double p_a = 0.0;
  double p_b = 0.0;
  double p_o = 0.0;

  double sum() const { return p_a + p_b + p_o; }
};

struct ExpectedGenotypeCounts {
  double g_aa = 0.0;
  double g_ao = 0.0;
  double g_bb = 0.0;
  double g_bo = 0.0;
  double g_ab = 0.0;
  double g_oo = 0.0;
};

inline constexpr AlleleFrequencies kUniformStart{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

bool on_simplex(const AlleleFrequencies& freqs, double tol = 1e-12);

// Phenotype probabilities P(A), P(B), P(AB), P(O) under HWE.
struct PhenotypeProbabilities {
  double a, b, ab, o;
};
PhenotypeProbabilities phenotype_probabilities(const AlleleFrequencies& freqs);

// Splits the A and B phenotype counts into expected homozygote and
// heterozygote counts. Throws impossible_data when a phenotype is observed
// but its allele has frequency zero.
ExpectedGenotypeCounts abo_e_step(const AlleleFrequencies& freqs,
                                  const BloodTypeCounts& counts);

// Gene counting: each subject contributes two alleles.
AlleleFrequencies abo_m_step(const ExpectedGenotypeCounts& g, std::uint64_t n);

// Multinomial log-likelihood of the phenotype counts, without the
// multinomial coefficient. Returns -inf when a positive count falls on a
// zero-probability phenotype.
double abo_log_likelihood(const AlleleFrequencies& freqs,
                          const BloodTypeCounts& counts);

struct AboModel {
  using Params = AlleleFrequencies;
  using Stats = ExpectedGenotypeCounts;
  using Data = BloodTypeCounts;

  Stats e_step(const Params& p, const Data& d) const { return abo_e_step(p, d); }
  Params m_step(const Stats& s, const Data& d) const {
    return abo_m_step(s, d.total());
  }
  double log_likelihood(const Params& p, const Data& d) const {
    return abo_log_likelihood(p, d);
  }
  bool satisfies_constraints(const Params& p) const { return on_simplex(p); }
};

// Runs EM from `init` (default 1/3 each). Throws degenerate_input when no
// subjects are counted.
EmResult<AlleleFrequencies> fit(const BloodTypeCounts& counts,
                                const AlleleFrequencies& init = kUniformStart,
                                const EmConfig& config = {});

}  // namespace emkit::abo
