#pragma once

// IBD sharing estimation for affected sib pairs with typed parents.
//
// Each pair contributes a kernel L_j = P(sib genotypes | parents, IBD = j),
// obtained by enumerating the 16 equiprobable transmission patterns. The EM
// then estimates the mixture weights (pi_0, pi_1, pi_2) over IBD states.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "emkit/em.hpp"

namespace emkit::ibd {

using Allele = std::uint32_t;

// Unordered allele pair; stored sorted so (a,b) == (b,a).
class Genotype {
 public:
  Genotype() = default;
  Genotype(Allele a, Allele b) : lo_(a < b ? a : b), hi_(a < b ? b : a) {}

  Allele lo() const { return lo_; }
  Allele hi() const { return hi_; }
  bool homozygous() const { return lo_ == hi_; }

  friend bool operator==(const Genotype&, const Genotype&) = default;

 private:
  Allele lo_ = 0;
  Allele hi_ = 0;
};

struct SibPairObservation {
  Genotype father;
  Genotype mother;
  Genotype sib1;
  Genotype sib2;
};

// Prior IBD distribution for sibs at an unlinked locus.
inline constexpr std::array<double, 3> kNullSharing{0.25, 0.5, 0.25};

struct IbdProbabilities {
  std::array<double, 3> pi{kNullSharing};
};

struct IbdKernel {
  std::array<double, 3> l{};

  // Kernel proportional to (1,1,1): the genotypes carry no IBD information.
  bool uninformative() const;
};

struct ExpectedIbdCounts {
  std::array<double, 3> z{};
};

bool on_simplex(const IbdProbabilities& p, double tol = 1e-12);

// Whether `child` can receive one allele from each parent.
bool mendelian_compatible(const Genotype& father, const Genotype& mother,
                          const Genotype& child);

// Throws mendelian_violation when either sib is incompatible with the parents.
void validate(const SibPairObservation& obs);

// L_j by enumerating which parental allele copy each sib receives. Copies are
// tracked by position, so homozygous parents still yield distinct copies.
IbdKernel ibd_kernel(const SibPairObservation& obs);

// Posterior IBD probabilities for one pair; throws impossible_data when the
// pair has zero probability under `pi`.
std::array<double, 3> ibd_posterior(const IbdProbabilities& pi,
                                    const IbdKernel& kernel);

ExpectedIbdCounts ibd_e_step(const IbdProbabilities& pi,
                             std::span<const IbdKernel> kernels);

IbdProbabilities ibd_m_step(const ExpectedIbdCounts& z, std::size_t n_pairs);

// Sum over pairs of log(sum_j pi_j L_j); -inf when any pair is impossible.
double ibd_log_likelihood(const IbdProbabilities& pi,
                          std::span<const IbdKernel> kernels);

struct IbdModel {
  using Params = IbdProbabilities;
  using Stats = ExpectedIbdCounts;
  using Data = std::vector<IbdKernel>;

  Stats e_step(const Params& p, const Data& d) const { return ibd_e_step(p, d); }
  Params m_step(const Stats& s, const Data& d) const {
    return ibd_m_step(s, d.size());
  }
  double log_likelihood(const Params& p, const Data& d) const {
    return ibd_log_likelihood(p, d);
  }
  bool satisfies_constraints(const Params& p) const { return on_simplex(p); }
};

std::vector<IbdKernel> kernels_for(std::span<const SibPairObservation> pairs);

std::size_t count_uninformative(std::span<const IbdKernel> kernels);

// Runs EM from `init` (default: null sharing). Throws degenerate_input on an
// empty dataset.
EmResult<IbdProbabilities> fit(const std::vector<IbdKernel>& kernels,
                               const IbdProbabilities& init = {},
                               const EmConfig& config = {});

}  // namespace emkit::ibd
