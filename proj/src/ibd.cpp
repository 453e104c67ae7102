#include "emkit/ibd.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace emkit::ibd {

namespace {

Allele copy_of(const Genotype& g, int which) { return which == 0 ? g.lo() : g.hi(); }

// Number of transmission patterns with IBD = 0, 1, 2 among the 16.
constexpr std::array<double, 3> kPatternsPerState{4.0, 8.0, 4.0};

}  // namespace

bool IbdKernel::uninformative() const {
  return l[0] > 0.0 && l[0] == l[1] && l[1] == l[2];
}

bool on_simplex(const IbdProbabilities& p, double tol) {
  double sum = 0.0;
  for (double v : p.pi) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

bool mendelian_compatible(const Genotype& father, const Genotype& mother,
                          const Genotype& child) {
  for (int f = 0; f < 2; ++f) {
    for (int m = 0; m < 2; ++m) {
      if (Genotype(copy_of(father, f), copy_of(mother, m)) == child) return true;
    }
  }
  return false;
}

void validate(const SibPairObservation& obs) {
  if (!mendelian_compatible(obs.father, obs.mother, obs.sib1)) {
    throw EmError(ErrorKind::mendelian_violation,
                  "sib 1 genotype cannot be inherited from the parents");
  }
  if (!mendelian_compatible(obs.father, obs.mother, obs.sib2)) {
    throw EmError(ErrorKind::mendelian_violation,
                  "sib 2 genotype cannot be inherited from the parents");
  }
}

IbdKernel ibd_kernel(const SibPairObservation& obs) {
  validate(obs);
  std::array<double, 3> matches{};
  // f1/f2: which paternal copy sib 1/sib 2 receives; m1/m2 likewise.
  for (int f1 = 0; f1 < 2; ++f1) {
    for (int f2 = 0; f2 < 2; ++f2) {
      for (int m1 = 0; m1 < 2; ++m1) {
        for (int m2 = 0; m2 < 2; ++m2) {
          const int shared = (f1 == f2 ? 1 : 0) + (m1 == m2 ? 1 : 0);
          const Genotype g1(copy_of(obs.father, f1), copy_of(obs.mother, m1));
          const Genotype g2(copy_of(obs.father, f2), copy_of(obs.mother, m2));
          if (g1 == obs.sib1 && g2 == obs.sib2) matches[shared] += 1.0;
        }
      }
    }
  }
  IbdKernel k;
  for (int j = 0; j < 3; ++j) k.l[j] = matches[j] / kPatternsPerState[j];
  return k;
}

std::array<double, 3> ibd_posterior(const IbdProbabilities& pi,
                                    const IbdKernel& kernel) {
  std::array<double, 3> post{};
  double total = 0.0;
  for (int j = 0; j < 3; ++j) {
    post[j] = pi.pi[j] * kernel.l[j];
    total += post[j];
  }
  if (!(total > 0.0)) {
    throw EmError(ErrorKind::impossible_data,
                  "sib pair has zero probability under the current sharing "
                  "probabilities");
  }
  for (double& p : post) p /= total;
  return post;
}

ExpectedIbdCounts ibd_e_step(const IbdProbabilities& pi,
                             std::span<const IbdKernel> kernels) {
  ExpectedIbdCounts z;
  for (const auto& k : kernels) {
    const auto post = ibd_posterior(pi, k);
    for (int j = 0; j < 3; ++j) z.z[j] += post[j];
  }
  return z;
}

IbdProbabilities ibd_m_step(const ExpectedIbdCounts& z, std::size_t n_pairs) {
  if (n_pairs == 0) {
    throw EmError(ErrorKind::degenerate_input, "no sib pairs");
  }
  const double n = static_cast<double>(n_pairs);
  IbdProbabilities out;
  for (int j = 0; j < 3; ++j) out.pi[j] = z.z[j] / n;
  return out;
}

double ibd_log_likelihood(const IbdProbabilities& pi,
                          std::span<const IbdKernel> kernels) {
  double ll = 0.0;
  for (const auto& k : kernels) {
    const double mix = pi.pi[0] * k.l[0] + pi.pi[1] * k.l[1] + pi.pi[2] * k.l[2];
    if (!(mix > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += std::log(mix);
  }
  return ll;
}

std::vector<IbdKernel> kernels_for(std::span<const SibPairObservation> pairs) {
  std::vector<IbdKernel> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      out.push_back(ibd_kernel(pairs[i]));
    } catch (const EmError& e) {
      throw EmError(e.kind(), "pair " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::size_t count_uninformative(std::span<const IbdKernel> kernels) {
  std::size_t n = 0;
  for (const auto& k : kernels) n += k.uninformative() ? 1 : 0;
  return n;
}

EmResult<IbdProbabilities> fit(const std::vector<IbdKernel>& kernels,
                               const IbdProbabilities& init,
                               const EmConfig& config) {
  if (kernels.empty()) {
    throw EmError(ErrorKind::degenerate_input, "no sib pairs");
  }
  return run_em(IbdModel{}, kernels, init, config);
}

}  // namespace emkit::ibd
