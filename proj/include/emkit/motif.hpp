#pragma once

// Motif discovery under the one-occurrence-per-sequence (OOPS) model.
//
// Every sequence holds exactly one motif instance of width W at an unknown
// start, all starts equally likely a priori. Motif positions follow a 4 x W
// matrix of letter probabilities; every other position follows a single
// background letter distribution. Both are re-estimated at each M-step from
// expected letter counts, optionally smoothed by a pseudocount.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "emkit/em.hpp"

namespace emkit::motif {

inline constexpr std::array<char, 4> kAlphabet{'A', 'C', 'G', 'T'};
inline constexpr std::size_t kDefaultWidth = 8;

using Column = std::array<double, 4>;

// Letter index in kAlphabet, or -1 for anything else.
int letter_index(char c) noexcept;

class MotifDataset {
 public:
  // Throws degenerate_input when there are no sequences, the width is zero, a
  // sequence is shorter than the width, or a letter is outside {A,C,G,T}.
  MotifDataset(std::vector<std::string> sequences, std::size_t width = kDefaultWidth);

  std::size_t size() const { return encoded_.size(); }
  std::size_t width() const { return width_; }
  const std::string& sequence(std::size_t i) const { return sequences_[i]; }
  const std::vector<std::uint8_t>& encoded(std::size_t i) const { return encoded_[i]; }
  // Number of admissible motif starts, L_i - W + 1.
  std::size_t num_starts(std::size_t i) const {
    return encoded_[i].size() - width_ + 1;
  }
  // Letter counts over the whole sequence.
  const std::array<double, 4>& letter_counts(std::size_t i) const {
    return letter_counts_[i];
  }

 private:
  std::vector<std::string> sequences_;
  std::vector<std::vector<std::uint8_t>> encoded_;
  std::vector<std::array<double, 4>> letter_counts_;
  std::size_t width_;
};

struct MotifModel {
  std::vector<Column> theta;  // one column per motif position
  Column background{0.25, 0.25, 0.25, 0.25};
  double pseudocount = 0.1;

  std::size_t width() const { return theta.size(); }
};

MotifModel uniform_model(std::size_t width, double pseudocount = 0.1);

bool is_valid(const MotifModel& model, double tol = 1e-12);

// Posterior over motif starts; z[i][k] for sequence i, start k (0-based).
struct StartPosteriors {
  std::vector<std::vector<double>> z;
};

// Throws impossible_data when some sequence has zero probability at every
// start.
StartPosteriors motif_e_step(const MotifModel& model, const MotifDataset& data);

// Expected-count M-step with additive pseudocount `lambda` on every cell of
// theta and the background.
MotifModel motif_m_step(const StartPosteriors& z, const MotifDataset& data,
                        double lambda);

// Observed-data OOPS log-likelihood; -inf when a sequence is impossible.
double motif_log_likelihood(const MotifModel& model, const MotifDataset& data);

// Log Dirichlet-prior term lambda * sum log(theta) + lambda * sum log(bg)
// matching the pseudocount M-step. Zero when lambda is zero.
double motif_log_prior(const MotifModel& model);

// Position-wise argmax letter; ties go to the earlier letter in A<C<G<T.
std::string consensus(const MotifModel& model);

// EM objective. With a pseudocount the M-step maximizes the penalized
// likelihood, so the monotone objective is log-likelihood plus log-prior.
struct MotifEmModel {
  using Params = MotifModel;
  using Stats = StartPosteriors;
  using Data = MotifDataset;

  double lambda = 0.1;

  Stats e_step(const Params& p, const Data& d) const { return motif_e_step(p, d); }
  Params m_step(const Stats& s, const Data& d) const {
    return motif_m_step(s, d, lambda);
  }
  double log_likelihood(const Params& p, const Data& d) const {
    return motif_log_likelihood(p, d) + motif_log_prior(p);
  }
  bool satisfies_constraints(const Params& p) const { return is_valid(p); }
};

// Starting model seeded from one window of the data: 0.7 on the window's
// letter at each position, 0.1 elsewhere; uniform background.
MotifModel seed_from_window(const MotifDataset& data, std::size_t sequence,
                            std::size_t start, double pseudocount);

struct DiscoveryOptions {
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
  double pseudocount = 0.1;
  EmConfig em{};
};

struct RestartSummary {
  std::size_t index = 0;
  std::size_t seed_sequence = 0;
  std::size_t seed_start = 0;
  double objective = 0.0;       // penalized objective at the final iterate
  double log_likelihood = 0.0;  // observed-data log-likelihood
  std::size_t iterations = 0;
  bool converged = false;
  std::string consensus;
};

struct Alignment {
  std::size_t best_start = 0;  // 0-based
  double posterior = 0.0;
};

struct DiscoveryResult {
  MotifModel model;
  std::string consensus;
  double log_likelihood = 0.0;
  EmTrace<MotifModel> trace;  // trace of the selected restart
  std::size_t best_restart = 0;
  std::vector<RestartSummary> restarts;
  std::vector<Alignment> alignments;
};

std::vector<Alignment> best_alignments(const StartPosteriors& z);

// Multi-restart EM. The restart with the highest final observed-data
// log-likelihood is reported; ties go to the lowest restart index.
// Deterministic for a fixed seed.
DiscoveryResult discover(const MotifDataset& data, const DiscoveryOptions& options);

}  // namespace emkit::motif
