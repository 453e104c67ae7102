#include "emkit/motif.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

namespace emkit::motif {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

bool is_distribution(const Column& c, double tol) {
  double sum = 0.0;
  for (double v : c) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

Column normalized(const Column& counts, double lambda) {
  double total = 0.0;
  Column out{};
  for (int b = 0; b < 4; ++b) {
    out[b] = counts[b] + lambda;
    total += out[b];
  }
  if (!(total > 0.0)) return {0.25, 0.25, 0.25, 0.25};
  for (double& v : out) v /= total;
  return out;
}

// Log-probability of sequence i given each start, under `model`.
// Background log-probabilities are accumulated as a finite prefix sum plus a
// count of zero-probability letters, so windows covering every impossible
// background letter are scored exactly.
std::vector<double> start_log_probs(const MotifModel& model,
                                    const std::vector<Column>& log_theta,
                                    const Column& log_bg,
                                    const std::vector<std::uint8_t>& seq,
                                    std::size_t width) {
  const std::size_t len = seq.size();
  std::vector<double> finite_prefix(len + 1, 0.0);
  std::vector<std::size_t> zero_prefix(len + 1, 0);
  for (std::size_t t = 0; t < len; ++t) {
    const double lb = log_bg[seq[t]];
    const bool zero = model.background[seq[t]] <= 0.0;
    finite_prefix[t + 1] = finite_prefix[t] + (zero ? 0.0 : lb);
    zero_prefix[t + 1] = zero_prefix[t] + (zero ? 1 : 0);
  }
  const std::size_t starts = len - width + 1;
  std::vector<double> out(starts, kNegInf);
  for (std::size_t k = 0; k < starts; ++k) {
    const std::size_t zeros_outside =
        zero_prefix[len] - (zero_prefix[k + width] - zero_prefix[k]);
    if (zeros_outside > 0) continue;
    double score = finite_prefix[len] - (finite_prefix[k + width] - finite_prefix[k]);
    for (std::size_t p = 0; p < width; ++p) score += log_theta[p][seq[k + p]];
    out[k] = score;
  }
  return out;
}

double log_sum_exp(const std::vector<double>& v) {
  const double hi = *std::max_element(v.begin(), v.end());
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

struct LogTables {
  std::vector<Column> theta;
  Column bg{};
};

LogTables log_tables(const MotifModel& model) {
  LogTables t;
  t.theta.resize(model.width());
  for (std::size_t p = 0; p < model.width(); ++p) {
    for (int b = 0; b < 4; ++b) t.theta[p][b] = safe_log(model.theta[p][b]);
  }
  for (int b = 0; b < 4; ++b) t.bg[b] = safe_log(model.background[b]);
  return t;
}

void check_shape(const MotifModel& model, const MotifDataset& data) {
  if (model.width() != data.width()) {
    throw EmError(ErrorKind::constraint_violation,
                  "motif model width does not match dataset width");
  }
}

}  // namespace

int letter_index(char c) noexcept {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    default: return -1;
  }
}

MotifDataset::MotifDataset(std::vector<std::string> sequences, std::size_t width)
    : sequences_(std::move(sequences)), width_(width) {
  if (sequences_.empty()) {
    throw EmError(ErrorKind::degenerate_input, "no sequences");
  }
  if (width_ == 0) {
    throw EmError(ErrorKind::degenerate_input, "motif width must be positive");
  }
  encoded_.reserve(sequences_.size());
  letter_counts_.reserve(sequences_.size());
  for (std::size_t i = 0; i < sequences_.size(); ++i) {
    const auto& s = sequences_[i];
    if (s.size() < width_) {
      throw EmError(ErrorKind::degenerate_input,
                    "sequence " + std::to_string(i + 1) + " is shorter than the motif width");
    }
    std::vector<std::uint8_t> enc(s.size());
    std::array<double, 4> counts{};
    for (std::size_t t = 0; t < s.size(); ++t) {
      const int b = letter_index(s[t]);
      if (b < 0) {
        throw EmError(ErrorKind::degenerate_input,
                      "sequence " + std::to_string(i + 1) + " has a letter outside ACGT at position " +
                          std::to_string(t + 1));
      }
      enc[t] = static_cast<std::uint8_t>(b);
      counts[b] += 1.0;
    }
    encoded_.push_back(std::move(enc));
    letter_counts_.push_back(counts);
  }
}

MotifModel uniform_model(std::size_t width, double pseudocount) {
  MotifModel m;
  m.theta.assign(width, Column{0.25, 0.25, 0.25, 0.25});
  m.pseudocount = pseudocount;
  return m;
}

bool is_valid(const MotifModel& model, double tol) {
  if (model.theta.empty() || !(model.pseudocount >= 0.0)) return false;
  for (const auto& col : model.theta) {
    if (!is_distribution(col, tol)) return false;
  }
  return is_distribution(model.background, tol);
}

StartPosteriors motif_e_step(const MotifModel& model, const MotifDataset& data) {
  check_shape(model, data);
  const auto logs = log_tables(model);
  StartPosteriors out;
  out.z.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto scores = start_log_probs(model, logs.theta, logs.bg, data.encoded(i), data.width());
    const double hi = *std::max_element(scores.begin(), scores.end());
    if (hi == kNegInf) {
      throw EmError(ErrorKind::impossible_data,
                    "sequence " + std::to_string(i + 1) +
                        " has zero probability at every motif start");
    }
    double total = 0.0;
    for (double& s : scores) {
      s = std::exp(s - hi);
      total += s;
    }
    for (double& s : scores) s /= total;
    out.z.push_back(std::move(scores));
  }
  return out;
}

MotifModel motif_m_step(const StartPosteriors& z, const MotifDataset& data,
                        double lambda) {
  if (z.z.size() != data.size()) {
    throw EmError(ErrorKind::constraint_violation,
                  "posterior count does not match the number of sequences");
  }
  const std::size_t width = data.width();
  std::vector<Column> window(width, Column{});
  Column outside{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& seq = data.encoded(i);
    const auto& zi = z.z[i];
    if (zi.size() != data.num_starts(i)) {
      throw EmError(ErrorKind::constraint_violation,
                    "posterior length does not match the number of motif starts");
    }
    Column in_window{};
    for (std::size_t k = 0; k < zi.size(); ++k) {
      const double w = zi[k];
      if (w == 0.0) continue;
      for (std::size_t p = 0; p < width; ++p) {
        window[p][seq[k + p]] += w;
        in_window[seq[k + p]] += w;
      }
    }
    for (int b = 0; b < 4; ++b) {
      outside[b] += std::max(0.0, data.letter_counts(i)[b] - in_window[b]);
    }
  }

  MotifModel m;
  m.pseudocount = lambda;
  m.theta.resize(width);
  for (std::size_t p = 0; p < width; ++p) m.theta[p] = normalized(window[p], lambda);
  m.background = normalized(outside, lambda);
  return m;
}

double motif_log_likelihood(const MotifModel& model, const MotifDataset& data) {
  check_shape(model, data);
  const auto logs = log_tables(model);
  double ll = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto scores =
        start_log_probs(model, logs.theta, logs.bg, data.encoded(i), data.width());
    const double lse = log_sum_exp(scores);
    if (lse == kNegInf) return kNegInf;
    ll += lse - std::log(static_cast<double>(scores.size()));
  }
  return ll;
}

double motif_log_prior(const MotifModel& model) {
  if (model.pseudocount == 0.0) return 0.0;
  double s = 0.0;
  for (const auto& col : model.theta) {
    for (double v : col) s += safe_log(v);
  }
  for (double v : model.background) s += safe_log(v);
  return model.pseudocount * s;
}

std::string consensus(const MotifModel& model) {
  std::string out;
  out.reserve(model.width());
  for (const auto& col : model.theta) {
    int best = 0;
    for (int b = 1; b < 4; ++b) {
      if (col[b] > col[best]) best = b;
    }
    out.push_back(kAlphabet[best]);
  }
  return out;
}

MotifModel seed_from_window(const MotifDataset& data, std::size_t sequence,
                            std::size_t start, double pseudocount) {
  const auto& seq = data.encoded(sequence);
  MotifModel m;
  m.pseudocount = pseudocount;
  m.theta.resize(data.width());
  for (std::size_t p = 0; p < data.width(); ++p) {
    m.theta[p].fill(0.1);
    m.theta[p][seq[start + p]] = 0.7;
  }
  return m;
}

std::vector<Alignment> best_alignments(const StartPosteriors& z) {
  std::vector<Alignment> out;
  out.reserve(z.z.size());
  for (const auto& zi : z.z) {
    const auto it = std::max_element(zi.begin(), zi.end());
    out.push_back({static_cast<std::size_t>(it - zi.begin()), *it});
  }
  return out;
}

DiscoveryResult discover(const MotifDataset& data, const DiscoveryOptions& options) {
  if (options.restarts == 0) {
    throw EmError(ErrorKind::constraint_violation, "restarts must be positive");
  }
  if (!(options.pseudocount >= 0.0)) {
    throw EmError(ErrorKind::constraint_violation, "pseudocount must be non-negative");
  }
  std::mt19937_64 rng(options.seed);
  const MotifEmModel em_model{options.pseudocount};

  DiscoveryResult best;
  bool have_best = false;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    std::uniform_int_distribution<std::size_t> pick_seq(0, data.size() - 1);
    const std::size_t seq = pick_seq(rng);
    std::uniform_int_distribution<std::size_t> pick_start(0, data.num_starts(seq) - 1);
    const std::size_t start = pick_start(rng);

    auto run = run_em(em_model, data,
                      seed_from_window(data, seq, start, options.pseudocount),
                      options.em);
    const double ll = motif_log_likelihood(run.final_params, data);

    RestartSummary summary;
    summary.index = r;
    summary.seed_sequence = seq;
    summary.seed_start = start;
    summary.objective = run.trace.entries.back().log_likelihood;
    summary.log_likelihood = ll;
    summary.iterations = run.trace.iterations();
    summary.converged = run.trace.converged;
    summary.consensus = consensus(run.final_params);
    best.restarts.push_back(summary);

    if (!have_best || ll > best.log_likelihood) {
      have_best = true;
      best.best_restart = r;
      best.log_likelihood = ll;
      best.model = std::move(run.final_params);
      best.trace = std::move(run.trace);
    }
  }
  best.consensus = consensus(best.model);
  best.alignments = best_alignments(motif_e_step(best.model, data));
  return best;
}

}  // namespace emkit::motif
