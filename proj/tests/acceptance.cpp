// Acceptance harness. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "emkit/cli_io.hpp"
#include "support/oracles.hpp"
#include "support/simulate.hpp"

#if defined(EMKIT_CLI_PATH)
#include <sys/wait.h>
#endif

using namespace emkit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome monotone_likelihood() {
  Outcome out;
  constexpr int kDatasets = 100;
  constexpr double kSlack = 1e-10;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::size_t traces = 0;

  for (int r = 0; r < kDatasets; ++r) {
    const auto truth = testing::random_simplex<3>(rng);
    const auto n = std::uniform_int_distribution<std::uint64_t>(100, 1000)(rng);
    const auto counts = testing::simulate_blood_types({truth[0], truth[1], truth[2]}, n, rng);
    const auto init = testing::random_simplex<3>(rng);
    const auto run = abo::fit(counts, {init[0], init[1], init[2]});
    ++traces;
    if (!assert_monotone(run.trace, kSlack)) out.fail("abo dataset " + std::to_string(r));
  }
  for (int r = 0; r < kDatasets; ++r) {
    const auto truth = testing::random_simplex<3>(rng);
    const auto n = std::uniform_int_distribution<std::size_t>(50, 500)(rng);
    const auto alleles = std::uniform_int_distribution<unsigned>(2, 8)(rng);
    const auto kernels = ibd::kernels_for(testing::simulate_families(truth, n, alleles, rng));
    const auto init = testing::random_simplex<3>(rng);
    const auto run = ibd::fit(kernels, {init});
    ++traces;
    if (!assert_monotone(run.trace, kSlack)) out.fail("ibd dataset " + std::to_string(r));
  }
  for (int r = 0; r < kDatasets; ++r) {
    const auto width = std::uniform_int_distribution<std::size_t>(5, 8)(rng);
    const auto planted = testing::plant_motif(10, 60, width, 0.8, rng);
    const motif::MotifDataset data(planted.sequences, width);
    const auto seq = std::uniform_int_distribution<std::size_t>(0, data.size() - 1)(rng);
    const auto start = std::uniform_int_distribution<std::size_t>(0, data.num_starts(seq) - 1)(rng);
    const motif::MotifEmModel model{0.1};
    const auto run = run_em(model, data, motif::seed_from_window(data, seq, start, 0.1));
    ++traces;
    if (!assert_monotone(run.trace, kSlack)) out.fail("motif dataset " + std::to_string(r));
  }
  for (int r = 0; r < kDatasets; ++r) {
    const auto kernel = testing::random_kernel(10, 8, rng);
    std::vector<double> truth(8);
    for (auto& v : truth) v = testing::uniform01(rng);
    const auto p0 = std::uniform_int_distribution<std::uint64_t>(1000, 100000)(rng);
    const deconv::BatteryMeasurement meas(p0, deconv::synthetic::simulate_counts(kernel, {truth}, p0, rng),
                                          kernel);
    const auto run = deconv::fit(meas);
    ++traces;
    if (!assert_monotone(run.trace, kSlack)) out.fail("deconv dataset " + std::to_string(r));
  }

  const double secs = seconds_since(t0);
  if (secs >= 120.0) out.fail("runtime " + fmt("%.1f s", secs));
  if (out.pass) out.detail = std::to_string(traces) + " traces, " + fmt("%.2f s", secs);
  return out;
}

// ---------------------------------------------------------------------------

Outcome abo_oracle() {
  Outcome out;
  std::mt19937_64 rng(777);
  double worst = 0.0;
  std::size_t max_iters = 0;
  for (int r = 0; r < 20; ++r) {
    const auto truth = testing::random_simplex<3>(rng, 0.05);
    const auto n = std::uniform_int_distribution<std::uint64_t>(100, 1000)(rng);
    const auto c = testing::simulate_blood_types({truth[0], truth[1], truth[2]}, n, rng);
    const auto run = abo::fit(c);
    const auto oracle = testing::abo_grid_mle(
        {static_cast<double>(c.a), static_cast<double>(c.b), static_cast<double>(c.ab),
         static_cast<double>(c.o)});
    const auto& p = run.final_params;
    const double err = std::max({std::abs(p.p_a - oracle.pa), std::abs(p.p_b - oracle.pb),
                                 std::abs(p.p_o - oracle.po)});
    worst = std::max(worst, err);
    if (err > 1e-4) out.fail("vector " + std::to_string(r) + " off by " + fmt("%.3g", err));
    const bool all_positive = c.a > 0 && c.b > 0 && c.ab > 0 && c.o > 0;
    if (all_positive) {
      max_iters = std::max(max_iters, run.trace.iterations());
      if (!run.trace.converged || run.trace.iterations() > 50) {
        out.fail("vector " + std::to_string(r) + " took " +
                 std::to_string(run.trace.iterations()) + " iterations");
      }
    }
  }
  if (out.pass) {
    out.detail = "max component error " + fmt("%.2e", worst) + ", max iterations " +
                 std::to_string(max_iters);
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome ibd_exactness() {
  Outcome out;

  // Exhaustive sweep over a four-label set.
  std::vector<ibd::Genotype> genotypes;
  for (ibd::Allele a = 1; a <= 4; ++a)
    for (ibd::Allele b = a; b <= 4; ++b) genotypes.emplace_back(a, b);
  std::size_t configs = 0;
  double worst = 0.0;
  const auto pair_of = [](const ibd::Genotype& g) { return testing::AllelePair{g.lo(), g.hi()}; };
  for (const auto& f : genotypes)
    for (const auto& m : genotypes)
      for (const auto& s1 : genotypes)
        for (const auto& s2 : genotypes) {
          if (!ibd::mendelian_compatible(f, m, s1) || !ibd::mendelian_compatible(f, m, s2)) continue;
          const auto k = ibd::ibd_kernel({f, m, s1, s2});
          const double mixed = 0.25 * k.l[0] + 0.5 * k.l[1] + 0.25 * k.l[2];
          const double direct = testing::sib_pair_prob(pair_of(f), pair_of(m), pair_of(s1), pair_of(s2));
          worst = std::max(worst, std::abs(mixed - direct));
          ++configs;
        }
  if (worst > 1e-12) out.fail("kernel mismatch " + fmt("%.3g", worst));

  // Fully informative data: one update lands on the empirical proportions.
  std::mt19937_64 rng(99);
  for (int r = 0; r < 10; ++r) {
    std::array<int, 3> per{};
    for (int& v : per) v = std::uniform_int_distribution<int>(1, 60)(rng);
    const auto kernels = ibd::kernels_for(testing::fully_informative_families(per, rng));
    const auto run = ibd::fit(kernels);
    const double n = per[0] + per[1] + per[2];
    const auto& first = run.trace.entries.at(1).params.pi;
    for (int j = 0; j < 3; ++j) {
      if (std::abs(first[j] - per[j] / n) > 1e-15) out.fail("informative set not exact after one update");
    }
    if (!run.trace.converged || run.final_params.pi != first) out.fail("informative set moved after one update");
  }

  // Null simulation: 2000 pairs at a 12-allele marker.
  const auto kernels = ibd::kernels_for(testing::simulate_families(ibd::kNullSharing, 2000, 12, rng));
  const auto pi = ibd::fit(kernels).final_params.pi;
  double worst_z = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double p = ibd::kNullSharing[j];
    const double se = std::sqrt(p * (1 - p) / 2000.0);
    worst_z = std::max(worst_z, std::abs(pi[j] - p) / se);
  }
  if (worst_z > 3.0) out.fail("null estimate " + fmt("%.2f", worst_z) + " SE from (1/4,1/2,1/4)");

  if (out.pass) {
    out.detail = std::to_string(configs) + " configurations, max gap " + fmt("%.1e", worst) +
                 "; null max |z| " + fmt("%.2f", worst_z);
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome motif_recovery() {
  Outcome out;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4242);
  int recovered = 0;
  constexpr int kReplicates = 50;
  for (int r = 0; r < kReplicates; ++r) {
    const auto planted = testing::plant_motif(20, 100, 8, 0.9, rng);
    const motif::MotifDataset data(planted.sequences, 8);
    motif::DiscoveryOptions opts;
    opts.restarts = 10;
    opts.seed = static_cast<std::uint64_t>(r);
    const auto found = motif::discover(data, opts);
    if (testing::shifted_matches(found.consensus, planted.motif) >= 7) ++recovered;
  }
  const double secs = seconds_since(t0);
  if (recovered < 45) out.fail(std::to_string(recovered) + "/50 replicates recovered");
  if (secs >= 60.0) out.fail("runtime " + fmt("%.1f s", secs));

  motif::MotifModel indicators;
  for (char c : std::string("ATGCAACT")) {
    motif::Column col{};
    col[motif::letter_index(c)] = 1.0;
    indicators.theta.push_back(col);
  }
  const auto cons = motif::consensus(indicators);
  if (cons != "ATGCAACT") out.fail("indicator consensus " + cons);

  if (out.pass) {
    out.detail = std::to_string(recovered) + "/50 replicates recovered, " + fmt("%.2f s", secs) +
                 ", indicator consensus " + cons;
  }
  return out;
}

// ---------------------------------------------------------------------------

double flux_gap(const deconv::SizeDistribution& f, const deconv::BatteryMeasurement& meas) {
  const double p0 = static_cast<double>(meas.zero_port());
  double flux = 0.0;
  for (std::size_t j = 0; j < f.f.size(); ++j) flux += f.f[j] * p0 * meas.detection_weights()[j];
  return std::abs(flux - meas.total_port_count()) / meas.total_port_count();
}

Outcome deconv_identities() {
  Outcome out;
  std::mt19937_64 rng(2718);

  // Identity kernel.
  for (int r = 0; r < 10; ++r) {
    const std::size_t m = 8;
    std::vector<double> w(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) w[i * m + i] = 1.0;
    const deconv::PenetrationKernel kernel(m, m, std::move(w));
    const auto p0 = std::uniform_int_distribution<std::uint64_t>(100, 100000)(rng);
    std::vector<std::uint64_t> counts(m);
    for (auto& c : counts) c = std::uniform_int_distribution<std::uint64_t>(0, p0)(rng);
    counts[0] = std::max<std::uint64_t>(counts[0], 1);
    const deconv::BatteryMeasurement meas(p0, counts, kernel);
    const auto run = deconv::fit(meas);
    const auto& first = run.trace.entries.at(1).params.f;
    for (std::size_t j = 0; j < m; ++j) {
      if (first[j] != static_cast<double>(counts[j]) / static_cast<double>(p0)) {
        out.fail("identity kernel not exact after one update");
      }
    }
    if (!run.trace.converged || run.final_params.f != first) out.fail("identity kernel moved after one update");
  }

  // Flux identity after every M-step.
  double worst_flux = 0.0;
  for (int r = 0; r < 50; ++r) {
    const auto kernel = testing::random_kernel(10, 8, rng);
    std::vector<double> truth(8);
    for (auto& v : truth) v = testing::uniform01(rng);
    const auto p0 = std::uniform_int_distribution<std::uint64_t>(1000, 1000000)(rng);
    const deconv::BatteryMeasurement meas(p0, deconv::synthetic::simulate_counts(kernel, {truth}, p0, rng),
                                          kernel);
    const auto run = deconv::fit(meas);
    for (std::size_t t = 1; t < run.trace.entries.size(); ++t) {
      worst_flux = std::max(worst_flux, flux_gap(run.trace.entries[t].params, meas));
    }
  }
  if (worst_flux > 1e-9) out.fail("flux identity gap " + fmt("%.3g", worst_flux));

  // Poisson recovery at P_0 = 1e6.
  const auto kernel = testing::banded_kernel(10, 8);
  const auto truth = testing::smooth_truth(8);
  double worst_err = 0.0;
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = 1000000;
    const deconv::BatteryMeasurement meas(p0, deconv::synthetic::simulate_counts(kernel, {truth}, p0, rng),
                                          kernel);
    const auto f = deconv::fit(meas).final_params.f;
    for (std::size_t j = 0; j < 8; ++j) worst_err = std::max(worst_err, std::abs(f[j] - truth[j]));
  }
  if (worst_err >= 0.02) out.fail("recovery error " + fmt("%.4f", worst_err));

  if (out.pass) {
    out.detail = "max flux gap " + fmt("%.1e", worst_flux) + ", max recovery error " +
                 fmt("%.2e", worst_err);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct Scratch {
  fs::path path;
  Scratch() {
    path = fs::temp_directory_path() / ("emkit_accept_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~Scratch() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& content) const {
    std::ofstream(path / name, std::ios::binary) << content;
    return path / name;
  }
};

std::string without_timestamp(const std::string& text) {
  auto j = io::Json::parse(text);
  j.erase("generated_at");
  return j.dump(2);
}

Outcome determinism() {
  Outcome out;
  Scratch dir;
  std::mt19937_64 rng(31337);

  const auto counts = dir.write("counts.csv", "t_A,t_B,t_AB,t_O\n186,38,36,284\n");
  std::string pairs = "father_a1,father_a2,mother_a1,mother_a2,sib1_a1,sib1_a2,sib2_a1,sib2_a2\n";
  for (const auto& f : testing::simulate_families({0.2, 0.5, 0.3}, 200, 6, rng)) {
    pairs += std::to_string(f.father.lo()) + "," + std::to_string(f.father.hi()) + "," +
             std::to_string(f.mother.lo()) + "," + std::to_string(f.mother.hi()) + "," +
             std::to_string(f.sib1.lo()) + "," + std::to_string(f.sib1.hi()) + "," +
             std::to_string(f.sib2.lo()) + "," + std::to_string(f.sib2.hi()) + "\n";
  }
  const auto pairs_path = dir.write("pairs.csv", pairs);
  std::string seqs;
  for (const auto& s : testing::plant_motif(20, 100, 8, 0.9, rng).sequences) seqs += s + "\n";
  const auto seqs_path = dir.write("seqs.txt", seqs);
  const auto kernel = deconv::synthetic::penetration_kernel(10, 8);
  std::ostringstream kcsv;
  kcsv.precision(17);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 8; ++j) kcsv << kernel(i, j) << (j + 1 < 8 ? "," : "\n");
  const auto kernel_path = dir.write("kernel.csv", kcsv.str());
  std::string port_counts = "100000";
  for (auto c : deconv::synthetic::simulate_counts(kernel, {testing::smooth_truth(8)}, 100000, rng))
    port_counts += " " + std::to_string(c);
  const auto port_path = dir.write("ports.txt", port_counts + "\n");

  const std::vector<std::pair<std::string, std::string>> runs{
      {"abo", "abo --counts " + counts.string()},
      {"ibd", "ibd --pairs " + pairs_path.string()},
      {"motif", "motif --sequences " + seqs_path.string() + " --seed 11"},
      {"deconv", "deconv --kernel " + kernel_path.string() + " --counts " + port_path.string()},
  };
  std::vector<std::string> checked;

#if defined(EMKIT_CLI_PATH)
  const auto run = [&](const std::string& args) {
    const std::string cmd = std::string(EMKIT_CLI_PATH) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const auto slurp = [](const fs::path& p) { return io::read_file(p); };
  for (const auto& [name, args] : runs) {
    const auto a = dir.path / (name + "_a.json"), b = dir.path / (name + "_b.json");
    if (run(args + " -o " + a.string()) != 0 || run(args + " -o " + b.string()) != 0) {
      out.fail(name + " run failed");
      continue;
    }
    if (without_timestamp(slurp(a)) != without_timestamp(slurp(b))) out.fail(name + " output differs");
    const auto na = dir.path / (name + "_na.json"), nb = dir.path / (name + "_nb.json");
    if (run(args + " --no-timestamp -o " + na.string()) != 0 ||
        run(args + " --no-timestamp -o " + nb.string()) != 0 || slurp(na) != slurp(nb)) {
      out.fail(name + " --no-timestamp output differs");
    }
    checked.push_back(name);
    if (name == "motif" || name == "deconv") {
      const auto ha = dir.path / (name + "_a.csv"), hb = dir.path / (name + "_b.csv");
      if (run("histogram --report " + a.string() + " -o " + ha.string()) != 0 ||
          run("histogram --report " + b.string() + " -o " + hb.string()) != 0 ||
          slurp(ha) != slurp(hb)) {
        out.fail(name + " histogram differs");
      }
      checked.push_back("histogram(" + name + ")");
    }
  }
#else
  (void)runs;
  out.fail("CLI binary not built");
#endif

  if (out.pass) {
    std::string list;
    for (const auto& c : checked) list += (list.empty() ? "" : ", ") + c;
    out.detail = "byte-identical reruns: " + list;
  }
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"monotone likelihood (4 models x 100 datasets, slack 1e-10, < 120 s)", monotone_likelihood},
      {"ABO oracle equivalence (20 vectors, 1e-4 per component, <= 50 iterations)", abo_oracle},
      {"IBD kernel exactness (4-allele sweep 1e-12, informative one-step, null within 3 SE)", ibd_exactness},
      {"motif recovery (50 replicates, >= 7/8 within +-1 shift in >= 90%, < 60 s)", motif_recovery},
      {"deconvolution identities (identity exact, flux 1e-9, P_0=1e6 error < 0.02)", deconv_identities},
      {"determinism (byte-identical CLI reruns modulo timestamp)", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::printf("%s  %s  [%s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d/%zu acceptance criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
