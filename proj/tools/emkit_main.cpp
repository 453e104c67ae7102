// emkit: EM estimators from the command line.
//
//   emkit abo    --counts counts.csv
//   emkit ibd    --pairs pairs.csv
//   emkit motif  --sequences seqs.txt --width 8 --restarts 10 --seed 7
//   emkit deconv --kernel kernel.csv --counts ports.txt
//   emkit histogram --report report.json
//
// Exit codes: 0 success, 2 parse/usage error, 3 model or data error,
// 4 numerical failure.

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "emkit/cli_io.hpp"

namespace {

using emkit::io::Json;

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw emkit::io::ParseError(path, 0, 0, "cannot open output file");
  out << text;
}

struct CommonFlags {
  double tol = emkit::EmConfig{}.rel_tol;
  std::size_t max_iters = emkit::EmConfig{}.max_iterations;
  std::string output;
  std::uint64_t seed = 0;
  bool no_timestamp = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--tol", flags.tol, "Relative log-likelihood change tolerance")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", flags.max_iters, "Maximum EM iterations")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--output,-o", flags.output, "Output path (default: stdout)");
  cmd->add_option("--seed", flags.seed, "Random seed (used by motif restarts)");
  cmd->add_flag("--no-timestamp", flags.no_timestamp, "Omit the generated_at field");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EM estimators: ABO gene counting, sib-pair IBD sharing, OOPS motif "
               "discovery, diffusion-battery deconvolution"};
  app.set_version_flag("--version", std::string(emkit::io::kToolVersion));
  app.require_subcommand(1);

  CommonFlags flags;
  emkit::io::RunRequest req;

  std::string abo_counts;
  std::vector<double> abo_init;
  auto* abo = app.add_subcommand("abo", "ABO allele frequencies from blood-type counts");
  abo->add_option("--counts", abo_counts, "CSV with header t_A,t_B,t_AB,t_O")->required();
  abo->add_option("--init", abo_init, "Starting frequencies p_A p_B p_O")->expected(3)->delimiter(',');
  add_common(abo, flags);

  std::string ibd_pairs;
  auto* ibd = app.add_subcommand("ibd", "IBD sharing probabilities for affected sib pairs");
  ibd->add_option("--pairs", ibd_pairs, "CSV of parental and sib genotypes")->required();
  add_common(ibd, flags);

  std::string motif_seqs;
  auto* mot = app.add_subcommand("motif", "One-occurrence-per-sequence motif discovery");
  mot->add_option("--sequences", motif_seqs, "One sequence per line, or FASTA")->required();
  mot->add_option("--width", req.width, "Motif width")->check(CLI::PositiveNumber);
  mot->add_option("--pseudocount", req.pseudocount, "Additive pseudocount")
      ->check(CLI::NonNegativeNumber);
  mot->add_option("--restarts", req.restarts, "Number of random restarts")
      ->check(CLI::PositiveNumber);
  add_common(mot, flags);

  std::string dk_kernel, dk_counts;
  auto* dec = app.add_subcommand("deconv", "Particle-size distribution from diffusion-battery counts");
  dec->add_option("--kernel", dk_kernel, "Penetration kernel CSV (ports x size classes)")->required();
  dec->add_option("--counts", dk_counts, "P_0 followed by P_1..P_m")->required();
  add_common(dec, flags);

  std::string hist_report, hist_output;
  auto* hist = app.add_subcommand("histogram", "CSV table from a motif or deconv report");
  hist->add_option("--report", hist_report, "JSON report")->required();
  hist->add_option("--output,-o", hist_output, "Output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return emkit::io::kExitParse;
  }

  try {
    if (hist->parsed()) {
      const auto report = Json::parse(emkit::io::read_file(hist_report));
      write_output(emkit::io::emit_histogram_csv(report), hist_output);
      return emkit::io::kExitOk;
    }

    req.em.rel_tol = flags.tol;
    req.em.max_iterations = flags.max_iters;
    req.seed = flags.seed;
    req.timestamp = !flags.no_timestamp;
    if (abo->parsed()) {
      req.subcommand = emkit::io::Subcommand::abo;
      req.inputs = {abo_counts};
      if (!abo_init.empty()) req.abo_init = emkit::abo::AlleleFrequencies{abo_init[0], abo_init[1], abo_init[2]};
    } else if (ibd->parsed()) {
      req.subcommand = emkit::io::Subcommand::ibd;
      req.inputs = {ibd_pairs};
    } else if (mot->parsed()) {
      req.subcommand = emkit::io::Subcommand::motif;
      req.inputs = {motif_seqs};
    } else {
      req.subcommand = emkit::io::Subcommand::deconv;
      req.inputs = {dk_kernel, dk_counts};
    }
    const auto report = emkit::io::parse_and_dispatch(req);
    write_output(emkit::io::serialize(report), flags.output);
    return emkit::io::kExitOk;
  } catch (const emkit::io::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return emkit::io::kExitParse;
  } catch (const Json::exception& e) {
    std::cerr << "parse error: " << hist_report << ": " << e.what() << "\n";
    return emkit::io::kExitParse;
  } catch (const emkit::io::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return emkit::io::kExitParse;
  } catch (const emkit::EmError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return emkit::io::exit_code_for(e);
  }
}
