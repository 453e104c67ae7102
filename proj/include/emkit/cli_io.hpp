#pragma once

// Command-line front end support: input parsers, report construction and
// dispatch to the four estimators. The CLI binary in tools/ and the Python
// module are thin wrappers over this.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emkit/abo.hpp"
#include "emkit/deconv.hpp"
#include "emkit/em.hpp"
#include "emkit/ibd.hpp"
#include "emkit/motif.hpp"

namespace emkit::io {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolVersion = "0.3.0";

// Input that could not be read or parsed. line/column are 1-based; 0 means
// "not applicable" (e.g. a missing file).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, std::size_t line, std::size_t column, const std::string& message);

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string file_;
  std::size_t line_;
  std::size_t column_;
};

// Request that cannot be served, e.g. a histogram for an unsupported model.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitModel = 3;
inline constexpr int kExitNumerical = 4;

int exit_code_for(const EmError& e) noexcept;

// ---- parsers --------------------------------------------------------------

// CSV with header `t_A,t_B,t_AB,t_O` and one data row.
abo::BloodTypeCounts parse_blood_type_counts(std::string_view text, const std::string& file);

struct SibPairRow {
  std::size_t line = 0;
  ibd::SibPairObservation obs;
};

// CSV with header father_a1,...,sib2_a2; positive integer allele labels.
// Genotypes are not checked for Mendelian consistency here.
std::vector<SibPairRow> parse_sib_pairs(std::string_view text, const std::string& file);

// Kernels for parsed rows; a Mendelian-incompatible row raises
// mendelian_violation naming the data row and file line.
std::vector<ibd::IbdKernel> kernels_for_rows(std::span<const SibPairRow> rows,
                                             const std::string& file);

// One sequence per line, or FASTA (records introduced by '>' lines, sequence
// lines concatenated). Lower-case letters are accepted.
std::vector<std::string> parse_sequences(std::string_view text, const std::string& file);

// m rows x J columns of reals; a non-numeric first row is taken as a header.
deconv::PenetrationKernel parse_kernel(std::string_view text, const std::string& file);

struct PortCounts {
  std::uint64_t zero_port = 0;
  std::vector<std::uint64_t> ports;
};

// P_0 followed by P_1..P_m, separated by commas, whitespace or newlines; a
// non-numeric first line is taken as a header.
PortCounts parse_port_counts(std::string_view text, const std::string& file);

// ---- reports --------------------------------------------------------------

enum class Subcommand { abo, ibd, motif, deconv };

std::string_view to_string(Subcommand s) noexcept;

struct RunRequest {
  Subcommand subcommand = Subcommand::abo;
  // abo: counts; ibd: pairs; motif: sequences; deconv: kernel then counts.
  std::vector<std::filesystem::path> inputs;
  EmConfig em{};
  std::uint64_t seed = 0;
  std::size_t restarts = 10;                       // motif only
  std::size_t width = motif::kDefaultWidth;        // motif only
  double pseudocount = 0.1;                        // motif only
  std::optional<abo::AlleleFrequencies> abo_init;  // abo only
  bool timestamp = true;
};

struct InputFile {
  std::string name;
  std::string content;
};

// "sha256:<hex>" over the input files in order.
std::string input_digest(std::span<const InputFile> inputs);

struct ReportMeta {
  std::string input_digest;
  std::uint64_t seed = 0;
  EmConfig em{};
  bool timestamp = true;
};

Json abo_report(const abo::BloodTypeCounts& counts, const EmResult<abo::AlleleFrequencies>& run,
                const ReportMeta& meta);
Json ibd_report(const std::vector<ibd::IbdKernel>& kernels,
                const EmResult<ibd::IbdProbabilities>& run, const ReportMeta& meta);
Json motif_report(const motif::MotifDataset& data, const motif::DiscoveryResult& result,
                  const motif::DiscoveryOptions& options, const ReportMeta& meta);
Json deconv_report(const deconv::BatteryMeasurement& meas,
                   const EmResult<deconv::SizeDistribution>& run, const ReportMeta& meta);

// Runs the request on already-loaded inputs.
Json dispatch(const RunRequest& request, std::span<const InputFile> inputs);

// Reads request.inputs and dispatches. Missing or unreadable files raise
// ParseError.
Json parse_and_dispatch(const RunRequest& request);

std::string serialize(const Json& report);

// Plotting table for a motif or deconv report: (label,value) rows for the
// size distribution or a 4 x W theta table. Throws UsageError otherwise.
std::string emit_histogram_csv(const Json& report);

std::string read_file(const std::filesystem::path& path);

}  // namespace emkit::io
