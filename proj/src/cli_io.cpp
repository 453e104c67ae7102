#include "emkit/cli_io.hpp"

#include <openssl/evp.h>

#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace emkit::io {

namespace {

struct Field {
  std::string_view text;
  std::size_t column = 1;  // 1-based position of the field's first char
};

struct Line {
  std::string_view text;
  std::size_t number = 1;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Non-blank lines with their 1-based line numbers; trailing '\r' dropped.
std::vector<Line> lines_of(std::string_view text) {
  std::vector<Line> out;
  std::size_t number = 1;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) out.push_back({line, number});
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
    ++number;
  }
  return out;
}

std::vector<Field> split_csv(std::string_view line) {
  std::vector<Field> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const auto raw = line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                        : comma - start);
    std::size_t lead = 0;
    while (lead < raw.size() && std::isspace(static_cast<unsigned char>(raw[lead]))) ++lead;
    out.push_back({trim(raw), start + lead + 1});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Fields separated by commas and/or whitespace.
std::vector<Field> split_loose(std::string_view line) {
  std::vector<Field> out;
  std::size_t i = 0;
  auto is_sep = [](char c) { return c == ',' || std::isspace(static_cast<unsigned char>(c)); };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && !is_sep(line[i])) ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

std::optional<std::uint64_t> to_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> to_real(std::string_view s) {
  if (s.empty()) return std::nullopt;
  // from_chars for double is unavailable on older libstdc++; strtod on a copy.
  std::string copy(s);
  char* end = nullptr;
  const double v = std::strtod(copy.c_str(), &end);
  if (end != copy.c_str() + copy.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::uint64_t require_uint(const Field& f, const Line& line, const std::string& file,
                           std::string_view what) {
  auto v = to_uint(f.text);
  if (!v) {
    throw ParseError(file, line.number, f.column,
                     std::string(what) + " must be a non-negative integer, got '" +
                         std::string(f.text) + "'");
  }
  return *v;
}

bool all_numeric(const std::vector<Field>& fields) {
  for (const auto& f : fields) {
    if (!to_real(f.text)) return false;
  }
  return true;
}

void expect_header(const Line& line, const std::vector<std::string_view>& names,
                   const std::string& file) {
  const auto fields = split_csv(line.text);
  if (fields.size() != names.size()) {
    throw ParseError(file, line.number, 1,
                     "expected header with " + std::to_string(names.size()) + " columns");
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (fields[i].text != names[i]) {
      throw ParseError(file, line.number, fields[i].column,
                       "expected column '" + std::string(names[i]) + "', got '" +
                           std::string(fields[i].text) + "'");
    }
  }
}

std::string format_real(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

Json trace_json(const std::vector<double>& lls) {
  Json out = Json::array();
  for (double v : lls) out.push_back(v);
  return out;
}

template <class Params>
void add_meta(Json& report, std::string_view model, const EmTrace<Params>& trace,
              const ReportMeta& meta) {
  report["model"] = model;
  report["tool_version"] = kToolVersion;
  report["input_digest"] = meta.input_digest;
  report["seed"] = meta.seed;
  report["config"] = {{"max_iterations", meta.em.max_iterations},
                      {"rel_tol", meta.em.rel_tol},
                      {"abs_tol", meta.em.abs_tol},
                      {"monotonicity_slack", meta.em.monotonicity_slack}};
  report["converged"] = trace.converged;
  report["stop_reason"] = to_string(trace.stop_reason);
  report["iterations"] = trace.iterations();
}

void add_timestamp(Json& report, const ReportMeta& meta) {
  if (!meta.timestamp) return;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream ts;
  ts << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  report["generated_at"] = ts.str();
}

const InputFile& input_at(std::span<const InputFile> inputs, std::size_t i,
                          std::string_view what) {
  if (i >= inputs.size()) {
    throw UsageError("missing input: " + std::string(what));
  }
  return inputs[i];
}

}  // namespace

ParseError::ParseError(std::string file, std::size_t line, std::size_t column,
                       const std::string& message)
    : std::runtime_error([&] {
        std::string where = file;
        if (line > 0) where += ":" + std::to_string(line);
        if (column > 0) where += ":" + std::to_string(column);
        return where + ": " + message;
      }()),
      file_(std::move(file)),
      line_(line),
      column_(column) {}

int exit_code_for(const EmError& e) noexcept {
  switch (e.kind()) {
    case ErrorKind::numerical_failure:
    case ErrorKind::monotonicity_violation:
      return kExitNumerical;
    default:
      return kExitModel;
  }
}

abo::BloodTypeCounts parse_blood_type_counts(std::string_view text, const std::string& file) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(file, 0, 0, "file is empty");
  expect_header(lines[0], {"t_A", "t_B", "t_AB", "t_O"}, file);
  if (lines.size() != 2) {
    const std::size_t at = lines.size() < 2 ? lines[0].number : lines[2].number;
    throw ParseError(file, at, 1, "expected exactly one data row");
  }
  const auto& row = lines[1];
  const auto fields = split_csv(row.text);
  if (fields.size() != 4) {
    throw ParseError(file, row.number, 1, "expected 4 counts, got " + std::to_string(fields.size()));
  }
  abo::BloodTypeCounts c;
  c.a = require_uint(fields[0], row, file, "t_A");
  c.b = require_uint(fields[1], row, file, "t_B");
  c.ab = require_uint(fields[2], row, file, "t_AB");
  c.o = require_uint(fields[3], row, file, "t_O");
  return c;
}

std::vector<SibPairRow> parse_sib_pairs(std::string_view text, const std::string& file) {
  static const std::vector<std::string_view> kHeader{
      "father_a1", "father_a2", "mother_a1", "mother_a2",
      "sib1_a1",   "sib1_a2",   "sib2_a1",   "sib2_a2"};
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(file, 0, 0, "file is empty");
  expect_header(lines[0], kHeader, file);
  std::vector<SibPairRow> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& line = lines[r];
    const auto fields = split_csv(line.text);
    if (fields.size() != kHeader.size()) {
      throw ParseError(file, line.number, 1,
                       "expected 8 allele labels, got " + std::to_string(fields.size()));
    }
    std::array<ibd::Allele, 8> a{};
    for (std::size_t k = 0; k < 8; ++k) {
      const auto v = to_uint(fields[k].text);
      if (!v || *v == 0 || *v > UINT32_MAX) {
        throw ParseError(file, line.number, fields[k].column,
                         std::string(kHeader[k]) + " must be a positive integer allele label, got '" +
                             std::string(fields[k].text) + "'");
      }
      a[k] = static_cast<ibd::Allele>(*v);
    }
    rows.push_back({line.number,
                    {{a[0], a[1]}, {a[2], a[3]}, {a[4], a[5]}, {a[6], a[7]}}});
  }
  if (rows.empty()) throw ParseError(file, lines[0].number, 1, "no sib pairs after header");
  return rows;
}

std::vector<ibd::IbdKernel> kernels_for_rows(std::span<const SibPairRow> rows,
                                             const std::string& file) {
  std::vector<ibd::IbdKernel> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    try {
      out.push_back(ibd::ibd_kernel(rows[r].obs));
    } catch (const EmError& e) {
      throw EmError(e.kind(), file + ": row " + std::to_string(r + 1) + " (line " +
                                  std::to_string(rows[r].line) + "): " + e.what());
    }
  }
  return out;
}

std::vector<std::string> parse_sequences(std::string_view text, const std::string& file) {
  const auto lines = lines_of(text);
  bool fasta = false;
  for (const auto& l : lines) {
    if (trim(l.text).front() == '>') {
      fasta = true;
      break;
    }
  }
  std::vector<std::string> out;
  bool open_record = false;
  for (const auto& l : lines) {
    const auto body = trim(l.text);
    if (body.front() == '>') {
      out.emplace_back();
      open_record = true;
      continue;
    }
    if (fasta && !open_record) {
      throw ParseError(file, l.number, 1, "sequence data before the first FASTA header");
    }
    std::string seq;
    seq.reserve(body.size());
    const std::size_t offset = static_cast<std::size_t>(body.data() - l.text.data());
    for (std::size_t t = 0; t < body.size(); ++t) {
      const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(body[t])));
      if (motif::letter_index(c) < 0) {
        throw ParseError(file, l.number, offset + t + 1,
                         std::string("invalid nucleotide '") + body[t] + "'");
      }
      seq.push_back(c);
    }
    if (fasta) {
      out.back() += seq;
    } else {
      out.push_back(std::move(seq));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].empty()) throw ParseError(file, 0, 0, "FASTA record " + std::to_string(i + 1) + " is empty");
  }
  if (out.empty()) throw ParseError(file, 0, 0, "no sequences");
  return out;
}

deconv::PenetrationKernel parse_kernel(std::string_view text, const std::string& file) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(file, 0, 0, "file is empty");
  std::size_t first = 0;
  if (!all_numeric(split_csv(lines[0].text))) first = 1;
  std::size_t cols = 0;
  std::vector<double> values;
  for (std::size_t r = first; r < lines.size(); ++r) {
    const auto fields = split_csv(lines[r].text);
    if (cols == 0) cols = fields.size();
    if (fields.size() != cols) {
      throw ParseError(file, lines[r].number, 1,
                       "expected " + std::to_string(cols) + " columns, got " +
                           std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      const auto v = to_real(f.text);
      if (!v) {
        throw ParseError(file, lines[r].number, f.column,
                         "kernel entry must be a real number, got '" + std::string(f.text) + "'");
      }
      values.push_back(*v);
    }
  }
  const std::size_t rows = lines.size() - first;
  if (rows == 0) throw ParseError(file, lines[0].number, 1, "no kernel rows after header");
  return {rows, cols, std::move(values)};
}

PortCounts parse_port_counts(std::string_view text, const std::string& file) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(file, 0, 0, "file is empty");
  std::size_t first = 0;
  if (!all_numeric(split_loose(lines[0].text))) first = 1;
  std::vector<std::uint64_t> values;
  for (std::size_t r = first; r < lines.size(); ++r) {
    for (const auto& f : split_loose(lines[r].text)) {
      values.push_back(require_uint(f, lines[r], file, "count"));
    }
  }
  if (values.size() < 2) {
    throw ParseError(file, 0, 0, "expected P_0 followed by at least one port count");
  }
  PortCounts out;
  out.zero_port = values.front();
  out.ports.assign(values.begin() + 1, values.end());
  return out;
}

std::string_view to_string(Subcommand s) noexcept {
  switch (s) {
    case Subcommand::abo: return "abo";
    case Subcommand::ibd: return "ibd";
    case Subcommand::motif: return "motif";
    case Subcommand::deconv: return "deconv";
  }
  return "unknown";
}

std::string input_digest(std::span<const InputFile> inputs) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  for (const auto& in : inputs) {
    const std::string size = std::to_string(in.content.size()) + ":";
    EVP_DigestUpdate(ctx, size.data(), size.size());
    EVP_DigestUpdate(ctx, in.content.data(), in.content.size());
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  hex << "sha256:";
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

Json abo_report(const abo::BloodTypeCounts& counts, const EmResult<abo::AlleleFrequencies>& run,
                const ReportMeta& meta) {
  Json r;
  add_meta(r, "abo", run.trace, meta);
  const auto& f = run.final_params;
  r["p_A"] = f.p_a;
  r["p_B"] = f.p_b;
  r["p_O"] = f.p_o;
  r["counts"] = {{"t_A", counts.a}, {"t_B", counts.b}, {"t_AB", counts.ab}, {"t_O", counts.o}};
  // Alleles at frequency zero are absorbing; flag them when unobserved.
  Json absorbed = Json::array();
  if (f.p_a == 0.0 && counts.a == 0 && counts.ab == 0) absorbed.push_back("A");
  if (f.p_b == 0.0 && counts.b == 0 && counts.ab == 0) absorbed.push_back("B");
  if (f.p_o == 0.0 && counts.o == 0) absorbed.push_back("O");
  r["zero_frequency_alleles"] = absorbed;
  r["loglik_trace"] = trace_json(run.trace.log_likelihoods());
  add_timestamp(r, meta);
  return r;
}

Json ibd_report(const std::vector<ibd::IbdKernel>& kernels,
                const EmResult<ibd::IbdProbabilities>& run, const ReportMeta& meta) {
  Json r;
  add_meta(r, "ibd", run.trace, meta);
  r["pi_0"] = run.final_params.pi[0];
  r["pi_1"] = run.final_params.pi[1];
  r["pi_2"] = run.final_params.pi[2];
  r["n_pairs"] = kernels.size();
  r["n_uninformative"] = ibd::count_uninformative(kernels);
  r["loglik_trace"] = trace_json(run.trace.log_likelihoods());
  add_timestamp(r, meta);
  return r;
}

Json motif_report(const motif::MotifDataset& data, const motif::DiscoveryResult& result,
                  const motif::DiscoveryOptions& options, const ReportMeta& meta) {
  Json r;
  add_meta(r, "motif", result.trace, meta);
  r["width"] = data.width();
  r["pseudocount"] = options.pseudocount;
  r["restarts"] = options.restarts;
  r["consensus"] = result.consensus;
  Json theta = Json::array();
  for (int b = 0; b < 4; ++b) {
    Json row = Json::array();
    for (const auto& col : result.model.theta) row.push_back(col[b]);
    theta.push_back(row);
  }
  r["alphabet"] = "ACGT";
  r["theta"] = theta;
  r["theta_bg"] = result.model.background;
  Json per_seq = Json::array();
  for (const auto& a : result.alignments) {
    per_seq.push_back({{"best_start", a.best_start + 1}, {"posterior", a.posterior}});
  }
  r["per_sequence"] = per_seq;
  r["loglik"] = result.log_likelihood;
  r["best_restart"] = result.best_restart;
  Json restarts = Json::array();
  for (const auto& s : result.restarts) {
    restarts.push_back({{"restart", s.index},
                        {"seed_sequence", s.seed_sequence + 1},
                        {"seed_start", s.seed_start + 1},
                        {"loglik", s.log_likelihood},
                        {"objective", s.objective},
                        {"iterations", s.iterations},
                        {"converged", s.converged},
                        {"consensus", s.consensus}});
  }
  r["restarts_summary"] = restarts;
  // Penalized objective (log-likelihood plus pseudocount log-prior) of the
  // selected restart.
  r["objective_trace"] = trace_json(result.trace.log_likelihoods());
  add_timestamp(r, meta);
  return r;
}

Json deconv_report(const deconv::BatteryMeasurement& meas,
                   const EmResult<deconv::SizeDistribution>& run, const ReportMeta& meta) {
  Json r;
  add_meta(r, "deconv", run.trace, meta);
  const auto& f = run.final_params;
  r["P_0"] = meas.zero_port();
  r["f_raw"] = f.f;
  double total = 0.0;
  for (double v : f.f) total += v;
  if (total > 0.0) {
    const auto norm = deconv::normalize_distribution(f);
    r["f_normalized"] = norm.proportions;
    r["total_mass"] = norm.total;
    r["degenerate"] = false;
  } else {
    r["f_normalized"] = std::vector<double>(f.f.size(), 0.0);
    r["total_mass"] = 0.0;
    r["degenerate"] = true;
  }
  r["fitted_mu"] = deconv::fitted_means(f, meas);
  r["observed"] = meas.port_counts();
  r["loglik_trace"] = trace_json(run.trace.log_likelihoods());
  add_timestamp(r, meta);
  return r;
}

Json dispatch(const RunRequest& request, std::span<const InputFile> inputs) {
  ReportMeta meta{input_digest(inputs), request.seed, request.em, request.timestamp};
  switch (request.subcommand) {
    case Subcommand::abo: {
      const auto& in = input_at(inputs, 0, "blood-type counts");
      const auto counts = parse_blood_type_counts(in.content, in.name);
      const auto run = abo::fit(counts, request.abo_init.value_or(abo::kUniformStart), request.em);
      return abo_report(counts, run, meta);
    }
    case Subcommand::ibd: {
      const auto& in = input_at(inputs, 0, "sib pairs");
      const auto rows = parse_sib_pairs(in.content, in.name);
      const auto kernels = kernels_for_rows(rows, in.name);
      const auto run = ibd::fit(kernels, {}, request.em);
      return ibd_report(kernels, run, meta);
    }
    case Subcommand::motif: {
      const auto& in = input_at(inputs, 0, "sequences");
      const motif::MotifDataset data(parse_sequences(in.content, in.name), request.width);
      motif::DiscoveryOptions opts;
      opts.restarts = request.restarts;
      opts.seed = request.seed;
      opts.pseudocount = request.pseudocount;
      opts.em = request.em;
      const auto result = motif::discover(data, opts);
      return motif_report(data, result, opts, meta);
    }
    case Subcommand::deconv: {
      const auto& kin = input_at(inputs, 0, "kernel");
      const auto& cin = input_at(inputs, 1, "counts");
      auto kernel = parse_kernel(kin.content, kin.name);
      auto counts = parse_port_counts(cin.content, cin.name);
      const deconv::BatteryMeasurement meas(counts.zero_port, std::move(counts.ports),
                                            std::move(kernel));
      const auto run = deconv::fit(meas, request.em);
      return deconv_report(meas, run, meta);
    }
  }
  throw UsageError("unknown subcommand");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json parse_and_dispatch(const RunRequest& request) {
  std::vector<InputFile> inputs;
  for (const auto& p : request.inputs) inputs.push_back({p.string(), read_file(p)});
  return dispatch(request, inputs);
}

std::string serialize(const Json& report) { return report.dump(2) + "\n"; }

std::string emit_histogram_csv(const Json& report) {
  const std::string model = report.value("model", "");
  std::ostringstream out;
  if (model == "deconv") {
    const auto& f = report.at("f_normalized");
    out << "label,value\n";
    for (std::size_t j = 0; j < f.size(); ++j) {
      out << "size_" << (j + 1) << "," << format_real(f[j].get<double>()) << "\n";
    }
    if (report.value("degenerate", false)) out << "# degenerate=true\n";
    return out.str();
  }
  if (model == "motif") {
    const auto& theta = report.at("theta");
    const std::size_t width = theta.empty() ? 0 : theta[0].size();
    out << "letter";
    for (std::size_t p = 0; p < width; ++p) out << ",pos_" << (p + 1);
    out << "\n";
    for (std::size_t b = 0; b < theta.size(); ++b) {
      out << motif::kAlphabet[b];
      for (const auto& v : theta[b]) out << "," << format_real(v.get<double>());
      out << "\n";
    }
    return out.str();
  }
  throw UsageError("histogram output is only available for motif and deconv reports, got '" +
                   model + "'");
}

}  // namespace emkit::io
