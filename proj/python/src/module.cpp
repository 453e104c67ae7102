#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "emkit/cli_io.hpp"

namespace py = pybind11;
using emkit::io::Json;

namespace {

py::object to_python(const Json& report) {
  return py::module_::import("json").attr("loads")(report.dump());
}

Json from_python(const py::object& obj) {
  return Json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

emkit::EmConfig make_config(std::size_t max_iterations, double rel_tol) {
  emkit::EmConfig c;
  c.max_iterations = max_iterations;
  c.rel_tol = rel_tol;
  return c;
}

emkit::io::ReportMeta meta_for(const emkit::EmConfig& em, std::uint64_t seed = 0) {
  return {"", seed, em, false};
}

emkit::ibd::Genotype genotype(const std::array<emkit::ibd::Allele, 2>& g) {
  return {g[0], g[1]};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "EM estimators: ABO gene counting, sib-pair IBD sharing, OOPS motif "
            "discovery and diffusion-battery deconvolution";
  m.attr("__version__") = std::string(emkit::io::kToolVersion);

  static py::exception<emkit::EmError> em_error(m, "EmError", PyExc_ValueError);
  static py::exception<emkit::io::ParseError> parse_error(m, "ParseError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const emkit::EmError& e) {
      py::set_error(em_error, e.what());
    } catch (const emkit::io::ParseError& e) {
      py::set_error(parse_error, e.what());
    }
  });

  m.def("assert_monotone",
        [](const std::vector<double>& lls, double slack) {
          return emkit::assert_monotone(lls, slack);
        },
        py::arg("log_likelihoods"), py::arg("slack") = 1e-10);

  // ---- ABO ----
  m.def("abo_log_likelihood",
        [](const std::array<double, 3>& f, const std::array<std::uint64_t, 4>& c) {
          return emkit::abo::abo_log_likelihood({f[0], f[1], f[2]}, {c[0], c[1], c[2], c[3]});
        },
        py::arg("freqs"), py::arg("counts"));
  m.def("fit_abo",
        [](const std::array<std::uint64_t, 4>& c, std::optional<std::array<double, 3>> init,
           std::size_t max_iterations, double rel_tol) {
          const emkit::abo::BloodTypeCounts counts{c[0], c[1], c[2], c[3]};
          const auto start = init ? emkit::abo::AlleleFrequencies{(*init)[0], (*init)[1], (*init)[2]}
                                  : emkit::abo::kUniformStart;
          const auto config = make_config(max_iterations, rel_tol);
          const auto run = emkit::abo::fit(counts, start, config);
          return to_python(emkit::io::abo_report(counts, run, meta_for(config)));
        },
        py::arg("counts"), py::arg("init") = py::none(), py::arg("max_iterations") = 10000,
        py::arg("rel_tol") = 1e-8,
        "Allele frequencies from blood-type counts (t_A, t_B, t_AB, t_O).");

  // ---- IBD ----
  m.def("ibd_kernel",
        [](const std::array<emkit::ibd::Allele, 2>& father,
           const std::array<emkit::ibd::Allele, 2>& mother,
           const std::array<emkit::ibd::Allele, 2>& sib1,
           const std::array<emkit::ibd::Allele, 2>& sib2) {
          return emkit::ibd::ibd_kernel(
                     {genotype(father), genotype(mother), genotype(sib1), genotype(sib2)})
              .l;
        },
        py::arg("father"), py::arg("mother"), py::arg("sib1"), py::arg("sib2"));
  m.def("fit_ibd",
        [](const std::vector<std::array<emkit::ibd::Allele, 8>>& rows, std::size_t max_iterations,
           double rel_tol) {
          std::vector<emkit::ibd::SibPairObservation> obs;
          obs.reserve(rows.size());
          for (const auto& r : rows) {
            obs.push_back({{r[0], r[1]}, {r[2], r[3]}, {r[4], r[5]}, {r[6], r[7]}});
          }
          const auto kernels = emkit::ibd::kernels_for(obs);
          const auto config = make_config(max_iterations, rel_tol);
          const auto run = emkit::ibd::fit(kernels, {}, config);
          return to_python(emkit::io::ibd_report(kernels, run, meta_for(config)));
        },
        py::arg("rows"), py::arg("max_iterations") = 10000, py::arg("rel_tol") = 1e-8,
        "Rows are (father_a1, father_a2, mother_a1, mother_a2, sib1_a1, sib1_a2, sib2_a1, sib2_a2).");

  // ---- motif ----
  m.def("consensus",
        [](const std::vector<std::array<double, 4>>& columns) {
          emkit::motif::MotifModel model;
          model.theta = columns;
          return emkit::motif::consensus(model);
        },
        py::arg("columns"), "Consensus from W columns of (P(A), P(C), P(G), P(T)).");
  m.def("discover_motif",
        [](std::vector<std::string> sequences, std::size_t width, double pseudocount,
           std::size_t restarts, std::uint64_t seed, std::size_t max_iterations, double rel_tol) {
          const emkit::motif::MotifDataset data(std::move(sequences), width);
          emkit::motif::DiscoveryOptions opts;
          opts.restarts = restarts;
          opts.seed = seed;
          opts.pseudocount = pseudocount;
          opts.em = make_config(max_iterations, rel_tol);
          emkit::motif::DiscoveryResult result;
          {
            py::gil_scoped_release release;
            result = emkit::motif::discover(data, opts);
          }
          return to_python(emkit::io::motif_report(data, result, opts, meta_for(opts.em, seed)));
        },
        py::arg("sequences"), py::arg("width") = 8, py::arg("pseudocount") = 0.1,
        py::arg("restarts") = 10, py::arg("seed") = 0, py::arg("max_iterations") = 10000,
        py::arg("rel_tol") = 1e-8);

  // ---- deconvolution ----
  m.def("fit_deconv",
        [](std::uint64_t zero_port, std::vector<std::uint64_t> counts,
           const std::vector<std::vector<double>>& kernel, std::size_t max_iterations,
           double rel_tol) {
          const std::size_t sizes = kernel.empty() ? 0 : kernel.front().size();
          std::vector<double> values;
          for (const auto& row : kernel) {
            if (row.size() != sizes) throw py::value_error("kernel rows differ in length");
            values.insert(values.end(), row.begin(), row.end());
          }
          const emkit::deconv::BatteryMeasurement meas(
              zero_port, std::move(counts),
              emkit::deconv::PenetrationKernel(kernel.size(), sizes, std::move(values)));
          const auto config = make_config(max_iterations, rel_tol);
          const auto run = emkit::deconv::fit(meas, config);
          return to_python(emkit::io::deconv_report(meas, run, meta_for(config)));
        },
        py::arg("zero_port"), py::arg("counts"), py::arg("kernel"),
        py::arg("max_iterations") = 10000, py::arg("rel_tol") = 1e-8);

  // ---- file-level entry points, same reports as the CLI ----
  m.def("run",
        [](const std::string& subcommand, const std::vector<std::filesystem::path>& inputs,
           std::uint64_t seed, std::size_t restarts, std::size_t width, double pseudocount,
           std::size_t max_iterations, double rel_tol) {
          emkit::io::RunRequest req;
          if (subcommand == "abo") req.subcommand = emkit::io::Subcommand::abo;
          else if (subcommand == "ibd") req.subcommand = emkit::io::Subcommand::ibd;
          else if (subcommand == "motif") req.subcommand = emkit::io::Subcommand::motif;
          else if (subcommand == "deconv") req.subcommand = emkit::io::Subcommand::deconv;
          else throw py::value_error("unknown subcommand: " + subcommand);
          req.inputs = inputs;
          req.seed = seed;
          req.restarts = restarts;
          req.width = width;
          req.pseudocount = pseudocount;
          req.em = make_config(max_iterations, rel_tol);
          req.timestamp = false;
          return to_python(emkit::io::parse_and_dispatch(req));
        },
        py::arg("subcommand"), py::arg("inputs"), py::arg("seed") = 0, py::arg("restarts") = 10,
        py::arg("width") = 8, py::arg("pseudocount") = 0.1, py::arg("max_iterations") = 10000,
        py::arg("rel_tol") = 1e-8);
  m.def("histogram_csv",
        [](const py::object& report) {
          try {
            return emkit::io::emit_histogram_csv(from_python(report));
          } catch (const emkit::io::UsageError& e) {
            throw py::value_error(e.what());
          }
        },
        py::arg("report"));
}
