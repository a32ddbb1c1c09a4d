#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "surf/dist.hpp"
#include "surf/errors.hpp"
#include "surf/exact.hpp"
#include "surf/forest.hpp"
#include "surf/harness.hpp"
#include "surf/oracle.hpp"

namespace py = pybind11;

namespace {

py::dict stats_dict(const surf::ForestStats& st) {
  py::dict d;
  d["n"] = st.horizon;
  d["M"] = st.num_trees;
  d["O"] = st.root_hits;
  d["H"] = st.height;
  d["H0"] = st.height_of_zero;
  d["L"] = st.leaves_of_zero;
  d["S0"] = st.size_of_zero();
  d["N"] = st.last_renewal;
  d["N_1"] = st.renewal_visits;
  d["max_degree_positive"] = st.max_degree_positive;
  d["max_degree_root"] = st.max_degree_root;
  d["tree_sizes"] = st.tree_sizes;
  d["root_degrees"] = st.root_degrees;
  d["profile_of_zero"] = st.profile_of_zero;
  return d;
}

// JSON documents cross the boundary as text and are decoded by the package.
std::string dump(const nlohmann::ordered_json& j) { return j.dump(); }

}  // namespace

PYBIND11_MODULE(_surf, m) {
  m.doc() = "Subtractive random forest core";
  m.attr("__version__") = std::string(surf::tool_version());

  py::register_exception<surf::SpecError>(m, "SpecError", PyExc_ValueError);
  py::register_exception<surf::BudgetError>(m, "BudgetError", PyExc_RuntimeError);

  py::class_<surf::StepDistribution>(m, "StepDistribution")
      .def(py::init([](const std::string& spec) { return surf::StepDistribution::parse(spec); }), py::arg("spec"))
      .def_property_readonly("spec", &surf::StepDistribution::spec)
      .def("pmf", &surf::StepDistribution::pmf, py::arg("n"))
      .def("tail", &surf::StepDistribution::tail, py::arg("n"))
      .def("truncated_mean", &surf::StepDistribution::truncated_mean, py::arg("n"))
      .def("mean_info",
           [](const surf::StepDistribution& d) {
             const auto info = d.mean_info();
             py::dict out;
             out["finite"] = info.finite;
             out["value"] = info.value ? py::cast(*info.value) : py::none();
             out["second_moment_finite"] = info.second_moment_finite;
             return out;
           })
      .def(
          "sample",
          [](const surf::StepDistribution& d, std::uint64_t count, std::uint64_t seed) {
            std::vector<std::uint64_t> out(count);
            surf::Rng rng(seed);
            d.sample_into(rng, out);
            return out;
          },
          py::arg("count"), py::arg("seed"))
      .def("__repr__", [](const surf::StepDistribution& d) { return "StepDistribution('" + d.spec() + "')"; });

  m.def(
      "simulate",
      [](const std::string& spec, std::uint64_t n, std::uint64_t seed) {
        const auto f = surf::Forest::build(surf::StepDistribution::parse(spec), n, seed);
        return stats_dict(surf::compute_stats(f));
      },
      py::arg("spec"), py::arg("n"), py::arg("seed") = surf::kDefaultSeed);
  m.def(
      "stats_from_steps", [](std::vector<std::uint64_t> steps) { return stats_dict(surf::compute_stats(surf::Forest(std::move(steps)))); },
      py::arg("steps"));
  m.def(
      "colors", [](std::vector<std::uint64_t> steps) {
        const surf::Forest f(std::move(steps));
        return std::vector<std::int64_t>(f.colors().begin(), f.colors().end());
      },
      py::arg("steps"));

  m.def(
      "renewal_sequence",
      [](const std::string& spec, std::uint64_t n) {
        return surf::exact::renewal_sequence(surf::StepDistribution::parse(spec), n);
      },
      py::arg("spec"), py::arg("n"));
  m.def(
      "expected_size_series",
      [](const std::string& spec, std::uint64_t n) {
        return surf::exact::expected_size_series(surf::StepDistribution::parse(spec), n).rhat;
      },
      py::arg("spec"), py::arg("n"));
  m.def(
      "expected_trees",
      [](const std::string& spec, std::uint64_t n, double epsilon) {
        const auto t = surf::exact::expected_trees(surf::StepDistribution::parse(spec), n, epsilon);
        py::dict out;
        out["EO"] = t.eo;
        out["EM"] = t.em;
        out["EM_error"] = t.em_error;
        out["VarO"] = t.var_o;
        out["converged"] = t.converged;
        return out;
      },
      py::arg("spec"), py::arg("n"), py::arg("epsilon") = surf::kDefaultEpsilon);
  m.def(
      "expected_leaves",
      [](const std::string& spec, std::uint64_t n) {
        return surf::exact::expected_leaves(surf::StepDistribution::parse(spec), n).value;
      },
      py::arg("spec"), py::arg("n"));
  m.def(
      "survival_probability",
      [](const std::string& spec) { return surf::exact::survival_probability(surf::StepDistribution::parse(spec)); },
      py::arg("spec"));

  m.def(
      "_enumerate_exact_json",
      [](const std::string& spec, std::uint64_t n, std::uint64_t budget) {
        return dump(surf::oracle::to_json(surf::oracle::enumerate_exact(surf::StepDistribution::parse(spec), n, budget)));
      },
      py::arg("spec"), py::arg("n"), py::arg("budget") = surf::oracle::kDefaultBudget);
  m.def(
      "_verify_json",
      [](const std::string& spec, std::vector<std::uint64_t> sizes, std::uint64_t seed, std::uint64_t reps,
         unsigned threads) {
        py::gil_scoped_release release;
        return dump(surf::to_json(surf::verify_suite(surf::StepDistribution::parse(spec), std::move(sizes), seed, reps, threads)));
      },
      py::arg("spec"), py::arg("sizes"), py::arg("seed") = surf::kDefaultSeed, py::arg("reps") = 1000,
      py::arg("threads") = 0);
}
