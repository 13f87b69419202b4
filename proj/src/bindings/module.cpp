// Python surface of the laboratory: cone calculus, the ray detector, the
// conic-program solver, and the reproducible sweep harness.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>

#include "conelab/cones.hpp"
#include "conelab/convex_sets.hpp"
#include "conelab/intersect.hpp"
#include "conelab/phase.hpp"
#include "conelab/solver.hpp"
#include "conelab/stats.hpp"
#include "conelab/version.hpp"

namespace py = pybind11;
using namespace conelab;

namespace {

// Value-type handle around the immutable cone graph; keeps shared_ptr<const>
// ownership out of the binding layer.
struct PyCone {
  ConePtr p;
  const Cone& ref() const {
    if (!p) throw std::invalid_argument("cone handle is empty");
    return *p;
  }
};

PyCone py_parse_cone(const std::string& spec, std::uint64_t seed,
                     const std::map<std::string, int>& dims) {
  std::vector<DimBinding> bindings;
  bindings.reserve(dims.size());
  for (const auto& [k, v] : dims) bindings.push_back({k, v});
  RngStream basis = derive_stream(seed, tags::kConeBasis, 0);
  return PyCone{parse_cone(spec, &basis, bindings)};
}

DetectOpts detect_opts(int starts, int max_iters, double rho_tol,
                       double dist_tol) {
  DetectOpts o;
  o.starts = starts;
  o.max_iters = max_iters;
  o.rho_tol = rho_tol;
  o.dist_tol = dist_tol;
  return o;
}

py::dict verdict_dict(const IntersectionVerdict& v) {
  py::dict d;
  d["nontrivial"] = v.nontrivial;
  d["rho"] = v.rho;
  d["iterations"] = v.iterations;
  d["exact"] = v.exact;
  if (v.nontrivial) {
    d["witness"] = v.witness;
  } else {
    d["witness"] = py::none();
  }
  return d;
}

py::dict estimate_dict(const EstimateCI& e) {
  py::dict d;
  d["mean"] = e.mean;
  d["se"] = e.se;
  d["lo"] = e.lo;
  d["hi"] = e.hi;
  d["n"] = e.n;
  return d;
}

}  // namespace

PYBIND11_MODULE(_conelab, m) {
  m.doc() = "Numerical laboratory for convex cone geometry";

  py::class_<PyCone>(m, "Cone")
      .def_property_readonly("dim", [](const PyCone& c) { return c.ref().dim(); })
      .def("describe", [](const PyCone& c) { return c.ref().describe(); })
      .def("project",
           [](const PyCone& c, const Vec& v) { return c.ref().project(v); },
           py::arg("v"))
      .def("polar", [](const PyCone& c) { return PyCone{c.ref().polar()}; })
      .def("contains",
           [](const PyCone& c, const Vec& v, double tol) {
             return cone_contains(c.ref(), v, tol);
           },
           py::arg("v"), py::arg("tol") = 1e-9)
      .def("stat_dim_closed",
           [](const PyCone& c) -> std::optional<double> {
             return stat_dim_closed(c.ref());
           })
      .def("__repr__", [](const PyCone& c) {
        return "<Cone " + c.ref().describe() + ">";
      });

  m.def("parse_cone", &py_parse_cone, py::arg("spec"), py::arg("seed") = 0,
        py::arg("dims") = std::map<std::string, int>{},
        "Build a cone from its textual spec; random bases draw from `seed`.");

  m.def(
      "moreau",
      [](const PyCone& c, const Vec& v) {
        auto parts = moreau_decompose(c.ref(), v);
        return py::make_tuple(parts.in_cone, parts.in_polar);
      },
      py::arg("cone"), py::arg("v"),
      "Split v into its cone and polar-cone projections.");

  m.def(
      "stat_dim_mc",
      [](const PyCone& c, long long trials, std::uint64_t seed) {
        return estimate_dict(
            stat_dim_mc(c.ref(), trials, derive_stream(seed, tags::kStatDim, 0)));
      },
      py::arg("cone"), py::arg("trials") = 20000, py::arg("seed") = 1);

  m.def(
      "width_mc",
      [](const PyCone& c, const std::string& cap, long long trials,
         std::uint64_t seed) {
        Cap cc;
        if (cap == "ball") {
          cc = Cap::kBall;
        } else if (cap == "sphere") {
          cc = Cap::kSphere;
        } else {
          throw std::invalid_argument("cap must be 'ball' or 'sphere'");
        }
        return estimate_dict(gaussian_width_mc(
            c.ref(), cc, trials, derive_stream(seed, tags::kWidth, 0)));
      },
      py::arg("cone"), py::arg("cap") = "ball", py::arg("trials") = 20000,
      py::arg("seed") = 1);

  m.def(
      "p_inf",
      [](double a1, double a2, double a3) {
        return p_inf(a1, a2, a3).to_double_or_neg_inf();
      },
      py::arg("a1"), py::arg("a2"), py::arg("a3"),
      "Halfspace-restricted cap infimum; -inf when divergent.");

  m.def(
      "q_inf",
      [](double a1, double a2, std::optional<double> R) {
        return q_inf(a1, a2, R).to_double_or_neg_inf();
      },
      py::arg("a1"), py::arg("a2"), py::arg("R") = std::nullopt,
      "Radius-R restricted infimum; -inf when divergent.");

  m.def(
      "detect_intersection",
      [](const PyCone& a, const PyCone& b, std::uint64_t seed, int starts,
         int max_iters, double rho_tol, double dist_tol) {
        if (a.ref().dim() != b.ref().dim())
          throw std::invalid_argument("cones live in different dimensions");
        RngStream st = derive_stream(seed, tags::kIntersect, 0);
        auto v = detect_nontrivial_intersection(
            *set_from_cone(a.p), *set_from_cone(b.p), a.ref().dim(),
            detect_opts(starts, max_iters, rho_tol, dist_tol), st);
        return verdict_dict(v);
      },
      py::arg("cone_a"), py::arg("cone_b"), py::arg("seed") = 1,
      py::arg("starts") = 16, py::arg("max_iters") = 400,
      py::arg("rho_tol") = 1e-4, py::arg("dist_tol") = 1e-6,
      "Decide whether two cones share a nonzero ray.");

  m.def(
      "solve_cp",
      [](const Vec& x, const Mat& G, const Vec& b, const PyCone& K,
         std::uint64_t seed) {
        Vec xu = x;
        double nn = xu.norm();
        if (nn <= 0) throw std::invalid_argument("x must be nonzero");
        xu /= nn;
        RngStream st = derive_stream(seed, tags::kConicProgram, 0);
        CpOutcome out = solve_conic_program(xu, G, b, K.p, st);
        py::dict d;
        d["kind"] = out.kind == CpKind::kInfeasible ? "infeasible"
                    : out.kind == CpKind::kBounded  ? "bounded"
                                                    : "unbounded";
        d["value"] = out.value ? py::cast(*out.value) : py::none();
        d["certificate"] =
            out.certificate ? py::cast(*out.certificate) : py::none();
        d["suspected_unbounded"] = out.suspected_unbounded;
        d["converged"] = out.converged;
        return d;
      },
      py::arg("x"), py::arg("G"), py::arg("b"), py::arg("cone"),
      py::arg("seed") = 1,
      "sup <x,mu> s.t. G mu = b, mu in K; objective is normalized first.");

  m.def(
      "logistic_mle_exists",
      [](const Mat& X, const Vec& y, const PyCone& K, std::uint64_t seed) {
        RngStream st = derive_stream(seed, tags::kLogistic, 0);
        auto r = logistic_mle_exists(X, y, K.p, st);
        py::dict d;
        d["exists"] = r.exists;
        d["detector_converged"] = r.detector_converged;
        d["rho"] = r.rho;
        return d;
      },
      py::arg("X"), py::arg("y"), py::arg("cone"), py::arg("seed") = 1,
      "Existence of the cone-constrained logistic MLE for labels y in {-1,+1}.");

  m.def(
      "run_phase",
      [](const std::string& config_json, int workers) {
        ExperimentConfig cfg = parse_experiment_config(config_json);
        PhaseResult res = run_phase(cfg, workers);
        return to_csv(res);
      },
      py::arg("config_json"), py::arg("workers") = 0,
      py::call_guard<py::gil_scoped_release>(),
      "Run a sweep from a JSON config and return the CSV text.");

  m.def("version", [] { return std::string(kVersion); });
  m.def("rng_id", [] { return std::string(kRngAlgorithmId); });
}
