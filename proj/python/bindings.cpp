#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mmorder/cli.hpp"
#include "mmorder/error.hpp"
#include "mmorder/families.hpp"
#include "mmorder/mc.hpp"
#include "mmorder/moments.hpp"
#include "mmorder/orders.hpp"
#include "mmorder/random.hpp"
#include "mmorder/report_json.hpp"
#include "mmorder/specfun.hpp"

namespace py = pybind11;
using namespace mmorder;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::tuple<double, double> interval_tuple(const Interval& iv) { return {iv.lower, iv.upper}; }

// Thin handle so Python sees one object per catalog entry.
struct PyFamily {
  Builtin builtin;

  const Family& fam() const { return *builtin.family; }
};

PyFamily family_from(const std::string& name, const FixedParams& params) {
  return PyFamily{make_builtin(name, params)};
}

std::vector<double> draw(const PyFamily& f, double theta, std::size_t n, std::uint64_t seed) {
  f.fam().check_theta(theta);
  RandomStream rng(seed);
  std::vector<double> out(n);
  for (double& x : out) x = f.fam().sample(theta, rng);
  return out;
}

py::dict estimate_dict(const Estimate& e) {
  py::dict d;
  d["theta_hat"] = e.theta_hat;
  d["gbar"] = e.gbar;
  d["iterations"] = e.iterations;
  d["residual"] = e.residual;
  return d;
}

const ExpFamily& exp_form(const PyFamily& f) {
  if (!f.builtin.exp) throw DomainError(f.fam().name() + " has no exponential-family form");
  return *f.builtin.exp;
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"mmorder"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Moment estimators and stochastic order checks";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto domain = py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<CatalogError>(m, "CatalogError", domain.ptr());
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  auto sf = m.def_submodule("specfun");
  sf.def("log_gamma", &specfun::log_gamma);
  sf.def("digamma", &specfun::digamma);
  sf.def("trigamma", &specfun::trigamma);
  sf.def("inverse_digamma", &specfun::inverse_digamma);
  sf.def("expint_ei", &specfun::expint_ei);
  sf.def("gumbel_abs_mean", &specfun::gumbel_abs_mean);
  sf.def("gumbel_abs_variance", &specfun::gumbel_abs_variance);
  sf.attr("euler_gamma") = specfun::euler_gamma;

  m.def("catalog_names", &catalog_names);

  py::class_<PyFamily>(m, "Family")
      .def(py::init(&family_from), py::arg("name"), py::arg("params") = FixedParams{})
      .def_property_readonly("name", [](const PyFamily& f) { return f.fam().name(); })
      .def_property_readonly("params", [](const PyFamily& f) { return f.fam().fixed_params(); })
      .def_property_readonly("param_domain",
                             [](const PyFamily& f) { return interval_tuple(f.fam().param_domain()); })
      .def_property_readonly("is_exp_family", [](const PyFamily& f) { return f.builtin.exp.has_value(); })
      .def("support",
           [](const PyFamily& f, double theta) {
             const Support s = f.fam().support(theta);
             return std::make_tuple(s.lower, s.upper);
           })
      .def("density", [](const PyFamily& f, double x, double theta) { return f.fam().density(x, theta); })
      .def("log_density",
           [](const PyFamily& f, double x, double theta) { return f.fam().log_density(x, theta); })
      .def("cdf", [](const PyFamily& f, double x, double theta) { return f.fam().cdf(x, theta); })
      .def("quantile", [](const PyFamily& f, double u, double theta) { return f.fam().quantile(u, theta); })
      .def("sample", &draw, py::arg("theta"), py::arg("n"), py::arg("seed") = mc::default_seed)
      .def("__repr__", [](const PyFamily& f) { return "<Family " + f.fam().name() + ">"; });

  py::class_<MomentSpec>(m, "MomentSpec")
      .def(py::init([](const PyFamily& f, const std::string& selector) {
             return make_builtin_spec(f.builtin, selector);
           }),
           py::arg("family"), py::arg("selector") = "mean")
      .def_property_readonly("g_name", &MomentSpec::g_name)
      .def_property_readonly("direction",
                             [](const MomentSpec& s) { return std::string(to_string(s.direction())); })
      .def_property_readonly("m_range", [](const MomentSpec& s) { return interval_tuple(s.m_range()); })
      .def_property_readonly("has_closed_form", &MomentSpec::has_closed_form)
      .def("g", &MomentSpec::g)
      .def("m", &MomentSpec::evaluate, py::arg("theta"))
      .def("invert", &invert_moment, py::arg("t"))
      .def("estimate",
           [](const MomentSpec& s, const std::vector<double>& sample) {
             return estimate_dict(estimate(s, sample));
           },
           py::arg("sample"));

  m.def("mle_residual",
        [](const PyFamily& f, const std::vector<double>& sample, double theta) {
          return mle_residual(exp_form(f), sample, theta);
        },
        py::arg("family"), py::arg("sample"), py::arg("theta"));
  m.def("second_order_check",
        [](const PyFamily& f, const std::vector<double>& sample, double theta) {
          return second_order_check(exp_form(f), sample, theta);
        },
        py::arg("family"), py::arg("sample"), py::arg("theta_hat"));
  m.def("exp_family_mean_T",
        [](const PyFamily& f, double theta) { return exp_family_mean_T(exp_form(f), theta); });
  m.def("exp_family_var_T",
        [](const PyFamily& f, double theta) { return exp_family_var_T(exp_form(f), theta); });

  m.def("check_st",
        [](const ScalarFn& f, const ScalarFn& g, std::vector<double> grid, double tol) {
          return to_python(to_json(check_st(f, g, Grid(std::move(grid)), tol)));
        },
        py::arg("cdf_f"), py::arg("cdf_g"), py::arg("grid"), py::arg("tol") = default_order_tolerance);
  m.def("check_lr",
        [](const ScalarFn& f, const ScalarFn& g, std::vector<double> grid, double tol) {
          return to_python(to_json(check_lr(f, g, Grid(std::move(grid)), tol)));
        },
        py::arg("density_f"), py::arg("density_g"), py::arg("grid"),
        py::arg("tol") = default_order_tolerance);
  m.def("check_disp",
        [](const ScalarFn& f, const ScalarFn& g, std::vector<double> alphas, double tol) {
          return to_python(to_json(check_disp(f, g, Grid(std::move(alphas)), tol)));
        },
        py::arg("quantile_f"), py::arg("quantile_g"), py::arg("alphas"),
        py::arg("tol") = default_order_tolerance);
  m.def("check_tp2",
        [](const PyFamily& f, std::vector<double> xs, std::vector<double> thetas, double tol) {
          return to_python(to_json(check_tp2_mixed(f.fam(), Grid(std::move(xs)), Grid(std::move(thetas)), tol)));
        },
        py::arg("family"), py::arg("x_grid"), py::arg("theta_grid"),
        py::arg("tol") = default_order_tolerance);
  m.def("check_tpr_minors",
        [](const KernelFn& k, std::vector<double> xs, std::vector<double> ys, int r, double tol) {
          return to_python(to_json(check_tpr_minors(k, Grid(std::move(xs)), Grid(std::move(ys)), r, tol)));
        },
        py::arg("kernel"), py::arg("x_grid"), py::arg("y_grid"), py::arg("r"),
        py::arg("tol") = default_order_tolerance);
  m.def("check_logconcave",
        [](const ScalarFn& f, std::vector<double> grid, double tol) {
          return to_python(to_json(check_logconcave(f, Grid(std::move(grid)), tol)));
        },
        py::arg("density"), py::arg("grid"), py::arg("tol") = default_order_tolerance);
  m.def("sign_changes", [](const std::vector<double>& v) { return sign_changes(v); });

  m.def("spacings", [](const std::vector<double>& x) { return mc::spacings(x); });
  m.def("variance_from_spacings", [](const std::vector<double>& u) { return mc::variance_from_spacings(u); });
  m.def("scale_estimate",
        [](const std::vector<double>& x, double constant, const std::string& mode, int k) {
          mc::ScaleMode sm;
          if (mode == "kth_moment") {
            sm = mc::ScaleMode::kth_moment;
          } else if (mode == "sample_sd") {
            sm = mc::ScaleMode::sample_sd;
          } else {
            throw InvalidInput("scale_estimate: mode must be kth_moment or sample_sd");
          }
          const mc::ScaleEstimate e = mc::scale_estimators(x, constant, sm, k);
          return py::make_tuple(e.value, e.degenerate);
        },
        py::arg("sample"), py::arg("constant"), py::arg("mode") = "kth_moment", py::arg("k") = 1);

  m.def("empirical_st",
        [](const std::vector<double>& a, const std::vector<double>& b, double confidence) {
          return to_python(to_json(mc::empirical_st(a, b, confidence)));
        },
        py::arg("samples1"), py::arg("samples2"), py::arg("confidence") = mc::default_confidence);
  m.def("empirical_lr",
        [](const std::vector<double>& a, const std::vector<double>& b, int bins) {
          return to_python(to_json(mc::empirical_lr(a, b, bins)));
        },
        py::arg("samples1"), py::arg("samples2"), py::arg("bins") = mc::default_bins);

  m.def("run_cli", &run_cli, py::arg("args"),
        "Run the command-line tool in process; returns (exit_code, stdout, stderr).");
}
