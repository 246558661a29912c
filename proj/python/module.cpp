#include <cmath>
#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <pblab/errors.hpp>
#include <pblab/experiments.hpp>
#include <pblab/io.hpp>
#include <pblab/prox.hpp>
#include <pblab/version.hpp>

namespace py = pybind11;
using namespace pblab;

namespace {

NormExponent exponent(double q) { return std::isinf(q) ? NormExponent::infinity() : NormExponent(q); }

EstimatorSpec catalog_spec(const std::string& label, const Matrix& X, double sigma, int group_size, int trend_order)
{
    return make_catalog_spec(label, static_cast<int>(X.cols()), static_cast<int>(X.rows()), sigma, group_size,
                             trend_order);
}

py::dict solution_dict(const Solution& s)
{
    py::dict d;
    d["beta"] = s.beta;
    d["fitted"] = s.fitted;
    d["objective"] = s.objective;
    d["kkt_residual"] = s.kkt_residual;
    d["iterations"] = s.iterations;
    d["converged"] = s.converged;
    d["method"] = s.method;
    return d;
}

} // namespace

PYBIND11_MODULE(_pblab, m)
{
    m.doc() = "Composite-norm penalized regression: solvers, oracle tuning and bound checks.";
    m.attr("__version__") = std::string(kVersion);

    // InvalidInput and its subclasses surface as ValueError.
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InvalidInput& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const io::json::exception& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });
    py::register_exception<NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);
    py::register_exception<AssumptionViolated>(m, "AssumptionViolated", PyExc_ValueError);

    m.def("soft_threshold", &prox::soft_threshold, py::arg("v"), py::arg("t"));
    m.def("group_soft_threshold", &prox::group_soft_threshold, py::arg("v"), py::arg("t"));
    m.def("slope_prox", &prox::slope_prox, py::arg("v"), py::arg("w"));
    m.def(
        "dual_norm", [](const Vector& v, double q) { return linalg::dual_norm(v, exponent(q)); }, py::arg("v"),
        py::arg("q"), "Dual of the l_q norm; q may be math.inf.");
    m.def(
        "pseudoinverse", [](const Matrix& a) { return linalg::pseudoinverse(a); }, py::arg("a"));
    m.def("fused_pinv", &linalg::fused_pinv, py::arg("p"));
    m.def("difference_matrix", &linalg::difference_matrix, py::arg("p"), py::arg("order") = 1);

    m.def(
        "catalog",
        [] {
            py::list out;
            for (const auto& e : catalog()) out.append(e.label);
            return out;
        },
        "Estimator labels.");

    m.def(
        "solve",
        [](const std::string& estimator, const Matrix& X, const Vector& Y, const Vector& lam, int group_size,
           int trend_order, double sigma, double tol) {
            Problem problem{X, Y, std::nullopt, 0, std::nullopt};
            EstimatorSpec spec = catalog_spec(estimator, X, sigma, group_size, trend_order);
            const auto k = static_cast<Eigen::Index>(spec.num_terms());
            const Vector l = lam.size() == 1 ? Vector::Constant(k, lam(0)) : lam;
            SolverConfig cfg;
            cfg.tol = tol;
            Solution s;
            {
                py::gil_scoped_release release;
                s = pblab::solve(spec.with_lambdas(l), problem, cfg);
            }
            return solution_dict(s);
        },
        py::arg("estimator"), py::arg("X"), py::arg("Y"), py::arg("lam"), py::arg("group_size") = 5,
        py::arg("trend_order") = 2, py::arg("sigma") = 1.0, py::arg("tol") = 1e-8,
        "Solve a catalog estimator (elastic-net excluded) at the given tuning.");

    m.def(
        "lambda_max",
        [](const std::string& estimator, const Matrix& X, const Vector& Y, int group_size, int trend_order) {
            Problem problem{X, Y, std::nullopt, 0, std::nullopt};
            return pblab::lambda_max(catalog_spec(estimator, X, 1.0, group_size, trend_order), problem);
        },
        py::arg("estimator"), py::arg("X"), py::arg("Y"), py::arg("group_size") = 5, py::arg("trend_order") = 2);

    m.def(
        "oracle_tuning",
        [](const std::string& estimator, const Matrix& X, const Vector& beta_star, const Vector& eps,
           std::optional<Vector> c, int group_size, int trend_order, double sigma) {
            ExperimentConfig cfg;
            cfg.estimator = estimator;
            cfg.n = static_cast<int>(X.rows());
            cfg.p = static_cast<int>(X.cols());
            cfg.group_size = group_size;
            cfg.trend_order = trend_order;
            cfg.noise.sigma = sigma;
            if (c) cfg.c = *c;
            const Problem problem = Problem::from_truth(X, beta_star, eps);
            const TunedFit fit = fit_oracle(cfg, problem);
            py::dict d;
            d["lambda"] = fit.tuning.lambda;
            d["dual_terms"] = fit.tuning.dual_terms;
            d["fixed_point_residual"] = fit.tuning.fixed_point_residual;
            d["iterations"] = fit.tuning.iterations;
            d["lambda2"] = fit.lambda2;
            d["solution"] = solution_dict(fit.solution);
            return d;
        },
        py::arg("estimator"), py::arg("X"), py::arg("beta_star"), py::arg("eps"), py::arg("c") = py::none(),
        py::arg("group_size") = 5, py::arg("trend_order") = 2, py::arg("sigma") = 1.0);

    m.def(
        "run_trial",
        [](const std::string& config_json, int trial) {
            const ExperimentConfig cfg = io::config_from_json(io::json::parse(config_json));
            TrialRecord r;
            {
                py::gil_scoped_release release;
                r = pblab::run_trial(cfg, trial);
            }
            py::dict d;
            d["trial"] = r.trial;
            d["estimator"] = r.estimator;
            d["lambda"] = r.lambda;
            d["lhs"] = r.lhs;
            d["rhs_special1"] = r.rhs_special1;
            d["rhs_special2"] = r.rhs_special2;
            d["rhs_theorem_u05"] = r.rhs_theorem_u05;
            d["holds_special2"] = r.holds_special2;
            d["kkt_residual"] = r.kkt_residual;
            d["fp_residual"] = r.fp_residual;
            d["failed"] = r.failed;
            d["error"] = r.error;
            return d;
        },
        py::arg("config_json"), py::arg("trial") = 0, "One Monte Carlo trial from a JSON configuration.");
}
