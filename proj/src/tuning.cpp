#include <pblab/tuning.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include <Eigen/QR>
#include <Eigen/SVD>

#include <pblab/errors.hpp>
#include <pblab/prox.hpp>

namespace pblab {
namespace {

/// 2 g'(||Y - X beta||^2) (c .* d)
Vector tuning_map(const EstimatorSpec& spec, const Problem& problem, const Vector& c, const Vector& d,
                  const Vector& beta)
{
    const double rn = (problem.Y - problem.X * beta).norm();
    if (spec.link.kind() == LinkKind::SquareRoot && rn <= 1e-12 * problem.Y.norm()) {
        throw DegenerateInput("residual vanished inside the tuning fixed point");
    }
    return 2.0 * spec.link.derivative(rn * rn) * c.cwiseProduct(d);
}

double relative_gap(const Vector& lambda, const Vector& mapped)
{
    return (lambda - mapped).cwiseAbs().maxCoeff() / lambda.cwiseAbs().maxCoeff();
}

/// Dual-norm term for a score vector v = X^T r under the estimator's penalty.
Vector dual_terms_of_score(const EstimatorSpec& spec, const Vector& v)
{
    if (spec.is_slope()) return Vector::Constant(1, prox::sorted_l1_dual_norm(v, spec.slope().weights));
    const auto& pen = spec.composite();
    Vector d(static_cast<Eigen::Index>(pen.size()));
    for (std::size_t j = 0; j < pen.size(); ++j) {
        const auto& term = pen.term(j);
        const Vector w = pen.pinv(j).transpose() * (term.P.transpose() * v);
        d(static_cast<Eigen::Index>(j)) = linalg::dual_norm(w, term.q);
    }
    return d;
}

} // namespace

Vector dual_noise_terms(const EstimatorSpec& spec, const Matrix& X, const Vector& eps)
{
    if (X.cols() != spec.dim()) throw DimensionMismatch("design columns differ from penalty dimension");
    if (X.rows() != eps.size()) throw DimensionMismatch("noise length differs from design rows");
    const Vector d = dual_terms_of_score(spec, X.transpose() * eps);
    for (Eigen::Index j = 0; j < d.size(); ++j) {
        if (!(d(j) > 0.0)) {
            throw AssumptionViolated("noise correlation term " + std::to_string(j) + " vanishes");
        }
    }
    return d;
}

double fixed_point_residual(const EstimatorSpec& spec, const Problem& problem, const Vector& lambda,
                            const Vector& c, const Vector& dual_terms, const Vector& beta)
{
    return relative_gap(lambda, tuning_map(spec, problem, c, dual_terms, beta));
}

OracleTuning oracle_lambda(const EstimatorSpec& spec, const Problem& problem, const Vector& c,
                           const SolverConfig& cfg, const FixedPointConfig& fp)
{
    const auto& truth = problem.require_truth();
    const auto k = static_cast<Eigen::Index>(spec.num_terms());
    if (c.size() != k) throw DimensionMismatch("expected " + std::to_string(k) + " constants c_j");
    for (Eigen::Index j = 0; j < k; ++j) {
        if (!(c(j) > 0.0) || !std::isfinite(c(j))) throw InvalidInput("constants c_j must be positive");
    }
    if (!(fp.tol > 0.0) || fp.max_iter < 1 || !(fp.damping > 0.0 && fp.damping <= 1.0)) {
        throw InvalidInput("invalid fixed-point settings");
    }

    OracleTuning out;
    out.c = c;
    out.dual_terms = dual_noise_terms(spec, problem.X, truth.eps);

    if (spec.link.kind() == LinkKind::Identity) {
        out.lambda = 2.0 * c.cwiseProduct(out.dual_terms);
        out.trace.push_back(out.lambda);
        return out;
    }

    const double e2 = truth.eps.squaredNorm();
    Vector lambda = 2.0 * spec.link.derivative(e2) * c.cwiseProduct(out.dual_terms);
    out.trace.push_back(lambda);

    std::optional<Vector> warm;
    // An interpolating fit (zero residual) sends the map to +infinity; that
    // case comes back as an empty optional.
    auto evaluate = [&](const Vector& lam) -> std::optional<std::pair<Solution, Vector>> {
        Solution sol;
        try {
            sol = solve(spec.with_lambdas(lam), problem, cfg, warm);
        } catch (const DegenerateInput&) {
            return std::nullopt;
        }
        if (!sol.converged) {
            throw NonConvergence("solver did not converge inside the tuning fixed point", out.trace);
        }
        warm = sol.beta;
        Vector mapped = tuning_map(spec, problem, c, out.dual_terms, sol.beta);
        return std::pair<Solution, Vector>{std::move(sol), std::move(mapped)};
    };
    auto accept = [&](const Vector& lam, Solution sol, double residual, int iters) {
        out.lambda = lam;
        out.fixed_point_residual = residual;
        out.iterations = iters;
        out.solution = std::move(sol);
        return out;
    };

    double best = std::numeric_limits<double>::infinity();
    int stall = 0;
    for (int it = 0; it < fp.max_iter; ++it) {
        auto step = evaluate(lambda);
        if (!step) {
            lambda *= 2.0;
            out.trace.push_back(lambda);
            continue;
        }
        auto& [sol, mapped] = *step;
        const double res = relative_gap(lambda, mapped);
        if (res <= fp.tol) return accept(lambda, std::move(sol), res, it);
        if (res < best) {
            best = res;
            stall = 0;
        } else if (++stall >= fp.stall_window) {
            break;
        }
        lambda = (1.0 - fp.damping) * lambda + fp.damping * mapped;
        out.trace.push_back(lambda);
    }
    if (stall < fp.stall_window) throw NonConvergence("tuning fixed point did not converge", out.trace);

    // Every iterate is a multiple t of u = c .* d, and t - T(t) is increasing
    // because ||r_lambda|| grows with lambda: bisect on t.
    out.bisection = true;
    const Vector u = c.cwiseProduct(out.dual_terms);
    int iters = static_cast<int>(out.trace.size());
    auto phi = [&](double t) {
        auto step = evaluate(t * u);
        if (!step) return std::pair<Solution, double>{Solution{}, -std::numeric_limits<double>::infinity()};
        return std::pair<Solution, double>{std::move(step->first), t - step->second(0) / u(0)};
    };
    double lo = lambda(0) / u(0), hi = lo;
    double f_lo = phi(lo).second;
    double f_hi = f_lo;
    for (int expand = 0; f_lo > 0.0 && expand < 200; ++expand, ++iters) {
        hi = lo;
        f_hi = f_lo;
        lo *= 0.5;
        f_lo = phi(lo).second;
    }
    for (int expand = 0; f_hi < 0.0 && expand < 200; ++expand, ++iters) {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = phi(hi).second;
    }
    if (!(f_lo <= 0.0 && f_hi >= 0.0)) throw NonConvergence("could not bracket the tuning fixed point", out.trace);
    for (int it = 0; it < 200; ++it, ++iters) {
        const double mid = 0.5 * (lo + hi);
        auto [sol, f] = phi(mid);
        out.trace.push_back(mid * u);
        const double res = std::abs(f) / mid;
        if (res <= fp.tol) return accept(mid * u, std::move(sol), res, iters);
        (f < 0.0 ? lo : hi) = mid;
    }
    throw NonConvergence("tuning bisection did not converge", out.trace);
}

Vector lambda_max(const EstimatorSpec& spec, const Problem& problem)
{
    problem.validate();
    check_compatible(spec, problem);
    const auto k = static_cast<Eigen::Index>(spec.num_terms());
    const Matrix& X = problem.X;

    if (spec.is_slope()) {
        const double w = 2.0 * spec.link.derivative(problem.Y.squaredNorm());
        const double m = w * prox::sorted_l1_dual_norm(X.transpose() * problem.Y, spec.slope().weights);
        return Vector::Constant(1, std::max(m, 1.0));
    }

    const auto& pen = spec.composite();
    if (pen.kernel_deficient()) {
        if (pen.size() != 1) throw InvalidInput("lambda_max: several terms with unpenalized directions");
        const auto& term = pen.term(0);
        // least-squares fit over Ker(M)
        Eigen::JacobiSVD<Matrix> svd(term.M, Eigen::ComputeFullV);
        const int rank = linalg::numerical_rank(term.M, linalg::kKernelRankTol);
        const Matrix N = svd.matrixV().rightCols(term.M.cols() - rank);
        const Matrix XN = X * N;
        const Vector theta = XN.completeOrthogonalDecomposition().solve(problem.Y);
        const Vector r0 = problem.Y - XN * theta;
        const double rn = r0.norm();
        if (spec.link.kind() == LinkKind::SquareRoot && rn <= 1e-12 * problem.Y.norm()) {
            throw DegenerateInput("response lies in the unpenalized subspace");
        }
        const double w = 2.0 * spec.link.derivative(rn * rn);
        const Vector v = pen.pinv(0).transpose() * (X.transpose() * r0);
        return Vector::Constant(1, std::max(w * linalg::dual_norm(v, term.q), 1.0));
    }

    const double w = 2.0 * spec.link.derivative(problem.Y.squaredNorm());
    const Vector xty = X.transpose() * problem.Y;
    double m = 0.0;
    for (std::size_t j = 0; j < pen.size(); ++j) {
        const auto& term = pen.term(j);
        Vector v;
        if (linalg::is_selector_diagonal(term.M)) {
            v = Vector::Zero(xty.size());
            for (int r : pen.active_rows(j)) v(r) = xty(r);
        } else {
            v = pen.pinv(j).transpose() * (term.P.transpose() * xty);
        }
        m = std::max(m, w * linalg::dual_norm(v, term.q));
    }
    return Vector::Constant(k, std::max(m, 1.0));
}

double elastic_net_lambda2(const Matrix& X, const Vector& eps, const Vector& beta_star)
{
    if (X.cols() != beta_star.size() || X.rows() != eps.size()) {
        throw DimensionMismatch("elastic_net_lambda2: inconsistent dimensions");
    }
    const Vector v = X.transpose() * eps;
    auto f = [&](double l2) { return (v - l2 * beta_star).cwiseAbs().maxCoeff(); };
    double bmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < beta_star.size(); ++i) {
        if (beta_star(i) != 0.0) bmin = std::min(bmin, std::abs(beta_star(i)));
    }
    if (!std::isfinite(bmin)) return 0.0;
    // f is convex and piecewise linear; beyond hi it only increases
    double lo = 0.0, hi = 2.0 * v.cwiseAbs().maxCoeff() / bmin;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    double fa = f(a), fb = f(b);
    while (hi - lo > 1e-13 * std::max(1.0, hi)) {
        if (fa <= fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    const double mid = 0.5 * (lo + hi);
    return f(0.0) <= f(mid) ? 0.0 : mid;
}

} // namespace pblab
