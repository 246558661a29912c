#include <pblab/solvers.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <pblab/errors.hpp>
#include <pblab/prox.hpp>
#include <pblab/qp.hpp>

namespace pblab {
namespace {

constexpr double kZeroRel = 1e-11;
constexpr double kDegenerateRel = 1e-12;

double zero_threshold(const Vector& v)
{
    const double top = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    return kZeroRel * std::max(1.0, top);
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void require_nondegenerate(const Problem& problem, double residual_norm)
{
    if (residual_norm <= kDegenerateRel * problem.Y.norm()) {
        throw DegenerateInput("residual vanished under the square-root link");
    }
}

/// -2 g'(||r||^2) X^T r for a known residual r.
Vector gradient_from_residual(const EstimatorSpec& spec, const Problem& problem, const Vector& r)
{
    if (spec.link.kind() == LinkKind::SquareRoot) require_nondegenerate(problem, r.norm());
    const double w = spec.link.derivative(r.squaredNorm());
    return -2.0 * w * (problem.X.transpose() * r);
}

// ---------------------------------------------------------------- KKT

double kkt_separable(const CompositePenalty& pen, const Vector& grad, const Vector& beta)
{
    double acc = 0.0;
    for (std::size_t j = 0; j < pen.size(); ++j) {
        const auto& support = pen.supports()[j];
        const double lam = pen.term(j).lambda;
        if (pen.term(j).q.value() == 1.0) {
            for (int i : support) {
                const double b = beta(i);
                const double d = std::abs(b) > kZeroRel * std::max(1.0, std::abs(b))
                                     ? grad(i) + lam * sign(b)
                                     : std::max(std::abs(grad(i)) - lam, 0.0);
                acc += d * d;
            }
        } else {
            Vector b(support.size()), g(support.size());
            for (std::size_t k = 0; k < support.size(); ++k) {
                b(static_cast<Eigen::Index>(k)) = beta(support[k]);
                g(static_cast<Eigen::Index>(k)) = grad(support[k]);
            }
            if (b.cwiseAbs().maxCoeff() > zero_threshold(b)) {
                acc += (g + lam * b / b.norm()).squaredNorm();
            } else {
                const double d = std::max(g.norm() - lam, 0.0);
                acc += d * d;
            }
        }
    }
    return std::sqrt(acc);
}

double kkt_composite(const CompositePenalty& pen, const Vector& grad, const Vector& beta)
{
    const Eigen::Index p = beta.size();
    Vector h = grad;
    std::vector<Vector> cols;
    std::vector<qp::Block> blocks;
    Eigen::Index offset = 0;

    for (std::size_t j = 0; j < pen.size(); ++j) {
        const auto& term = pen.term(j);
        const double lam = term.lambda;
        const double q = term.q.value();
        const auto rows = pen.active_rows(j);
        if (rows.empty()) continue;
        const Vector mb = term.M * beta;
        Vector sub(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) sub(static_cast<Eigen::Index>(k)) = mb(rows[k]);
        const double zeta = zero_threshold(sub);
        const bool at_zero = sub.cwiseAbs().maxCoeff() <= zeta;

        if (q == 1.0) {
            for (int r : rows) {
                if (std::abs(mb(r)) > zeta) {
                    h += lam * sign(mb(r)) * term.M.row(r).transpose();
                } else {
                    cols.emplace_back(lam * term.M.row(r).transpose());
                    blocks.push_back(qp::Block{offset++, 1, 1.0, false});
                }
            }
        } else if (!at_zero && !term.q.is_infinite()) {
            // unique gradient of the l_q norm away from zero
            const double nq = linalg::lq_norm(sub, term.q);
            Vector kappa(sub.size());
            for (Eigen::Index k = 0; k < sub.size(); ++k) {
                kappa(k) = sign(sub(k)) * std::pow(std::abs(sub(k)) / nq, q - 1.0);
            }
            for (std::size_t k = 0; k < rows.size(); ++k) {
                h += lam * kappa(static_cast<Eigen::Index>(k)) * term.M.row(rows[k]).transpose();
            }
        } else if (q == 2.0) {
            const auto size = static_cast<Eigen::Index>(rows.size());
            for (int r : rows) cols.emplace_back(lam * term.M.row(r).transpose());
            blocks.push_back(qp::Block{offset, size, 1.0, true});
            offset += size;
        } else {
            throw InvalidInput("kkt_residual: subdifferential of this l_q term is not supported");
        }
    }

    if (cols.empty()) return h.norm();
    Matrix A(p, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) A.col(static_cast<Eigen::Index>(k)) = cols[k];
    return qp::constrained_least_squares(A, -h, blocks).residual;
}

double kkt_slope(const SortedL1Penalty& pen, const Vector& grad, const Vector& beta)
{
    const Eigen::Index p = beta.size();
    const Vector z = -grad / pen.lambda;
    std::vector<Eigen::Index> idx(p);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(beta(a)) > std::abs(beta(b)); });
    const double zeta = zero_threshold(beta);

    double acc = 0.0;
    Eigen::Index start = 0;
    while (start < p) {
        const double lead = std::abs(beta(idx[start]));
        Eigen::Index end = start + 1;
        if (lead <= zeta) {
            end = p;
            Vector v(end - start);
            for (Eigen::Index k = start; k < end; ++k) v(k - start) = z(idx[k]);
            acc += prox::slope_prox(v, pen.weights.segment(start, end - start)).squaredNorm();
        } else {
            while (end < p && std::abs(beta(idx[end])) > zeta && lead - std::abs(beta(idx[end])) <= zeta) ++end;
            Vector v(end - start);
            for (Eigen::Index k = start; k < end; ++k) v(k - start) = sign(beta(idx[k])) * z(idx[k]);
            acc += (v - prox::project_permutahedron(v, pen.weights.segment(start, end - start))).squaredNorm();
        }
        start = end;
    }
    return pen.lambda * std::sqrt(acc);
}

double kkt_from_gradient(const EstimatorSpec& spec, const Vector& grad, const Vector& beta)
{
    if (spec.is_slope()) return kkt_slope(spec.slope(), grad, beta);
    const auto& pen = spec.composite();
    if (pen.separable()) return kkt_separable(pen, grad, beta);
    return kkt_composite(pen, grad, beta);
}

// ---------------------------------------------------------------- identity-link solvers

struct Inner
{
    Vector beta;
    int iterations = 0;
    bool converged = false;
    double kkt = std::numeric_limits<double>::infinity();
    std::vector<double> trace;
};

struct Unit
{
    std::vector<int> idx;
    double lambda = 0.0;
    bool block = false;
    double colsq = 0.0;
    Matrix Q;
    Vector evals;
};

std::vector<Unit> make_units(const CompositePenalty& pen, const Matrix& X)
{
    std::vector<Unit> units;
    for (std::size_t j = 0; j < pen.size(); ++j) {
        const auto& support = pen.supports()[j];
        const double lam = pen.term(j).lambda;
        if (pen.term(j).q.value() == 1.0 || support.size() == 1) {
            for (int i : support) {
                Unit u;
                u.idx = {i};
                u.lambda = lam;
                u.colsq = X.col(i).squaredNorm();
                units.push_back(std::move(u));
            }
        } else {
            Unit u;
            u.idx = support;
            u.lambda = lam;
            u.block = true;
            Matrix xs(X.rows(), static_cast<Eigen::Index>(support.size()));
            for (std::size_t k = 0; k < support.size(); ++k) xs.col(static_cast<Eigen::Index>(k)) = X.col(support[k]);
            Eigen::SelfAdjointEigenSolver<Matrix> eig(xs.transpose() * xs);
            u.Q = eig.eigenvectors();
            u.evals = eig.eigenvalues().cwiseMax(0.0);
            units.push_back(std::move(u));
        }
    }
    return units;
}

/// argmin_b b^T A b - 2 c^T b + lam ||b||_2 with A = Q diag(evals) Q^T.
Vector block_update(const Vector& c, const Unit& u)
{
    const double half = 0.5 * u.lambda;
    const Eigen::Index m = c.size();
    if (c.norm() <= half) return Vector::Zero(m);
    Vector ct = u.Q.transpose() * c;
    const double emax = u.evals.maxCoeff();
    for (Eigen::Index i = 0; i < m; ++i) {
        if (u.evals(i) <= 1e-14 * emax) ct(i) = 0.0;
    }
    if (ct.norm() <= half) return Vector::Zero(m);

    // h(t) = sum ct_i^2 / (t e_i + half)^2 - 1 is convex and decreasing; Newton from t = 0 rises monotonically
    double t = 0.0;
    for (int it = 0; it < 200; ++it) {
        double h = -1.0, dh = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double den = t * u.evals(i) + half;
            const double c2 = ct(i) * ct(i);
            h += c2 / (den * den);
            dh -= 2.0 * c2 * u.evals(i) / (den * den * den);
        }
        if (dh >= 0.0) break;
        const double step = -h / dh;
        t += step;
        if (std::abs(step) <= 1e-15 * t) break;
    }
    Vector coef(m);
    for (Eigen::Index i = 0; i < m; ++i) coef(i) = ct(i) * t / (t * u.evals(i) + half);
    return u.Q * coef;
}

double unit_violation_sq(const Unit& u, const Matrix& X, const Vector& r, const Vector& beta)
{
    if (!u.block) {
        const int i = u.idx.front();
        const double g = -2.0 * X.col(i).dot(r);
        const double b = beta(i);
        const double d = std::abs(b) > kZeroRel * std::max(1.0, std::abs(b)) ? g + u.lambda * sign(b)
                                                                             : std::max(std::abs(g) - u.lambda, 0.0);
        return d * d;
    }
    const auto m = static_cast<Eigen::Index>(u.idx.size());
    Vector b(m), g(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        b(k) = beta(u.idx[k]);
        g(k) = -2.0 * X.col(u.idx[k]).dot(r);
    }
    if (b.cwiseAbs().maxCoeff() > zero_threshold(b)) return (g + u.lambda * b / b.norm()).squaredNorm();
    const double d = std::max(g.norm() - u.lambda, 0.0);
    return d * d;
}

double units_penalty(const std::vector<Unit>& units, const Vector& beta)
{
    double total = 0.0;
    for (const auto& u : units) {
        if (!u.block) {
            total += u.lambda * std::abs(beta(u.idx.front()));
        } else {
            double s = 0.0;
            for (int i : u.idx) s += beta(i) * beta(i);
            total += u.lambda * std::sqrt(s);
        }
    }
    return total;
}

bool unit_is_zero(const Unit& u, const Vector& beta)
{
    return std::all_of(u.idx.begin(), u.idx.end(), [&](int i) { return beta(i) == 0.0; });
}

/**
 * Cyclic (block) coordinate descent on ||Y - X b||^2 + scale * penalty(b).
 * Full sweeps alternate with sweeps restricted to the nonzero units; only a
 * full sweep can declare convergence.
 */
Inner coordinate_descent(const EstimatorSpec& spec, const Problem& problem, Vector beta, double scale, double tol,
                         int max_iter, std::uint64_t seed)
{
    const auto& pen = spec.composite();
    const Matrix& X = problem.X;
    auto units = make_units(pen, X);
    for (auto& u : units) u.lambda *= scale;
    std::vector<std::size_t> order(units.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (seed != 0) {
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
    }

    auto update = [&](const Unit& u, Vector& r) {
        if (!u.block) {
            const int i = u.idx.front();
            const double old = beta(i);
            double nb = 0.0;
            if (u.colsq > 0.0) {
                const double c = X.col(i).dot(r) + u.colsq * old;
                nb = sign(c) * std::max(std::abs(c) - 0.5 * u.lambda, 0.0) / u.colsq;
            }
            if (nb != old) {
                r.noalias() -= X.col(i) * (nb - old);
                beta(i) = nb;
            }
            return;
        }
        const auto m = static_cast<Eigen::Index>(u.idx.size());
        Vector old(m), c(m);
        for (Eigen::Index k = 0; k < m; ++k) old(k) = beta(u.idx[k]);
        Vector partial = r;
        for (Eigen::Index k = 0; k < m; ++k) {
            if (old(k) != 0.0) partial.noalias() += X.col(u.idx[k]) * old(k);
        }
        for (Eigen::Index k = 0; k < m; ++k) c(k) = X.col(u.idx[k]).dot(partial);
        const Vector nb = block_update(c, u);
        for (Eigen::Index k = 0; k < m; ++k) {
            const double d = nb(k) - old(k);
            if (d != 0.0) {
                r.noalias() -= X.col(u.idx[k]) * d;
                beta(u.idx[k]) = nb(k);
            }
        }
    };

    Inner out;
    Vector r = problem.Y - X * beta;
    out.trace.push_back(r.squaredNorm() + units_penalty(units, beta));
    std::vector<std::size_t> active;
    bool full = true;
    for (int sweep = 1; sweep <= max_iter; ++sweep) {
        const auto& which = full ? order : active;
        for (auto ui : which) update(units[ui], r);
        if (sweep % 64 == 0) r = problem.Y - X * beta;
        out.iterations = sweep;
        out.trace.push_back(r.squaredNorm() + units_penalty(units, beta));

        double viol = 0.0;
        for (auto ui : which) viol += unit_violation_sq(units[ui], X, r, beta);
        viol = std::sqrt(viol);
        if (full) {
            out.kkt = viol;
            if (viol <= tol) {
                out.converged = true;
                break;
            }
            active.clear();
            for (auto ui : order) {
                if (!unit_is_zero(units[ui], beta)) active.push_back(ui);
            }
            full = active.empty() || active.size() == order.size();
        } else if (viol <= 0.5 * tol) {
            full = true;
        }
    }
    out.beta = std::move(beta);
    return out;
}

double lipschitz(const Matrix& X)
{
    Eigen::BDCSVD<Matrix> svd(X);
    const double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    return std::max(2.0 * s * s, std::numeric_limits<double>::min());
}

/// prox of step * penalty at v.
Vector penalty_prox(const EstimatorSpec& spec, const Vector& v, double step)
{
    if (spec.is_slope()) {
        const auto& pen = spec.slope();
        return prox::slope_prox(v, step * pen.lambda * pen.weights);
    }
    // dual: beta = v - sum_j step lam_j M_j^T u_j with u_j in the dual unit ball
    const auto& pen = spec.composite();
    std::vector<Vector> cols;
    std::vector<qp::Block> blocks;
    Eigen::Index offset = 0;
    for (std::size_t j = 0; j < pen.size(); ++j) {
        const auto& term = pen.term(j);
        const auto rows = pen.active_rows(j);
        if (rows.empty()) continue;
        for (int r : rows) cols.emplace_back(step * term.lambda * term.M.row(r).transpose());
        const auto size = static_cast<Eigen::Index>(rows.size());
        if (term.q.value() == 1.0) {
            for (Eigen::Index k = 0; k < size; ++k) blocks.push_back(qp::Block{offset + k, 1, 1.0, false});
        } else {
            blocks.push_back(qp::Block{offset, size, 1.0, true});
        }
        offset += size;
    }
    if (cols.empty()) return v;
    Matrix A(v.size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) A.col(static_cast<Eigen::Index>(k)) = cols[k];
    const auto res = qp::constrained_least_squares(A, v, blocks);
    return v - A * res.x;
}

/// Least-squares refit on the cluster structure of a slope iterate.
std::optional<Vector> slope_polish(const EstimatorSpec& spec, const Problem& problem, const Vector& x, double scale)
{
    const auto& pen = spec.slope();
    const Eigen::Index p = x.size();
    std::vector<Eigen::Index> idx(p);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(x(a)) > std::abs(x(b)); });
    std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters;
    Eigen::Index start = 0;
    while (start < p && x(idx[start]) != 0.0) {
        Eigen::Index end = start + 1;
        while (end < p && std::abs(x(idx[end])) == std::abs(x(idx[start]))) ++end;
        clusters.emplace_back(start, end);
        start = end;
    }
    if (clusters.empty()) return std::nullopt;
    const auto k = static_cast<Eigen::Index>(clusters.size());
    Matrix S = Matrix::Zero(p, k);
    Vector W(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const auto [a, b] = clusters[static_cast<std::size_t>(c)];
        for (Eigen::Index r = a; r < b; ++r) S(idx[r], c) = sign(x(idx[r]));
        W(c) = pen.weights.segment(a, b - a).sum();
    }
    const Matrix XS = problem.X * S;
    const Vector rhs = XS.transpose() * problem.Y - 0.5 * scale * pen.lambda * W;
    const Vector theta = (XS.transpose() * XS).ldlt().solve(rhs);
    if (!linalg::all_finite(theta)) return std::nullopt;
    for (Eigen::Index c = 0; c < k; ++c) {
        if (!(theta(c) > 0.0) || (c > 0 && !(theta(c) < theta(c - 1)))) return std::nullopt;
    }
    return Vector(S * theta);
}

/// Monotone FISTA with function-value restarts on ||Y - X b||^2 + scale * penalty(b).
Inner proximal_gradient(const EstimatorSpec& spec, const Problem& problem, Vector beta, double scale, double tol,
                        int max_iter, double L)
{
    const Matrix& X = problem.X;
    const bool slope = spec.is_slope();
    auto value = [&](const Vector& b) { return (problem.Y - X * b).squaredNorm() + scale * spec.penalty_value(b); };
    auto grad = [&](const Vector& b) -> Vector { return -2.0 * (X.transpose() * (problem.Y - X * b)); };
    auto certify = [&](const Vector& b) { return scale * kkt_from_gradient(spec, grad(b) / scale, b); };

    Inner out;
    double fx = value(beta);
    out.trace.push_back(fx);
    Vector y = beta;
    Vector x_prev = beta;
    double t = 1.0;

    for (int it = 1; it <= max_iter; ++it) {
        out.iterations = it;
        const Vector z = penalty_prox(spec, y - grad(y) / L, scale / L);
        const double fz = value(z);
        const double gap = 2.0 * L * (y - z).norm();

        if (fz <= fx) {
            const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = z + ((t - 1.0) / tn) * (z - x_prev);
            x_prev = z;
            beta = z;
            fx = fz;
            t = tn;
        } else {
            y = beta;
            x_prev = beta;
            t = 1.0;
        }
        out.trace.push_back(fx);

        const bool check = gap <= tol || (slope && it % 10 == 0) || it % 200 == 0;
        if (!check) continue;
        out.kkt = certify(beta);
        if (out.kkt <= tol) {
            out.converged = true;
            break;
        }
        if (!slope) continue;
        if (auto polished = slope_polish(spec, problem, beta, scale)) {
            const double fp = value(*polished);
            const double kp = certify(*polished);
            // objective differences below roundoff carry no information here
            if (fp <= fx + 64.0 * std::numeric_limits<double>::epsilon() * std::abs(fx) && kp < out.kkt) {
                beta = *polished;
                fx = fp;
                y = beta;
                x_prev = beta;
                t = 1.0;
                out.kkt = kp;
                out.trace.back() = fx;
                if (kp <= tol) {
                    out.converged = true;
                    break;
                }
            }
        }
    }
    out.beta = std::move(beta);
    return out;
}

struct Method
{
    bool coordinate = false;
    double L = 0.0;
    std::string name;
};

Method choose_method(const EstimatorSpec& spec, const Problem& problem)
{
    Method m;
    if (!spec.is_slope() && spec.composite().separable()) {
        m.coordinate = true;
        bool any_group = false;
        for (const auto& term : spec.composite().terms()) any_group = any_group || term.q.value() == 2.0;
        m.name = any_group ? "block-coordinate-descent" : "coordinate-descent";
    } else {
        m.L = lipschitz(problem.X);
        m.name = spec.is_slope() ? "fista-slope" : "fista-dual-prox";
    }
    return m;
}

Inner identity_solve(const Method& m, const EstimatorSpec& spec, const Problem& problem, Vector start, double scale,
                     double tol, int max_iter, std::uint64_t seed)
{
    if (m.coordinate) return coordinate_descent(spec, problem, std::move(start), scale, tol, max_iter, seed);
    return proximal_gradient(spec, problem, std::move(start), scale, tol, max_iter, m.L);
}

/**
 * Square-root link: minimizes ||r||^2/(2 sigma) + sigma/2 + penalty jointly,
 * alternating an identity-link solve at scale 2 sigma with sigma = ||r||.
 * Inner solves are inexact early on and tighten with the outer residual.
 */
Inner alternating_sqrt(const Method& m, const EstimatorSpec& spec, const Problem& problem, Vector beta, double tol,
                       int max_iter, std::uint64_t seed)
{
    const double ynorm = problem.Y.norm();
    Vector r = problem.Y - problem.X * beta;
    if (r.norm() <= kDegenerateRel * ynorm) {
        beta.setZero();
        r = problem.Y;
    }
    double sigma = r.norm();
    Inner out;
    out.trace.push_back(objective(spec, problem, beta));
    double outer_kkt = kkt_from_gradient(spec, gradient_from_residual(spec, problem, r), beta);
    const int max_outer = std::min(max_iter, 10000);
    for (int outer = 1; outer <= max_outer; ++outer) {
        const double target = std::max(0.5 * tol, 0.1 * outer_kkt);
        auto inner = identity_solve(m, spec, problem, beta, 2.0 * sigma, 2.0 * sigma * target, max_iter, seed);
        out.iterations += inner.iterations;
        beta = std::move(inner.beta);
        r = problem.Y - problem.X * beta;
        const double rn = r.norm();
        require_nondegenerate(problem, rn);
        out.trace.push_back(objective(spec, problem, beta));
        outer_kkt = kkt_from_gradient(spec, gradient_from_residual(spec, problem, r), beta);
        out.kkt = outer_kkt;
        if (outer_kkt <= tol) {
            out.converged = true;
            break;
        }
        if (!inner.converged) break;
        sigma = rn;
    }
    out.beta = std::move(beta);
    return out;
}

void validate_for_solve(const EstimatorSpec& spec, const Problem& problem, const SolverConfig& cfg)
{
    if (!(cfg.tol > 0.0)) throw InvalidInput("solver tolerance must be positive");
    if (cfg.max_iter < 1) throw InvalidInput("max_iter must be >= 1");
    problem.validate();
    check_compatible(spec, problem);
    const Vector lam = spec.lambdas();
    for (Eigen::Index j = 0; j < lam.size(); ++j) {
        if (!(lam(j) > 0.0) || !std::isfinite(lam(j))) throw InvalidInput("tuning parameters must be positive");
    }
    if (!spec.is_slope()) {
        for (const auto& term : spec.composite().terms()) {
            const double q = term.q.value();
            if (q != 1.0 && q != 2.0) throw InvalidInput("solve supports l1 and l2 penalty terms only");
        }
    }
    if (spec.requires_identity_design) {
        const bool identity = problem.X.rows() == problem.X.cols() &&
                              problem.X.isApprox(Matrix::Identity(problem.X.rows(), problem.X.cols()), 0.0);
        if (!identity) throw InvalidInput(spec.name + " requires the identity design");
    }
}

} // namespace

Vector smooth_gradient(const EstimatorSpec& spec, const Problem& problem, const Vector& beta)
{
    check_compatible(spec, problem);
    if (beta.size() != problem.p()) throw DimensionMismatch("beta length differs from p");
    return gradient_from_residual(spec, problem, problem.Y - problem.X * beta);
}

double kkt_residual(const EstimatorSpec& spec, const Problem& problem, const Vector& beta)
{
    return kkt_from_gradient(spec, smooth_gradient(spec, problem, beta), beta);
}

Solution solve(const EstimatorSpec& spec, const Problem& problem, const SolverConfig& cfg,
               const std::optional<Vector>& warm_start)
{
    validate_for_solve(spec, problem, cfg);
    const Eigen::Index p = problem.p();
    if (warm_start && warm_start->size() != p) throw DimensionMismatch("warm start length differs from p");

    const Method method = choose_method(spec, problem);
    const bool sqrt_link = spec.link.kind() == LinkKind::SquareRoot;
    const int attempts = std::max(1, cfg.restarts);

    Inner best;
    int total_iter = 0;
    for (int a = 0; a < attempts; ++a) {
        Vector start = (a == 0 && warm_start) ? *warm_start : Vector::Zero(p);
        std::uint64_t seed = cfg.seed;
        if (a > 0) seed = cfg.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(a);
        Inner run = sqrt_link
                        ? alternating_sqrt(method, spec, problem, std::move(start), cfg.tol, cfg.max_iter, seed)
                        : identity_solve(method, spec, problem, std::move(start), 1.0, cfg.tol, cfg.max_iter, seed);
        total_iter += run.iterations;
        if (a == 0 || run.kkt < best.kkt) {
            best = std::move(run);
        }
        if (best.converged) break;
    }

    Solution sol;
    sol.beta = std::move(best.beta);
    sol.fitted = problem.X * sol.beta;
    sol.objective = objective(spec, problem, sol.beta);
    sol.kkt_residual = kkt_residual(spec, problem, sol.beta);
    sol.converged = sol.kkt_residual <= cfg.tol;
    sol.iterations = total_iter;
    sol.method = sqrt_link ? "alternating+" + method.name : method.name;
    sol.objective_trace = std::move(best.trace);
    return sol;
}

} // namespace pblab
