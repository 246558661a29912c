#include <pblab/qp.hpp>

#include <algorithm>
#include <cmath>

#include <pblab/errors.hpp>

namespace pblab::qp {
namespace {

void check_blocks(const Matrix& A, const Vector& b, const std::vector<Block>& blocks)
{
    if (A.rows() != b.size()) throw DimensionMismatch("constrained_least_squares: A and b disagree");
    Eigen::Index at = 0;
    for (const auto& blk : blocks) {
        if (blk.offset != at || blk.size < 0 || !(blk.radius >= 0.0)) {
            throw InvalidInput("constrained_least_squares: blocks must tile the variables in order");
        }
        at += blk.size;
    }
    if (at != A.cols()) throw InvalidInput("constrained_least_squares: blocks do not cover all variables");
}

void project(Vector& x, const std::vector<Block>& blocks)
{
    for (const auto& blk : blocks) {
        auto seg = x.segment(blk.offset, blk.size);
        if (blk.ball) {
            const double nrm = seg.norm();
            if (nrm > blk.radius) seg *= blk.radius / nrm;
        } else {
            seg = seg.cwiseMax(-blk.radius).cwiseMin(blk.radius);
        }
    }
}

double spectral_norm_sq(const Matrix& A)
{
    if (A.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> svd(A);
    const double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    return s * s;
}

/// Accelerated projected gradient with adaptive restart.
Result projected_gradient(const Matrix& A, const Vector& b, const std::vector<Block>& blocks, Vector x,
                          int max_iter)
{
    Result res;
    const double L = spectral_norm_sq(A);
    project(x, blocks);
    if (L == 0.0) {
        res.x = x;
        res.residual = (A * x - b).norm();
        return res;
    }
    Vector y = x;
    double t = 1.0;
    int quiet = 0;
    int it = 0;
    for (; it < max_iter; ++it) {
        Vector xn = y - A.transpose() * (A * y - b) / L;
        project(xn, blocks);
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const Vector step = xn - x;
        if ((y - xn).dot(step) > 0.0) {
            y = xn;
            t = 1.0;
        } else {
            y = xn + ((t - 1.0) / tn) * step;
            t = tn;
        }
        const double move = step.cwiseAbs().maxCoeff();
        x = std::move(xn);
        quiet = (move <= 1e-15 * (1.0 + x.cwiseAbs().maxCoeff())) ? quiet + 1 : 0;
        if (quiet >= 5) break;
    }
    res.x = std::move(x);
    res.residual = (A * res.x - b).norm();
    res.iterations = it;
    return res;
}

Result active_set_box(const Matrix& A, const Vector& b, const Vector& radius, int max_iter)
{
    const Eigen::Index m = A.cols();
    Vector x = Vector::Zero(m);
    // 0 free, -1 at lower bound, +1 at upper bound
    std::vector<int> state(m, 0);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (radius(i) == 0.0) state[i] = -1;
    }
    const double gtol = 1e-13 * std::max(1.0, (A.transpose() * b).cwiseAbs().maxCoeff());

    Result res;
    int it = 0;
    for (; it < max_iter; ++it) {
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (state[i] == 0) free.push_back(i);
        }

        Vector z = x;
        if (!free.empty()) {
            Matrix af(A.rows(), static_cast<Eigen::Index>(free.size()));
            Vector rhs = b;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (state[i] != 0) rhs.noalias() -= A.col(i) * x(i);
            }
            for (std::size_t k = 0; k < free.size(); ++k) af.col(static_cast<Eigen::Index>(k)) = A.col(free[k]);
            const Vector zf = af.completeOrthogonalDecomposition().solve(rhs);
            for (std::size_t k = 0; k < free.size(); ++k) z(free[k]) = zf(static_cast<Eigen::Index>(k));
        }

        double alpha = 1.0;
        Eigen::Index blocking = -1;
        for (auto i : free) {
            const double d = z(i) - x(i);
            if (z(i) > radius(i) && d > 0.0) {
                const double a = (radius(i) - x(i)) / d;
                if (a < alpha) { alpha = a; blocking = i; }
            } else if (z(i) < -radius(i) && d < 0.0) {
                const double a = (-radius(i) - x(i)) / d;
                if (a < alpha) { alpha = a; blocking = i; }
            }
        }

        if (blocking >= 0) {
            alpha = std::max(alpha, 0.0);
            for (auto i : free) {
                x(i) += alpha * (z(i) - x(i));
                if (x(i) >= radius(i)) { x(i) = radius(i); state[i] = 1; }
                else if (x(i) <= -radius(i)) { x(i) = -radius(i); state[i] = -1; }
            }
            x(blocking) = z(blocking) > 0.0 ? radius(blocking) : -radius(blocking);
            state[blocking] = z(blocking) > 0.0 ? 1 : -1;
            continue;
        }

        x = z;
        const Vector g = A.transpose() * (A * x - b);
        double worst = gtol;
        Eigen::Index release = -1;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (radius(i) == 0.0) continue;
            const double viol = state[i] == -1 ? -g(i) : (state[i] == 1 ? g(i) : 0.0);
            if (viol > worst) { worst = viol; release = i; }
        }
        if (release < 0) {
            res.x = std::move(x);
            res.residual = (A * res.x - b).norm();
            res.iterations = it + 1;
            res.exact = true;
            return res;
        }
        state[release] = 0;
    }

    // cycling or too many changes: finish with the first-order method
    std::vector<Block> blocks;
    for (Eigen::Index i = 0; i < m; ++i) blocks.push_back(Block{i, 1, radius(i), false});
    res = projected_gradient(A, b, blocks, x, 20000);
    res.iterations += it;
    return res;
}

} // namespace

Result constrained_least_squares(const Matrix& A, const Vector& b, const std::vector<Block>& blocks, int max_iter)
{
    check_blocks(A, b, blocks);
    const bool has_ball = std::any_of(blocks.begin(), blocks.end(), [](const Block& blk) { return blk.ball; });
    if (!has_ball) {
        Vector radius(A.cols());
        for (const auto& blk : blocks) radius.segment(blk.offset, blk.size).setConstant(blk.radius);
        const int cap = max_iter > 0 ? max_iter : static_cast<int>(4 * A.cols() + 100);
        return active_set_box(A, b, radius, cap);
    }
    return projected_gradient(A, b, blocks, Vector::Zero(A.cols()), max_iter > 0 ? max_iter : 50000);
}

} // namespace pblab::qp
