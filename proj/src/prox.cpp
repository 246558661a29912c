#include <pblab/prox.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <pblab/errors.hpp>

namespace pblab::prox {
namespace {

std::vector<Eigen::Index> order_by_abs_desc(const Vector& v)
{
    std::vector<Eigen::Index> idx(v.size());
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(v(a)) > std::abs(v(b)); });
    return idx;
}

std::vector<Eigen::Index> order_desc(const Vector& v)
{
    std::vector<Eigen::Index> idx(v.size());
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return v(a) > v(b); });
    return idx;
}

} // namespace

Vector soft_threshold(const Vector& v, double t)
{
    if (!(t >= 0.0)) throw InvalidInput("soft_threshold: threshold must be nonnegative");
    return v.unaryExpr([t](double x) { return std::copysign(std::max(std::abs(x) - t, 0.0), x); });
}

Vector group_soft_threshold(const Vector& v, double t)
{
    if (!(t >= 0.0)) throw InvalidInput("group_soft_threshold: threshold must be nonnegative");
    const double nrm = v.norm();
    if (nrm <= t) return Vector::Zero(v.size());
    return v * (1.0 - t / nrm);
}

Vector isotonic_nonincreasing(const Vector& y)
{
    // blocks of (sum, count); merge while the fit would increase
    std::vector<double> sums;
    std::vector<Eigen::Index> counts;
    sums.reserve(y.size());
    counts.reserve(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        sums.push_back(y(i));
        counts.push_back(1);
        while (sums.size() > 1) {
            const auto k = sums.size() - 1;
            if (sums[k - 1] / counts[k - 1] >= sums[k] / counts[k]) break;
            sums[k - 1] += sums[k];
            counts[k - 1] += counts[k];
            sums.pop_back();
            counts.pop_back();
        }
    }
    Vector out(y.size());
    Eigen::Index at = 0;
    for (std::size_t b = 0; b < sums.size(); ++b) {
        const double mean = sums[b] / counts[b];
        out.segment(at, counts[b]).setConstant(mean);
        at += counts[b];
    }
    return out;
}

void require_slope_weights(const Vector& w)
{
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (!(w(i) > 0.0) || !std::isfinite(w(i))) throw InvalidInput("slope weights must be positive and finite");
        if (i > 0 && w(i) > w(i - 1)) throw InvalidInput("slope weights must be non-increasing");
    }
}

Vector slope_prox(const Vector& v, const Vector& w)
{
    if (v.size() != w.size()) throw DimensionMismatch("slope_prox: weight length differs from v");
    require_slope_weights(w);
    const auto idx = order_by_abs_desc(v);
    Vector z(v.size());
    for (Eigen::Index r = 0; r < v.size(); ++r) z(r) = std::abs(v(idx[r])) - w(r);
    const Vector fit = isotonic_nonincreasing(z).cwiseMax(0.0);
    Vector out(v.size());
    for (Eigen::Index r = 0; r < v.size(); ++r) out(idx[r]) = std::copysign(fit(r), v(idx[r]));
    return out;
}

double sorted_l1_norm(const Vector& v, const Vector& w)
{
    if (v.size() != w.size()) throw DimensionMismatch("sorted_l1_norm: weight length differs from v");
    Vector a = v.cwiseAbs();
    std::sort(a.data(), a.data() + a.size(), std::greater<>());
    return a.dot(w);
}

double sorted_l1_dual_norm(const Vector& v, const Vector& w)
{
    if (v.size() != w.size()) throw DimensionMismatch("sorted_l1_dual_norm: weight length differs from v");
    Vector a = v.cwiseAbs();
    std::sort(a.data(), a.data() + a.size(), std::greater<>());
    double num = 0.0, den = 0.0, best = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        num += a(k);
        den += w(k);
        best = std::max(best, num / den);
    }
    return best;
}

Vector project_permutahedron(const Vector& z, const Vector& w)
{
    if (z.size() != w.size()) throw DimensionMismatch("project_permutahedron: size mismatch");
    Vector ws = w;
    std::sort(ws.data(), ws.data() + ws.size(), std::greater<>());
    const auto idx = order_desc(z);
    Vector d(z.size());
    for (Eigen::Index r = 0; r < z.size(); ++r) d(r) = z(idx[r]) - ws(r);
    const Vector v = isotonic_nonincreasing(d);
    Vector out(z.size());
    for (Eigen::Index r = 0; r < z.size(); ++r) out(idx[r]) = z(idx[r]) - v(r);
    return out;
}

} // namespace pblab::prox
