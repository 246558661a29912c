#include <pblab/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <string>

#include <pblab/errors.hpp>

namespace pblab {

NormExponent::NormExponent(double q)
    : q_(q)
{
    if (std::isnan(q) || q < 1.0) {
        throw InvalidInput("norm exponent must satisfy q >= 1, got " + std::to_string(q));
    }
}

NormExponent NormExponent::dual() const noexcept
{
    if (is_infinite()) return NormExponent{};
    if (q_ == 1.0) return infinity();
    NormExponent e;
    e.q_ = q_ / (q_ - 1.0);
    return e;
}

namespace linalg {

bool all_finite(const Matrix& a) noexcept { return a.allFinite(); }
bool all_finite(const Vector& v) noexcept { return v.allFinite(); }

void require_finite(const Matrix& a, const char* what)
{
    if (!a.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entry");
}

void require_finite(const Vector& v, const char* what)
{
    if (!v.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entry");
}

bool is_selector_diagonal(const Matrix& a) noexcept
{
    if (a.rows() != a.cols()) return false;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
            const double x = a(r, c);
            if (r == c ? (x != 0.0 && x != 1.0) : x != 0.0) return false;
        }
    }
    return true;
}

Matrix pseudoinverse(const Matrix& a, double tol)
{
    require_finite(a, "pseudoinverse");
    if (!(tol > 0.0)) throw InvalidInput("pseudoinverse: tol must be positive");
    if (a.size() == 0) return Matrix(a.cols(), a.rows());
    if (is_selector_diagonal(a)) return a;

    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cutoff = tol * (s.size() ? s(0) : 0.0);

    Matrix out = Matrix::Zero(a.cols(), a.rows());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) <= cutoff || s(i) == 0.0) break;
        out.noalias() += (svd.matrixV().col(i) / s(i)) * svd.matrixU().col(i).transpose();
    }
    return out;
}

double lq_norm(const Vector& v, NormExponent q)
{
    if (v.size() == 0) return 0.0;
    if (q.is_infinite()) return v.cwiseAbs().maxCoeff();
    const double e = q.value();
    if (e == 1.0) return v.cwiseAbs().sum();
    if (e == 2.0) return v.norm();
    // scale by the max entry to avoid overflow in |v_i|^q
    const double m = v.cwiseAbs().maxCoeff();
    if (m == 0.0) return 0.0;
    return m * std::pow((v.cwiseAbs() / m).array().pow(e).sum(), 1.0 / e);
}

double dual_norm(const Vector& v, NormExponent q)
{
    return lq_norm(v, q.dual());
}

Matrix difference_matrix(int p, int l)
{
    if (p < 2) throw InvalidInput("difference_matrix: p must be >= 2");
    if (l < 1) throw InvalidInput("difference_matrix: l must be >= 1");
    Matrix d = Matrix::Zero(p, p);
    for (int i = 0; i + 1 < p; ++i) {
        d(i, i) = -1.0;
        d(i, i + 1) = 1.0;
    }
    Matrix out = d;
    for (int k = 1; k < l; ++k) out = (out * d).eval();
    return out;
}

Matrix fused_pinv(int p)
{
    if (p < 2) throw InvalidInput("fused_pinv: p must be >= 2");
    Matrix out = Matrix::Zero(p, p);
    const double pd = p;
    // 1-based (i, j) as in the closed form; column p is zero
    for (int i = 1; i <= p; ++i) {
        for (int j = 1; j < p; ++j) {
            out(i - 1, j - 1) = (i <= j) ? (j - pd) / pd : j / pd;
        }
    }
    return out;
}

int numerical_rank(const Matrix& a, double tol)
{
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > tol * s(0)) ++r;
    }
    return r;
}

bool kernels_intersect_trivially(const std::vector<Matrix>& ms, double tol)
{
    if (ms.empty()) return false;
    const auto p = ms.front().cols();
    Eigen::Index rows = 0;
    for (const auto& m : ms) {
        if (m.cols() != p) throw DimensionMismatch("penalty matrices differ in column count");
        rows += m.rows();
    }
    if (std::all_of(ms.begin(), ms.end(), [](const Matrix& m) { return is_selector_diagonal(m); })) {
        for (Eigen::Index i = 0; i < p; ++i) {
            if (std::none_of(ms.begin(), ms.end(), [i](const Matrix& m) { return m(i, i) != 0.0; })) return false;
        }
        return true;
    }
    Matrix stacked(rows, p);
    Eigen::Index at = 0;
    for (const auto& m : ms) {
        stacked.middleRows(at, m.rows()) = m;
        at += m.rows();
    }
    return numerical_rank(stacked, tol) == p;
}

namespace {

void check_square_terms(const std::vector<PartitionTerm>& terms)
{
    if (terms.empty()) throw InvalidInput("verify_partition: empty term list");
    const auto p = terms.front().M.cols();
    for (const auto& t : terms) {
        if (t.M.rows() != p || t.M.cols() != p || t.P.rows() != p || t.P.cols() != p) {
            throw DimensionMismatch("verify_partition: all matrices must be p x p");
        }
    }
}

Matrix partition_sum(const std::vector<PartitionTerm>& terms)
{
    const auto p = terms.front().M.cols();
    Matrix sum = Matrix::Zero(p, p);
    for (const auto& t : terms) {
        if (is_selector_diagonal(t.M)) {
            sum.noalias() += t.P * t.M.diagonal().asDiagonal();
        } else {
            sum.noalias() += t.P * (pseudoinverse(t.M) * t.M);
        }
    }
    return sum;
}

} // namespace

double partition_defect(const std::vector<PartitionTerm>& terms)
{
    check_square_terms(terms);
    const auto p = terms.front().M.cols();
    return (partition_sum(terms) - Matrix::Identity(p, p)).cwiseAbs().maxCoeff();
}

bool verify_partition(const std::vector<PartitionTerm>& terms, double tol)
{
    if (!(tol > 0.0)) throw InvalidInput("verify_partition: tol must be positive");
    return partition_defect(terms) <= tol;
}

std::vector<Matrix> default_projections(const std::vector<Matrix>& ms)
{
    if (ms.empty()) throw InvalidInput("default_projections: empty matrix list");
    const auto p = ms.front().cols();
    for (const auto& m : ms) {
        if (m.rows() != p || m.cols() != p) {
            throw DimensionMismatch("default_projections: all matrices must be p x p");
        }
        require_finite(m, "default_projections");
    }
    if (!kernels_intersect_trivially(ms)) {
        throw KernelIntersectionError(
            "penalty matrices share a nontrivial kernel; some coefficients are unpenalized");
    }

    constexpr double tol = 1e-10;
    const Matrix eye = Matrix::Identity(p, p);

    std::vector<PartitionTerm> terms;
    terms.reserve(ms.size());
    for (const auto& m : ms) terms.push_back({m, eye});
    if (verify_partition(terms, tol)) return std::vector<Matrix>(ms.size(), eye);

    // first-owner diagonal projections
    std::vector<Matrix> owners(ms.size(), Matrix::Zero(p, p));
    for (Eigen::Index i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < ms.size(); ++j) {
            if (ms[j].col(i).cwiseAbs().maxCoeff() > 0.0) {
                owners[j](i, i) = 1.0;
                break;
            }
        }
    }
    for (std::size_t j = 0; j < ms.size(); ++j) terms[j].P = owners[j];
    if (verify_partition(terms, tol)) return owners;

    // general overlap: P_j = (sum_i Pi_i)^{-1} Pi_j with Pi_j = M_j^+ M_j
    std::vector<Matrix> proj;
    Matrix total = Matrix::Zero(p, p);
    for (const auto& m : ms) {
        proj.push_back(pseudoinverse(m) * m);
        total += proj.back();
    }
    const Matrix inv = total.fullPivLu().inverse();
    for (auto& pj : proj) pj = (inv * pj).eval();
    return proj;
}

} // namespace linalg
} // namespace pblab
