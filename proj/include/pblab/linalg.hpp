#pragma once
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pblab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * Exponent q of an l_q norm, q in [1, +inf].
 *
 * q = +inf is a distinguished value; its dual exponent is 1.
 */
class NormExponent
{
public:
    constexpr NormExponent() = default;
    explicit NormExponent(double q);

    static NormExponent infinity() noexcept
    {
        NormExponent e;
        e.q_ = std::numeric_limits<double>::infinity();
        return e;
    }

    double value() const noexcept { return q_; }
    bool is_infinite() const noexcept { return q_ == std::numeric_limits<double>::infinity(); }

    /// Conjugate exponent p with 1/p + 1/q = 1.
    NormExponent dual() const noexcept;

    friend bool operator==(NormExponent a, NormExponent b) noexcept { return a.q_ == b.q_; }

private:
    double q_ = 1.0;
};

namespace linalg {

/// Default relative singular-value cutoff for pseudoinverses.
inline constexpr double kPinvRelTol = 1e-12;
/// Relative tolerance of the stacked-rank test for the common kernel.
inline constexpr double kKernelRankTol = 1e-10;

bool all_finite(const Matrix& a) noexcept;
bool all_finite(const Vector& v) noexcept;

/// Throws InvalidInput if any entry of a is NaN or infinite.
void require_finite(const Matrix& a, const char* what);
void require_finite(const Vector& v, const char* what);

/// Square, diagonal, every diagonal entry 0 or 1 (a coordinate selector).
bool is_selector_diagonal(const Matrix& a) noexcept;

/**
 * Moore-Penrose pseudoinverse through a full SVD.
 * Selector diagonals are their own pseudoinverse and skip the SVD.
 * Singular values at or below tol * sigma_max are treated as zero.
 */
Matrix pseudoinverse(const Matrix& a, double tol = kPinvRelTol);

/// ||v||_q.
double lq_norm(const Vector& v, NormExponent q);

/// Dual norm of ||.||_q evaluated at v, i.e. ||v||_p with 1/p + 1/q = 1.
double dual_norm(const Vector& v, NormExponent q);

/**
 * l-th power of the p x p first-difference matrix D with
 * D(i,i) = -1, D(i,i+1) = 1 for i < p and an all-zero last row.
 */
Matrix difference_matrix(int p, int l = 1);

/// Closed-form pseudoinverse of difference_matrix(p, 1).
Matrix fused_pinv(int p);

/// Numerical rank with relative cutoff tol * sigma_max.
int numerical_rank(const Matrix& a, double tol);

/// True iff the stacked matrix [M_1; ...; M_k] has full column rank.
bool kernels_intersect_trivially(const std::vector<Matrix>& ms, double tol = kKernelRankTol);

struct PartitionTerm
{
    Matrix M;
    Matrix P;
};

/// max-abs deviation of sum_j P_j M_j^+ M_j from the identity.
double partition_defect(const std::vector<PartitionTerm>& terms);

/// True iff || sum_j P_j M_j^+ M_j - I ||_max <= tol.
bool verify_partition(const std::vector<PartitionTerm>& terms, double tol);

/**
 * Projections P_1..P_k with sum_j P_j M_j^+ M_j = I.
 *
 * Identities when they already satisfy the identity (k = 1, or mutually
 * orthogonal row spaces). Otherwise the diagonal "first-owner" rule: each
 * coordinate goes to the lowest-index M_j whose column at that coordinate is
 * nonzero. If that still fails to reproduce I (non-diagonal overlapping M_j),
 * P_j = (sum_i M_i^+ M_i)^{-1} M_j^+ M_j is returned.
 *
 * Throws KernelIntersectionError if the M_j share a nontrivial kernel.
 */
std::vector<Matrix> default_projections(const std::vector<Matrix>& ms);

} // namespace linalg
} // namespace pblab
