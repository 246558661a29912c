#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <pblab/linalg.hpp>

namespace pblab {

enum class LinkKind { Identity, SquareRoot };

/**
 * Link g applied to the squared residual norm.
 *
 * Only the two standard instances are provided: g(x) = x and g(x) = sqrt(x).
 * Both satisfy g(0) = 0, strict monotonicity on [0, inf), and a positive,
 * non-increasing derivative on (0, inf). Adding a family means extending
 * LinkKind and the two switch statements in model.cpp.
 */
class LinkFunction
{
public:
    constexpr LinkFunction() = default;
    constexpr explicit LinkFunction(LinkKind kind) : kind_(kind) {}

    static constexpr LinkFunction identity() { return LinkFunction(LinkKind::Identity); }
    static constexpr LinkFunction square_root() { return LinkFunction(LinkKind::SquareRoot); }

    constexpr LinkKind kind() const noexcept { return kind_; }
    std::string_view name() const noexcept;

    /// g(x), x >= 0.
    double value(double x) const;
    /// g'(x), x > 0. The identity link also accepts x = 0.
    double derivative(double x) const;

    friend constexpr bool operator==(LinkFunction a, LinkFunction b) noexcept { return a.kind_ == b.kind_; }

private:
    LinkKind kind_ = LinkKind::Identity;
};

/// One summand lambda * ||M beta||_q together with its projection P.
struct PenaltyTerm
{
    Matrix M;
    NormExponent q;
    Matrix P;
    double lambda = 1.0;
};

enum class KernelPolicy {
    Require,        ///< common kernel of the M_j must be {0}, sum P_j M_j^+ M_j = I
    AllowDeficient  ///< difference-operator penalties; unpenalized directions remain
};

/**
 * Composite norm penalty sum_j lambda_j ||M_j beta||_{q_j}.
 *
 * Caches M_j^+ and a structural classification used by the solvers.
 */
class CompositePenalty
{
public:
    explicit CompositePenalty(std::vector<PenaltyTerm> terms, KernelPolicy policy = KernelPolicy::Require);

    const std::vector<PenaltyTerm>& terms() const noexcept { return terms_; }
    const PenaltyTerm& term(std::size_t j) const { return terms_.at(j); }
    const Matrix& pinv(std::size_t j) const { return pinvs_.at(j); }
    std::size_t size() const noexcept { return terms_.size(); }
    Eigen::Index dim() const noexcept { return terms_.front().M.cols(); }
    bool kernel_deficient() const noexcept { return kernel_deficient_; }

    /// Every M_j is a 0/1 diagonal matrix, supports are disjoint and cover
    /// {0..p-1}, and every q_j is 1 or 2.
    bool separable() const noexcept { return separable_; }

    /// Support (nonzero diagonal) of each term; only meaningful when separable().
    const std::vector<std::vector<int>>& supports() const noexcept { return supports_; }

    /// Indices of the nonzero rows of M_j.
    std::vector<int> active_rows(std::size_t j) const;

    Vector lambdas() const;
    CompositePenalty with_lambdas(const Vector& lambdas) const;

    /// (||M_j beta||_{q_j})_j
    Vector term_norms(const Vector& beta) const;
    double value(const Vector& beta) const;

private:
    std::vector<PenaltyTerm> terms_;
    std::vector<Matrix> pinvs_;
    std::vector<std::vector<int>> supports_;
    bool kernel_deficient_ = false;
    bool separable_ = false;
};

/// lambda * sum_j w_j |beta|_(j) with w_1 >= ... >= w_p > 0.
struct SortedL1Penalty
{
    Vector weights;
    double lambda = 1.0;

    SortedL1Penalty() = default;
    SortedL1Penalty(Vector w, double lambda);

    /// sum_j w_j |beta|_(j), without lambda.
    double norm(const Vector& beta) const;
    double value(const Vector& beta) const { return lambda * norm(beta); }
};

using Penalty = std::variant<CompositePenalty, SortedL1Penalty>;

struct EstimatorSpec
{
    LinkFunction link;
    Penalty penalty;
    std::string name;
    bool requires_identity_design = false;

    Eigen::Index dim() const;
    std::size_t num_terms() const;
    bool is_slope() const noexcept { return std::holds_alternative<SortedL1Penalty>(penalty); }
    const CompositePenalty& composite() const { return std::get<CompositePenalty>(penalty); }
    const SortedL1Penalty& slope() const { return std::get<SortedL1Penalty>(penalty); }

    Vector lambdas() const;
    EstimatorSpec with_lambdas(const Vector& lambdas) const;

    /// Unweighted per-term norms; for slope the single sorted-l1 norm.
    Vector penalty_norms(const Vector& beta) const;
    /// sum_j lambda_j * penalty_norms(beta)_j
    double penalty_value(const Vector& beta) const;
};

struct Truth
{
    Vector beta_star;
    Vector eps;
};

struct Problem
{
    Matrix X;
    Vector Y;
    std::optional<Truth> truth;
    std::uint64_t seed = 0;
    /// Normalizing sample size for prediction errors. Defaults to X.rows();
    /// the elastic-net augmentation keeps the original n here.
    std::optional<Eigen::Index> nominal_n;

    Eigen::Index n() const noexcept { return X.rows(); }
    Eigen::Index p() const noexcept { return X.cols(); }
    Eigen::Index sample_size() const noexcept { return nominal_n.value_or(X.rows()); }
    bool has_truth() const noexcept { return truth.has_value(); }

    /// Y = X beta_star + eps.
    static Problem from_truth(Matrix X, Vector beta_star, Vector eps, std::uint64_t seed = 0);

    /// Finite entries, consistent dimensions, Y != 0.
    void validate() const;
    const Truth& require_truth() const;
};

/// g(||Y - X beta||^2) + penalty(beta)
double objective(const EstimatorSpec& spec, const Problem& problem, const Vector& beta);

/// Throws DimensionMismatch unless spec and problem agree on p.
void check_compatible(const EstimatorSpec& spec, const Problem& problem);

EstimatorSpec make_lasso(int p, double lambda, LinkFunction link = LinkFunction::identity());
EstimatorSpec make_sqrt_lasso(int p, double lambda);

/// Lasso with one singleton-indicator term per coordinate.
EstimatorSpec make_tailored_lasso(const Vector& lambdas, LinkFunction link = LinkFunction::identity());

/// Groups are 0-based index sets; overlaps are allowed. One lambda for all
/// groups or one per group.
EstimatorSpec make_group_lasso(int p, const std::vector<std::vector<int>>& groups, const Vector& lambdas,
                               LinkFunction link = LinkFunction::identity());
EstimatorSpec make_group_lasso(int p, const std::vector<std::vector<int>>& groups, double lambda,
                               LinkFunction link = LinkFunction::identity());

EstimatorSpec make_fused(int p, double lambda, LinkFunction link = LinkFunction::identity());

/// l in {1, 2, 3}; the design must be the identity at solve time.
EstimatorSpec make_trend_filter(int p, int l, double lambda);

EstimatorSpec make_slope(const Vector& weights, double lambda, LinkFunction link = LinkFunction::identity());

/// w_j = 2 sigma sqrt(n log(2p / j)).
Vector slope_bh_weights(int p, int n, double sigma);

/// Consecutive groups of the given size (the last one may be smaller).
std::vector<std::vector<int>> contiguous_groups(int p, int group_size);

/**
 * Elastic net as a lasso on augmented data: design [X; sqrt(l2) I],
 * response [Y; 0], noise [eps; -sqrt(l2) beta*] when the truth is known.
 */
std::pair<EstimatorSpec, Problem> make_elastic_net_augmented(const Problem& problem, double lambda1, double lambda2);

} // namespace pblab
