#include <pblab/model.hpp>

#include <cmath>
#include <set>
#include <string>

#include <pblab/errors.hpp>
#include <pblab/prox.hpp>

namespace pblab {

std::string_view LinkFunction::name() const noexcept
{
    switch (kind_) {
    case LinkKind::Identity: return "identity";
    case LinkKind::SquareRoot: return "sqrt";
    }
    return "?";
}

double LinkFunction::value(double x) const
{
    if (!(x >= 0.0)) throw InvalidInput("link value requires x >= 0");
    switch (kind_) {
    case LinkKind::Identity: return x;
    case LinkKind::SquareRoot: return std::sqrt(x);
    }
    return x;
}

double LinkFunction::derivative(double x) const
{
    switch (kind_) {
    case LinkKind::Identity:
        if (!(x >= 0.0)) throw InvalidInput("link derivative requires x >= 0");
        return 1.0;
    case LinkKind::SquareRoot:
        if (!(x > 0.0)) throw DegenerateInput("square-root link derivative is undefined at zero residual");
        return 0.5 / std::sqrt(x);
    }
    return 1.0;
}

namespace {

void check_lambda(double lambda)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidInput("tuning parameters must be positive and finite, got " + std::to_string(lambda));
    }
}

} // namespace

CompositePenalty::CompositePenalty(std::vector<PenaltyTerm> terms, KernelPolicy policy)
    : terms_(std::move(terms))
{
    if (terms_.empty()) throw InvalidInput("penalty needs at least one term");
    const auto p = terms_.front().M.cols();
    if (p < 1) throw InvalidInput("penalty dimension must be >= 1");
    std::vector<Matrix> ms;
    for (const auto& t : terms_) {
        if (t.M.rows() != p || t.M.cols() != p || t.P.rows() != p || t.P.cols() != p) {
            throw DimensionMismatch("penalty matrices must all be p x p");
        }
        linalg::require_finite(t.M, "penalty matrix M");
        linalg::require_finite(t.P, "projection matrix P");
        check_lambda(t.lambda);
        ms.push_back(t.M);
        pinvs_.push_back(linalg::pseudoinverse(t.M));
    }

    const bool trivial = linalg::kernels_intersect_trivially(ms);
    if (policy == KernelPolicy::Require) {
        if (!trivial) throw KernelIntersectionError("penalty matrices share a nontrivial kernel");
        std::vector<linalg::PartitionTerm> parts;
        for (const auto& t : terms_) parts.push_back({t.M, t.P});
        if (!linalg::verify_partition(parts, 1e-10)) {
            throw InvalidInput("projections do not satisfy sum_j P_j M_j^+ M_j = I");
        }
    }
    kernel_deficient_ = !trivial;

    separable_ = true;
    std::vector<int> owner(p, -1);
    for (std::size_t j = 0; j < terms_.size(); ++j) {
        const auto& t = terms_[j];
        const bool q_ok = !t.q.is_infinite() && (t.q.value() == 1.0 || t.q.value() == 2.0);
        if (!q_ok || !linalg::is_selector_diagonal(t.M)) {
            separable_ = false;
            break;
        }
        std::vector<int> support;
        for (Eigen::Index i = 0; i < p; ++i) {
            if (t.M(i, i) == 1.0) {
                if (owner[i] >= 0) separable_ = false;
                owner[i] = static_cast<int>(j);
                support.push_back(static_cast<int>(i));
            }
        }
        supports_.push_back(std::move(support));
    }
    if (separable_) {
        for (auto o : owner) {
            if (o < 0) separable_ = false;
        }
    }
    if (!separable_) supports_.clear();
}

std::vector<int> CompositePenalty::active_rows(std::size_t j) const
{
    const auto& m = terms_.at(j).M;
    std::vector<int> rows;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (m.row(r).cwiseAbs().maxCoeff() > 0.0) rows.push_back(static_cast<int>(r));
    }
    return rows;
}

Vector CompositePenalty::lambdas() const
{
    Vector out(terms_.size());
    for (std::size_t j = 0; j < terms_.size(); ++j) out(j) = terms_[j].lambda;
    return out;
}

CompositePenalty CompositePenalty::with_lambdas(const Vector& lambdas) const
{
    if (static_cast<std::size_t>(lambdas.size()) != terms_.size()) {
        throw DimensionMismatch("expected " + std::to_string(terms_.size()) + " tuning parameters");
    }
    CompositePenalty out = *this;
    for (std::size_t j = 0; j < terms_.size(); ++j) {
        check_lambda(lambdas(j));
        out.terms_[j].lambda = lambdas(j);
    }
    return out;
}

Vector CompositePenalty::term_norms(const Vector& beta) const
{
    if (beta.size() != dim()) throw DimensionMismatch("coefficient vector has wrong length");
    Vector out(terms_.size());
    for (std::size_t j = 0; j < terms_.size(); ++j) {
        if (separable_) {
            const auto& s = supports_[j];
            Vector sub(static_cast<Eigen::Index>(s.size()));
            for (std::size_t k = 0; k < s.size(); ++k) sub(static_cast<Eigen::Index>(k)) = beta(s[k]);
            out(j) = linalg::lq_norm(sub, terms_[j].q);
        } else {
            out(j) = linalg::lq_norm(terms_[j].M * beta, terms_[j].q);
        }
    }
    return out;
}

double CompositePenalty::value(const Vector& beta) const
{
    return lambdas().dot(term_norms(beta));
}

SortedL1Penalty::SortedL1Penalty(Vector w, double lam)
    : weights(std::move(w)), lambda(lam)
{
    prox::require_slope_weights(weights);
    check_lambda(lambda);
}

double SortedL1Penalty::norm(const Vector& beta) const
{
    return prox::sorted_l1_norm(beta, weights);
}

Eigen::Index EstimatorSpec::dim() const
{
    return is_slope() ? slope().weights.size() : composite().dim();
}

std::size_t EstimatorSpec::num_terms() const
{
    return is_slope() ? 1 : composite().size();
}

Vector EstimatorSpec::lambdas() const
{
    if (is_slope()) return Vector::Constant(1, slope().lambda);
    return composite().lambdas();
}

EstimatorSpec EstimatorSpec::with_lambdas(const Vector& lambdas) const
{
    EstimatorSpec out = *this;
    if (is_slope()) {
        if (lambdas.size() != 1) throw DimensionMismatch("slope takes a single tuning parameter");
        check_lambda(lambdas(0));
        std::get<SortedL1Penalty>(out.penalty).lambda = lambdas(0);
    } else {
        out.penalty = composite().with_lambdas(lambdas);
    }
    return out;
}

Vector EstimatorSpec::penalty_norms(const Vector& beta) const
{
    if (is_slope()) return Vector::Constant(1, slope().norm(beta));
    return composite().term_norms(beta);
}

double EstimatorSpec::penalty_value(const Vector& beta) const
{
    return lambdas().dot(penalty_norms(beta));
}

Problem Problem::from_truth(Matrix X, Vector beta_star, Vector eps, std::uint64_t seed)
{
    if (X.cols() != beta_star.size()) throw DimensionMismatch("beta* length differs from design columns");
    if (X.rows() != eps.size()) throw DimensionMismatch("noise length differs from design rows");
    Problem pr;
    pr.Y = X * beta_star + eps;
    pr.X = std::move(X);
    pr.truth = Truth{std::move(beta_star), std::move(eps)};
    pr.seed = seed;
    return pr;
}

void Problem::validate() const
{
    if (X.rows() < 1 || X.cols() < 1) throw InvalidInput("design must be at least 1 x 1");
    if (Y.size() != X.rows()) throw DimensionMismatch("response length differs from design rows");
    linalg::require_finite(X, "design X");
    linalg::require_finite(Y, "response Y");
    if (truth) {
        if (truth->beta_star.size() != X.cols()) throw DimensionMismatch("beta* length differs from design columns");
        if (truth->eps.size() != X.rows()) throw DimensionMismatch("noise length differs from design rows");
        linalg::require_finite(truth->beta_star, "beta*");
        linalg::require_finite(truth->eps, "noise");
    }
    if (Y.cwiseAbs().maxCoeff() == 0.0) throw AssumptionViolated("response Y is identically zero");
}

const Truth& Problem::require_truth() const
{
    if (!truth) throw InvalidInput("operation needs the ground truth (beta*, eps)");
    return *truth;
}

void check_compatible(const EstimatorSpec& spec, const Problem& problem)
{
    if (spec.dim() != problem.p()) {
        throw DimensionMismatch("estimator has dimension " + std::to_string(spec.dim()) + " but design has " +
                                std::to_string(problem.p()) + " columns");
    }
    if (problem.Y.size() != problem.n()) throw DimensionMismatch("response length differs from design rows");
}

double objective(const EstimatorSpec& spec, const Problem& problem, const Vector& beta)
{
    check_compatible(spec, problem);
    if (beta.size() != problem.p()) throw DimensionMismatch("coefficient vector has wrong length");
    const double rss = (problem.Y - problem.X * beta).squaredNorm();
    return spec.link.value(rss) + spec.penalty_value(beta);
}

EstimatorSpec make_lasso(int p, double lambda, LinkFunction link)
{
    if (p < 1) throw InvalidInput("p must be >= 1");
    const Matrix eye = Matrix::Identity(p, p);
    CompositePenalty pen({PenaltyTerm{eye, NormExponent(1.0), eye, lambda}});
    return EstimatorSpec{link, std::move(pen), link.kind() == LinkKind::Identity ? "lasso" : "sqrt-lasso"};
}

EstimatorSpec make_sqrt_lasso(int p, double lambda)
{
    return make_lasso(p, lambda, LinkFunction::square_root());
}

EstimatorSpec make_tailored_lasso(const Vector& lambdas, LinkFunction link)
{
    const auto p = static_cast<int>(lambdas.size());
    if (p < 1) throw InvalidInput("tailored lasso needs at least one coordinate");
    const Matrix eye = Matrix::Identity(p, p);
    std::vector<PenaltyTerm> terms;
    for (int i = 0; i < p; ++i) {
        Matrix m = Matrix::Zero(p, p);
        m(i, i) = 1.0;
        terms.push_back(PenaltyTerm{m, NormExponent(1.0), eye, lambdas(i)});
    }
    return EstimatorSpec{link, CompositePenalty(std::move(terms)), "tailored-lasso"};
}

EstimatorSpec make_group_lasso(int p, const std::vector<std::vector<int>>& groups, const Vector& lambdas,
                               LinkFunction link)
{
    if (p < 1) throw InvalidInput("p must be >= 1");
    if (groups.empty()) throw InvalidInput("group lasso needs at least one group");
    if (lambdas.size() != 1 && static_cast<std::size_t>(lambdas.size()) != groups.size()) {
        throw DimensionMismatch("group lasso takes one lambda or one per group");
    }
    std::vector<Matrix> ms;
    for (const auto& g : groups) {
        if (g.empty()) throw InvalidInput("groups must be nonempty");
        Matrix m = Matrix::Zero(p, p);
        for (int i : g) {
            if (i < 0 || i >= p) throw InvalidInput("group index " + std::to_string(i) + " outside [0, p)");
            m(i, i) = 1.0;
        }
        ms.push_back(std::move(m));
    }
    const auto ps = linalg::default_projections(ms);
    std::vector<PenaltyTerm> terms;
    for (std::size_t j = 0; j < ms.size(); ++j) {
        const double lam = lambdas.size() == 1 ? lambdas(0) : lambdas(j);
        terms.push_back(PenaltyTerm{ms[j], NormExponent(2.0), ps[j], lam});
    }
    return EstimatorSpec{link, CompositePenalty(std::move(terms)),
                         link.kind() == LinkKind::Identity ? "group-lasso" : "group-sqrt-lasso"};
}

EstimatorSpec make_group_lasso(int p, const std::vector<std::vector<int>>& groups, double lambda,
                               LinkFunction link)
{
    return make_group_lasso(p, groups, Vector::Constant(1, lambda), link);
}

EstimatorSpec make_fused(int p, double lambda, LinkFunction link)
{
    const Matrix d = linalg::difference_matrix(p, 1);
    CompositePenalty pen({PenaltyTerm{d, NormExponent(1.0), Matrix::Identity(p, p), lambda}},
                         KernelPolicy::AllowDeficient);
    return EstimatorSpec{link, std::move(pen), "fused"};
}

EstimatorSpec make_trend_filter(int p, int l, double lambda)
{
    if (l < 1 || l > 3) throw InvalidInput("trend filtering supports l in {1, 2, 3}");
    const Matrix m = linalg::difference_matrix(p, l);
    CompositePenalty pen({PenaltyTerm{m, NormExponent(1.0), Matrix::Identity(p, p), lambda}},
                         KernelPolicy::AllowDeficient);
    EstimatorSpec spec{LinkFunction::identity(), std::move(pen), "trend-filter"};
    spec.requires_identity_design = true;
    return spec;
}

EstimatorSpec make_slope(const Vector& weights, double lambda, LinkFunction link)
{
    return EstimatorSpec{link, SortedL1Penalty(weights, lambda), "slope"};
}

Vector slope_bh_weights(int p, int n, double sigma)
{
    if (p < 1 || n < 1 || !(sigma > 0.0)) throw InvalidInput("slope weights need p, n >= 1 and sigma > 0");
    Vector w(p);
    for (int j = 1; j <= p; ++j) w(j - 1) = 2.0 * sigma * std::sqrt(n * std::log(2.0 * p / j));
    return w;
}

std::vector<std::vector<int>> contiguous_groups(int p, int group_size)
{
    if (p < 1 || group_size < 1) throw InvalidInput("contiguous_groups: p and group size must be >= 1");
    std::vector<std::vector<int>> groups;
    for (int start = 0; start < p; start += group_size) {
        std::vector<int> g;
        for (int i = start; i < std::min(p, start + group_size); ++i) g.push_back(i);
        groups.push_back(std::move(g));
    }
    return groups;
}

std::pair<EstimatorSpec, Problem> make_elastic_net_augmented(const Problem& problem, double lambda1, double lambda2)
{
    if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) throw InvalidInput("lambda2 must be finite and >= 0");
    const auto p = static_cast<int>(problem.p());
    auto spec = make_lasso(p, lambda1);
    if (lambda2 == 0.0) {
        spec.name = "elastic-net";
        return {std::move(spec), problem};
    }
    const double s = std::sqrt(lambda2);
    const auto n = problem.n();

    Problem aug;
    aug.X.resize(n + p, p);
    aug.X.topRows(n) = problem.X;
    aug.X.bottomRows(p) = s * Matrix::Identity(p, p);
    aug.Y = Vector::Zero(n + p);
    aug.Y.head(n) = problem.Y;
    aug.seed = problem.seed;
    aug.nominal_n = problem.sample_size();
    if (problem.truth) {
        Vector eps(n + p);
        eps.head(n) = problem.truth->eps;
        eps.tail(p) = -s * problem.truth->beta_star;
        aug.truth = Truth{problem.truth->beta_star, std::move(eps)};
    }
    spec.name = "elastic-net";
    return {std::move(spec), std::move(aug)};
}

} // namespace pblab
