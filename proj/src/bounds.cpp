#include <pblab/bounds.hpp>

#include <cmath>
#include <limits>

#include <pblab/errors.hpp>

namespace pblab {
namespace {

double nominal_n(const Problem& problem) { return static_cast<double>(problem.sample_size()); }

void check_tuning_shape(const EstimatorSpec& spec, const OracleTuning& tuning)
{
    const auto k = static_cast<Eigen::Index>(spec.num_terms());
    if (tuning.dual_terms.size() != k || tuning.c.size() != k) {
        throw DimensionMismatch("tuning does not match the number of penalty terms");
    }
}

void require_unit_c(const OracleTuning& tuning, const char* what)
{
    for (Eigen::Index j = 0; j < tuning.c.size(); ++j) {
        if (tuning.c(j) != 1.0) throw InvalidPremise(std::string(what) + " requires c = 1");
    }
}

std::vector<Candidate> with_defaults(const Problem& problem, const std::vector<Candidate>& extra)
{
    const auto& truth = problem.require_truth();
    std::vector<Candidate> all;
    all.push_back({"beta_star", truth.beta_star});
    all.push_back({"zero", Vector::Zero(problem.p())});
    for (const auto& c : extra) {
        if (c.beta.size() != problem.p()) throw DimensionMismatch("candidate " + c.label + " has the wrong length");
        all.push_back(c);
    }
    return all;
}

bool tuning_matches(const EstimatorSpec& spec, const OracleTuning& tuning)
{
    const Vector lam = spec.lambdas();
    if (lam.size() != tuning.lambda.size()) return false;
    for (Eigen::Index j = 0; j < lam.size(); ++j) {
        if (std::abs(lam(j) - tuning.lambda(j)) > 1e-9 * std::abs(tuning.lambda(j))) return false;
    }
    return true;
}

} // namespace

std::string_view to_string(BoundMode mode) noexcept
{
    switch (mode) {
    case BoundMode::Theorem: return "theorem";
    case BoundMode::Special1: return "special1";
    case BoundMode::Special2: return "special2";
    case BoundMode::La: return "la";
    }
    return "?";
}

BoundMode parse_bound_mode(std::string_view name)
{
    if (name == "theorem") return BoundMode::Theorem;
    if (name == "special1") return BoundMode::Special1;
    if (name == "special2") return BoundMode::Special2;
    if (name == "la") return BoundMode::La;
    throw InvalidInput("unknown bound mode '" + std::string(name) + "'");
}

double slack_allowance(const Problem& problem, double tol)
{
    return 10.0 * tol * (1.0 + problem.Y.squaredNorm() / nominal_n(problem));
}

double prediction_error(const Problem& problem, const Vector& beta)
{
    const auto& truth = problem.require_truth();
    if (beta.size() != problem.p()) throw DimensionMismatch("beta length differs from p");
    return (problem.X * (truth.beta_star - beta)).squaredNorm() / nominal_n(problem);
}

BoundReport theorem_report(const EstimatorSpec& spec, const Problem& problem, const OracleTuning& tuning,
                           const Solution& solution, const Vector& beta, double u)
{
    if (!(u > 0.0 && u < 1.0)) throw InvalidInput("u must lie in (0, 1)");
    check_tuning_shape(spec, tuning);
    const double n = nominal_n(problem);
    const Vector at_beta = spec.penalty_norms(beta);
    const Vector at_hat = spec.penalty_norms(solution.beta);

    BoundReport rep;
    rep.mode = BoundMode::Theorem;
    rep.u = u;
    rep.candidate = "given";
    rep.candidate_beta = beta;
    rep.approximation = prediction_error(problem, beta) / (4.0 * u * (1.0 - u));
    rep.rhs = rep.approximation;
    for (Eigen::Index j = 0; j < at_beta.size(); ++j) {
        const double c = tuning.c(j), d = tuning.dual_terms(j);
        TermContribution t;
        t.penalty = (1.0 + c) / (1.0 - u) * d * at_beta(j) / n;
        t.credit = -(c - 1.0) / (1.0 - u) * d * at_hat(j) / n;
        rep.rhs += t.penalty + t.credit;
        rep.per_term.push_back(t);
    }
    return rep;
}

double theorem_rhs(const EstimatorSpec& spec, const Problem& problem, const OracleTuning& tuning,
                   const Solution& solution, const Vector& beta, double u)
{
    return theorem_report(spec, problem, tuning, solution, beta, u).rhs;
}

BoundReport special1_bound(const EstimatorSpec& spec, const Problem& problem, const OracleTuning& tuning,
                           const std::vector<Candidate>& candidates)
{
    check_tuning_shape(spec, tuning);
    require_unit_c(tuning, "special1");
    const double n = nominal_n(problem);
    BoundReport best;
    best.mode = BoundMode::Special1;
    best.u = 0.5;
    best.rhs = std::numeric_limits<double>::infinity();
    for (const auto& cand : with_defaults(problem, candidates)) {
        const Vector norms = spec.penalty_norms(cand.beta);
        BoundReport rep;
        rep.mode = BoundMode::Special1;
        rep.u = 0.5;
        rep.candidate = cand.label;
        rep.candidate_beta = cand.beta;
        rep.approximation = prediction_error(problem, cand.beta);
        rep.rhs = rep.approximation;
        for (Eigen::Index j = 0; j < norms.size(); ++j) {
            TermContribution t;
            t.penalty = 4.0 * tuning.dual_terms(j) * norms(j) / n;
            rep.rhs += t.penalty;
            rep.per_term.push_back(t);
        }
        if (rep.rhs < best.rhs) best = std::move(rep);
    }
    return best;
}

BoundReport special2_bound(const EstimatorSpec& spec, const Problem& problem, const OracleTuning& tuning)
{
    check_tuning_shape(spec, tuning);
    require_unit_c(tuning, "special2");
    const auto& truth = problem.require_truth();
    const double n = nominal_n(problem);
    const Vector norms = spec.penalty_norms(truth.beta_star);
    BoundReport rep;
    rep.mode = BoundMode::Special2;
    rep.candidate = "beta_star";
    rep.candidate_beta = truth.beta_star;
    for (Eigen::Index j = 0; j < norms.size(); ++j) {
        TermContribution t;
        t.penalty = 2.0 * tuning.dual_terms(j) * norms(j) / n;
        rep.rhs += t.penalty;
        rep.per_term.push_back(t);
    }
    return rep;
}

double la_loss(const EstimatorSpec& spec, const Problem& problem, const Vector& a, const Vector& beta)
{
    const Vector norms = spec.penalty_norms(beta);
    if (a.size() != norms.size()) throw DimensionMismatch("la_loss: one weight per penalty term expected");
    return prediction_error(problem, beta) + a.dot(norms) / nominal_n(problem);
}

Vector la_weights(const OracleTuning& tuning)
{
    for (Eigen::Index j = 0; j < tuning.c.size(); ++j) {
        if (!(tuning.c(j) > 1.0)) throw InvalidPremise("the balanced loss requires c_j > 1 for every term");
    }
    return 2.0 * (tuning.c.array() - 1.0).matrix().cwiseProduct(tuning.dual_terms);
}

BoundReport la_sharp_bound(const EstimatorSpec& spec, const Problem& problem, const OracleTuning& tuning,
                           const std::vector<Candidate>& candidates)
{
    check_tuning_shape(spec, tuning);
    const Vector a = la_weights(tuning);
    const double n = nominal_n(problem);
    double factor = 1.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) factor = std::max(factor, 1.0 + 4.0 * tuning.dual_terms(j) / a(j));

    BoundReport best;
    best.mode = BoundMode::La;
    best.rhs = std::numeric_limits<double>::infinity();
    for (const auto& cand : with_defaults(problem, candidates)) {
        const Vector norms = spec.penalty_norms(cand.beta);
        BoundReport rep;
        rep.mode = BoundMode::La;
        rep.candidate = cand.label;
        rep.candidate_beta = cand.beta;
        rep.approximation = factor * prediction_error(problem, cand.beta);
        rep.rhs = rep.approximation;
        for (Eigen::Index j = 0; j < norms.size(); ++j) {
            TermContribution t;
            t.penalty = factor * a(j) * norms(j) / n;
            rep.rhs += t.penalty;
            rep.per_term.push_back(t);
        }
        if (rep.rhs < best.rhs) best = std::move(rep);
    }
    return best;
}

BoundReport check_bound(const EstimatorSpec& spec, const Problem& problem, const OracleTuning& tuning,
                        const Solution& solution, BoundMode mode, const CheckOptions& opts)
{
    if (!solution.converged) throw InvalidPremise("refusing to certify an unconverged solution");
    const auto& truth = problem.require_truth();

    BoundReport rep;
    switch (mode) {
    case BoundMode::Theorem:
        rep = theorem_report(spec, problem, tuning, solution, opts.beta.value_or(truth.beta_star), opts.u);
        break;
    case BoundMode::Special1: rep = special1_bound(spec, problem, tuning, opts.candidates); break;
    case BoundMode::Special2: rep = special2_bound(spec, problem, tuning); break;
    case BoundMode::La: rep = la_sharp_bound(spec, problem, tuning, opts.candidates); break;
    }
    rep.lhs = mode == BoundMode::La ? la_loss(spec, problem, la_weights(tuning), solution.beta)
                                    : prediction_error(problem, solution.beta);
    rep.allowance = slack_allowance(problem, opts.tol);
    rep.slack = rep.rhs - rep.lhs;
    rep.holds = rep.lhs <= rep.rhs + rep.allowance;
    rep.certified = tuning_matches(spec, tuning);
    return rep;
}

} // namespace pblab
