#pragma once
#include <optional>
#include <string>
#include <vector>

#include <pblab/model.hpp>
#include <pblab/solvers.hpp>
#include <pblab/tuning.hpp>

namespace pblab {

enum class BoundMode { Theorem, Special1, Special2, La };

std::string_view to_string(BoundMode mode) noexcept;
/// "theorem", "special1", "special2", "la"; throws InvalidInput otherwise.
BoundMode parse_bound_mode(std::string_view name);

struct TermContribution
{
    double penalty = 0.0;  ///< contribution of ||M_j beta|| at the candidate
    double credit = 0.0;   ///< estimator-dependent term, <= 0 whenever c_j >= 1
};

struct BoundReport
{
    BoundMode mode = BoundMode::Special2;
    double lhs = 0.0;
    double rhs = 0.0;
    std::optional<double> u;        ///< empty for the u -> 0 limit (special2) and for la
    std::string candidate;          ///< label of the minimizing candidate
    Vector candidate_beta;
    double approximation = 0.0;     ///< design-dependent approximation term at the candidate
    std::vector<TermContribution> per_term;
    double slack = 0.0;             ///< rhs - lhs
    double allowance = 0.0;
    bool holds = false;
    bool certified = false;         ///< tuning matches spec and the solution converged
};

struct Candidate
{
    std::string label;
    Vector beta;
};

/// 10 * tol * (1 + ||Y||^2 / n)
double slack_allowance(const Problem& problem, double tol);

/// ||X (beta* - beta)||^2 / n with n the nominal sample size.
double prediction_error(const Problem& problem, const Vector& beta);

/**
 * ||X(beta* - beta)||^2 / (4u(1-u)n)
 *   + (1/n) sum_j (1+c_j)/(1-u) d_j ||M_j beta||
 *   - (1/n) sum_j (c_j-1)/(1-u) d_j ||M_j beta_hat||
 * with d_j the dual noise terms of the tuning. Throws InvalidInput unless 0 < u < 1.
 */
double theorem_rhs(const EstimatorSpec& spec, const Problem& problem, const OracleTuning& tuning,
                   const Solution& solution, const Vector& beta, double u);
BoundReport theorem_report(const EstimatorSpec& spec, const Problem& problem, const OracleTuning& tuning,
                           const Solution& solution, const Vector& beta, double u);

/// min over candidates (beta* and 0 always included) of ||X(beta*-beta)||^2/n + (4/n) sum_j d_j ||M_j beta||.
BoundReport special1_bound(const EstimatorSpec& spec, const Problem& problem, const OracleTuning& tuning,
                           const std::vector<Candidate>& candidates = {});

/// (2/n) sum_j d_j ||M_j beta*||
BoundReport special2_bound(const EstimatorSpec& spec, const Problem& problem, const OracleTuning& tuning);

/// ||X(beta*-beta)||^2/n + (1/n) sum_j a_j ||M_j beta||
double la_loss(const EstimatorSpec& spec, const Problem& problem, const Vector& a, const Vector& beta);

/// a_j = 2 (c_j - 1) d_j; throws InvalidPremise if some c_j <= 1.
Vector la_weights(const OracleTuning& tuning);

/// RHS = (1 + max_j 4 d_j / a_j) min over candidates (beta*, 0 included) of L_a.
BoundReport la_sharp_bound(const EstimatorSpec& spec, const Problem& problem, const OracleTuning& tuning,
                           const std::vector<Candidate>& candidates = {});

struct CheckOptions
{
    double tol = 1e-8;              ///< solver tolerance entering the slack allowance
    double u = 0.5;                 ///< theorem mode
    std::optional<Vector> beta;     ///< theorem mode; defaults to beta*
    std::vector<Candidate> candidates;
};

/**
 * Evaluate the chosen bound and compare it with the estimate:
 * holds = lhs <= rhs + slack_allowance. The lhs is ||X(beta* - beta_hat)||^2/n
 * (L_a(beta_hat) in la mode).
 *
 * Throws InvalidPremise for an unconverged solution. A tuning that does not
 * match the estimator's lambda yields a report with certified = false.
 */
BoundReport check_bound(const EstimatorSpec& spec, const Problem& problem, const OracleTuning& tuning,
                        const Solution& solution, BoundMode mode, const CheckOptions& opts = {});

} // namespace pblab
