#pragma once
#include <optional>
#include <vector>

#include <pblab/model.hpp>
#include <pblab/solvers.hpp>

namespace pblab {

struct FixedPointConfig
{
    double tol = 1e-8;      ///< relative residual ||lambda - T(lambda)||_inf / ||lambda||_inf
    int max_iter = 200;
    double damping = 0.5;   ///< in (0, 1]
    int stall_window = 20;  ///< iterations without progress before the bisection fallback
};

struct OracleTuning
{
    Vector c;
    Vector lambda;
    Vector dual_terms;              ///< (||(X P_j M_j^+)^T eps||_{q_j}^*)_j
    double fixed_point_residual = 0.0;
    int iterations = 0;
    bool bisection = false;         ///< the scalar fallback produced the result
    std::vector<Vector> trace;      ///< lambda iterates, starting point first
    std::optional<Solution> solution;  ///< solve at the returned lambda (square-root link only)
};

/**
 * (||(X P_j M_j^+)^T eps||_{q_j}^*)_j for composite penalties; for slope the
 * single dual sorted-l1 norm of X^T eps under the estimator's weights.
 *
 * Throws AssumptionViolated if a term vanishes.
 */
Vector dual_noise_terms(const EstimatorSpec& spec, const Matrix& X, const Vector& eps);

/**
 * Tuning satisfying lambda = 2 g'(||Y - X beta_lambda||^2) (c .* dual_terms).
 *
 * Identity link: closed form, zero iterations. Square-root link: damped
 * fixed-point iteration from 2 g'(||eps||^2) (c .* dual_terms), stopping once
 * the relative residual is <= fp.tol. All iterates are multiples of
 * c .* dual_terms, so if the residual stops decreasing a bisection on that
 * scalar multiple takes over.
 *
 * Throws NonConvergence (with the lambda trace) when the iteration or an
 * inner solve fails, DegenerateInput if a residual vanishes.
 */
OracleTuning oracle_lambda(const EstimatorSpec& spec, const Problem& problem, const Vector& c,
                           const SolverConfig& cfg = {}, const FixedPointConfig& fp = {});

/// Relative fixed-point residual ||lambda - 2 g'(||r||^2)(c .* d)||_inf / ||lambda||_inf at a solved beta.
double fixed_point_residual(const EstimatorSpec& spec, const Problem& problem, const Vector& lambda,
                            const Vector& c, const Vector& dual_terms, const Vector& beta);

/**
 * Common tuning value m (returned once per term) beyond which the estimate is zero:
 * m = max(max_j 2 g'(||Y||^2) ||(X^T Y)^{A_j}||^*_{q_j}, 1) for 0/1 diagonal M_j,
 * with A_j the nonzero rows of M_j. General M_j use (P_j M_j^+)^T X^T Y in place of
 * the restriction. For a penalty with unpenalized directions (single term) the
 * estimate at m lies in Ker(M) instead: the formula is evaluated at the
 * least-squares residual over Ker(M).
 */
Vector lambda_max(const EstimatorSpec& spec, const Problem& problem);

/// argmin_{l2 >= 0} ||X^T eps - l2 beta*||_inf.
double elastic_net_lambda2(const Matrix& X, const Vector& eps, const Vector& beta_star);

} // namespace pblab
