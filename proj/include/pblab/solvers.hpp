#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <pblab/model.hpp>

namespace pblab {

struct SolverConfig
{
    double tol = 1e-8;          ///< target KKT residual
    int max_iter = 100000;      ///< sweeps / proximal steps per attempt
    int restarts = 2;           ///< attempts in total; later ones only run if earlier ones fail
    std::uint64_t seed = 0;     ///< 0 keeps the natural coordinate order
};

struct Solution
{
    Vector beta;
    Vector fitted;                  ///< X * beta, recomputed from beta
    double objective = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string method;
    std::vector<double> objective_trace;
};

/**
 * Minimize g(||Y - X beta||^2) + penalty(beta).
 *
 * Dispatch:
 *   - identity link, separable penalty (lasso, tailored lasso, disjoint
 *     groups): cyclic (block) coordinate descent with exact block updates;
 *   - identity link, any other composite penalty (fused, trend filtering,
 *     overlapping groups): monotone FISTA whose prox is computed through
 *     its dual box/ball-constrained least-squares problem;
 *   - identity link, slope: monotone FISTA with the sorted-l1 prox plus
 *     a cluster-wise least-squares polish;
 *   - square-root link: alternates sigma = ||Y - X beta|| with the identity-link
 *     problem at tuning 2 sigma lambda.
 *
 * The result is certified by kkt_residual(); converged means
 * kkt_residual <= cfg.tol. When no attempt converges the best iterate is
 * returned with converged = false.
 *
 * Throws DegenerateInput if the residual vanishes under the square-root link.
 */
Solution solve(const EstimatorSpec& spec, const Problem& problem, const SolverConfig& cfg = {},
               const std::optional<Vector>& warm_start = std::nullopt);

/**
 * Euclidean distance from 0 to the subdifferential of the objective at beta.
 *
 * Penalty entries with |.| <= 1e-11 * max(1, ||M_j beta||_inf) count as zero.
 * Separable penalties and slope are evaluated in closed form; other composite
 * penalties through an exact box-constrained least-squares problem (l1
 * terms), or a projected-gradient upper bound when an l2 term sits at zero.
 *
 * Throws DegenerateInput for the square-root link when ||Y - X beta|| <= 1e-12 ||Y||.
 */
double kkt_residual(const EstimatorSpec& spec, const Problem& problem, const Vector& beta);

/// Gradient of g(||Y - X beta||^2) with respect to beta.
Vector smooth_gradient(const EstimatorSpec& spec, const Problem& problem, const Vector& beta);

} // namespace pblab
