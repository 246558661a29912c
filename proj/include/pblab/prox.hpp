#pragma once
#include <pblab/linalg.hpp>

namespace pblab::prox {

/// sign(v_i) * max(|v_i| - t, 0), t >= 0.
Vector soft_threshold(const Vector& v, double t);

/// v * max(1 - t / ||v||_2, 0), t >= 0.
Vector group_soft_threshold(const Vector& v, double t);

/// Non-increasing isotonic regression of y (pool adjacent violators).
Vector isotonic_nonincreasing(const Vector& y);

/**
 * Proximal map of x -> sum_j w_j |x|_(j) at v.
 *
 * w must be non-increasing and nonnegative (InvalidInput otherwise). Sorts
 * |v| decreasingly, subtracts w, runs PAV for a non-increasing fit, clips
 * at zero and undoes the permutation and signs.
 */
Vector slope_prox(const Vector& v, const Vector& w);

/// sum_j w_j |v|_(j)
double sorted_l1_norm(const Vector& v, const Vector& w);

/// Dual of the sorted-l1 norm: max_k (sum_{j<=k} |v|_(j)) / (sum_{j<=k} w_j).
double sorted_l1_dual_norm(const Vector& v, const Vector& w);

/// Euclidean projection of z onto the permutahedron of w (all permutations
/// of w, convex hull).
Vector project_permutahedron(const Vector& z, const Vector& w);

/// Throws InvalidInput unless w is non-increasing and positive.
void require_slope_weights(const Vector& w);

} // namespace pblab::prox
