#pragma once
#include <vector>

#include <pblab/linalg.hpp>

namespace pblab::qp {

/// Constraint on x.segment(offset, size): either every coordinate in
/// [-radius, radius] (box) or the Euclidean norm at most radius (ball).
struct Block
{
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
    double radius = 1.0;
    bool ball = false;
};

struct Result
{
    Vector x;
    double residual = 0.0;  ///< ||A x - b||_2 at the returned x
    int iterations = 0;
    bool exact = false;     ///< finite active-set termination (box-only problems)
};

/**
 * min ||A x - b||_2 subject to the block constraints. Blocks must tile
 * [0, A.cols()).
 *
 * Box-only problems go through a primal active-set method with minimum-norm
 * subproblem solves, which terminates with the exact minimizer. Problems with
 * a ball constraint use accelerated projected gradient; the returned
 * residual is then an upper bound on the minimum.
 */
Result constrained_least_squares(const Matrix& A, const Vector& b, const std::vector<Block>& blocks,
                                 int max_iter = 0);

} // namespace pblab::qp
