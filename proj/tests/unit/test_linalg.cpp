#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/SVD>

#include <pblab/errors.hpp>
#include <pblab/linalg.hpp>

using namespace pblab;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r)
{
    Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

// Pseudoinverse column by column: x_i = argmin ||A x - e_i|| of minimum norm,
// obtained from the normal equations restricted to the row space.
Matrix pinv_by_least_squares(const Matrix& A)
{
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double cut = 1e-12 * (s.size() ? s(0) : 0.0);
    int r = 0;
    while (r < s.size() && s(r) > cut) ++r;
    const Matrix V = svd.matrixV().leftCols(r);  // row-space basis
    Matrix out(A.cols(), A.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const Vector e = Vector::Unit(A.rows(), i);
        const Matrix AV = A * V;
        const Vector y = (AV.transpose() * AV).ldlt().solve(AV.transpose() * e);
        out.col(i) = V * y;
    }
    return out;
}

} // namespace

TEST_CASE("dual norms of (3, -4)")
{
    const Vector v = (Vector(2) << 3, -4).finished();
    CHECK(linalg::dual_norm(v, NormExponent(1)) == doctest::Approx(4));
    CHECK(linalg::dual_norm(v, NormExponent(2)) == doctest::Approx(5));
    CHECK(linalg::dual_norm(v, NormExponent::infinity()) == doctest::Approx(7));
    CHECK(linalg::lq_norm(v, NormExponent(1)) == doctest::Approx(7));
}

TEST_CASE("dual norm matches the support function over the unit ball")
{
    std::mt19937_64 gen(3);
    std::normal_distribution<double> z;
    for (double q : {1.0, 2.0, 3.0}) {
        const NormExponent e(q);
        const Vector v = Vector::NullaryExpr(4, [&] { return z(gen); });
        double best = 0.0;
        for (int t = 0; t < 20000; ++t) {
            Vector x = Vector::NullaryExpr(4, [&] { return z(gen); });
            x /= linalg::lq_norm(x, e);
            best = std::max(best, v.dot(x));
        }
        const double d = linalg::dual_norm(v, e);
        CHECK(best <= d + 1e-12);
        CHECK(best >= 0.9 * d);
    }
}

TEST_CASE("invalid exponents are rejected")
{
    CHECK_THROWS_AS(NormExponent(0.5), InvalidInput);
    CHECK_THROWS_AS(NormExponent(std::nan("")), InvalidInput);
}

TEST_CASE("pseudoinverse of simple matrices")
{
    CHECK(linalg::pseudoinverse(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3)));
    CHECK(linalg::pseudoinverse(Matrix::Zero(2, 2)).norm() == 0.0);
    const Matrix D3 = rows({{-1, 1, 0}, {0, -1, 1}, {0, 0, 0}});
    CHECK((linalg::pseudoinverse(D3) - linalg::fused_pinv(3)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((pinv_by_least_squares(D3) - linalg::fused_pinv(3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Penrose conditions on random rank-deficient matrices")
{
    std::mt19937_64 gen(11);
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> dim(1, 12);
    for (int t = 0; t < 50; ++t) {
        const int m = dim(gen), n = dim(gen), r = std::min({m, n, dim(gen)});
        const Matrix A = Matrix::NullaryExpr(m, r, [&] { return z(gen); }) *
                         Matrix::NullaryExpr(r, n, [&] { return z(gen); });
        const Matrix P = linalg::pseudoinverse(A);
        CHECK((A * P * A - A).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((P * A * P - P).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(((A * P).transpose() - A * P).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(((P * A).transpose() - P * A).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((P - pinv_by_least_squares(A)).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("difference matrices")
{
    CHECK(linalg::difference_matrix(3, 1) == rows({{-1, 1, 0}, {0, -1, 1}, {0, 0, 0}}));
    CHECK(linalg::difference_matrix(2, 1) == rows({{-1, 1}, {0, 0}}));
    const Matrix D4 = linalg::difference_matrix(4, 1);
    CHECK(linalg::difference_matrix(4, 2) == D4 * D4);
    CHECK(linalg::difference_matrix(5, 3) == linalg::difference_matrix(5, 1) * linalg::difference_matrix(5, 1) *
                                                 linalg::difference_matrix(5, 1));
}

TEST_CASE("explicit fused pseudoinverse")
{
    CHECK((linalg::fused_pinv(3) - rows({{-2. / 3, -1. / 3, 0}, {1. / 3, -1. / 3, 0}, {1. / 3, 2. / 3, 0}}))
              .cwiseAbs()
              .maxCoeff() < 1e-15);
    CHECK((linalg::fused_pinv(2) - rows({{-0.5, 0}, {0.5, 0}})).cwiseAbs().maxCoeff() < 1e-15);
    for (int p = 2; p <= 20; ++p) {
        const Matrix D = linalg::difference_matrix(p, 1);
        CHECK((linalg::fused_pinv(p) - pinv_by_least_squares(D)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("partition identity and default projections")
{
    const Matrix I3 = Matrix::Identity(3, 3);
    CHECK(linalg::verify_partition({{I3, I3}}, 1e-12));

    Matrix A = Matrix::Zero(3, 3), B = Matrix::Zero(3, 3);
    A(0, 0) = A(1, 1) = 1;
    B(2, 2) = 1;
    CHECK(linalg::verify_partition({{A, I3}, {B, I3}}, 1e-12));

    Matrix G1 = Matrix::Zero(3, 3), G2 = Matrix::Zero(3, 3);
    G1(0, 0) = G1(1, 1) = 1;
    G2(1, 1) = G2(2, 2) = 1;
    CHECK_FALSE(linalg::verify_partition({{G1, I3}, {G2, I3}}, 1e-12));
    const auto P = linalg::default_projections({G1, G2});
    REQUIRE(P.size() == 2);
    CHECK(P[0] == Vector((Vector(3) << 1, 1, 0).finished()).asDiagonal().toDenseMatrix());
    CHECK(P[1] == Vector((Vector(3) << 0, 0, 1).finished()).asDiagonal().toDenseMatrix());
    CHECK(linalg::verify_partition({{G1, P[0]}, {G2, P[1]}}, 1e-12));

    const auto single = linalg::default_projections({I3});
    CHECK(single[0] == I3);
    const auto disjoint = linalg::default_projections({A, B});
    CHECK(disjoint[0] == I3);
    CHECK(disjoint[1] == I3);
}

TEST_CASE("common kernel detection")
{
    Matrix G1 = Matrix::Zero(3, 3);
    G1(0, 0) = 1;
    CHECK_FALSE(linalg::kernels_intersect_trivially({G1}));
    CHECK_THROWS_AS(linalg::default_projections({G1}), KernelIntersectionError);
    CHECK_FALSE(linalg::kernels_intersect_trivially({linalg::difference_matrix(4, 1)}));
    CHECK(linalg::kernels_intersect_trivially({Matrix::Identity(4, 4)}));
}
