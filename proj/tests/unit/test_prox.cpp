#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <pblab/errors.hpp>
#include <pblab/prox.hpp>

using namespace pblab;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

double sorted_l1_brute(const Vector& x, const Vector& w)
{
    std::vector<double> a(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) a[i] = std::abs(x(i));
    std::sort(a.rbegin(), a.rend());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += w(static_cast<Eigen::Index>(i)) * a[i];
    return s;
}

} // namespace

TEST_CASE("soft thresholding")
{
    CHECK(prox::soft_threshold(vec({3, -1, 0.5}), 1.0) == vec({2, 0, 0}));
    const Vector v = vec({1.5, -2.25, 0.0});
    CHECK(prox::soft_threshold(v, 0.0) == v);
}

TEST_CASE("soft thresholding matches a one-dimensional grid search")
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-3, 3), tt(0, 2);
    for (int rep = 0; rep < 20; ++rep) {
        const double vi = u(gen), t = tt(gen);
        double best = 0.0, fbest = INFINITY;
        for (double x = -5; x <= 5; x += 1e-4) {
            const double f = 0.5 * (x - vi) * (x - vi) + t * std::abs(x);
            if (f < fbest) fbest = f, best = x;
        }
        CHECK(std::abs(prox::soft_threshold(Vector::Constant(1, vi), t)(0) - best) < 2e-4);
    }
}

TEST_CASE("group soft thresholding")
{
    CHECK(prox::group_soft_threshold(vec({3, 4}), 5.0).norm() == 0.0);
    const Vector g = prox::group_soft_threshold(vec({3, 4}), 2.5);
    CHECK(g(0) == doctest::Approx(1.5));
    CHECK(g(1) == doctest::Approx(2.0));
}

TEST_CASE("isotonic regression")
{
    const Vector y = vec({1, 3, 2, 0});
    const Vector f = prox::isotonic_nonincreasing(y);
    CHECK(f(0) == doctest::Approx(2));
    CHECK(f(1) == doctest::Approx(2));
    CHECK(f(2) == doctest::Approx(2));
    CHECK(f(3) == doctest::Approx(0));
}

TEST_CASE("slope prox with constant weights is soft thresholding")
{
    std::mt19937_64 gen(9);
    std::normal_distribution<double> z;
    const Vector v = Vector::NullaryExpr(7, [&] { return 2 * z(gen); });
    CHECK((prox::slope_prox(v, Vector::Constant(7, 0.8)) - prox::soft_threshold(v, 0.8)).cwiseAbs().maxCoeff() <
          1e-14);
}

TEST_CASE("slope prox matches a two-dimensional grid search")
{
    const Vector v = vec({3, 1}), w = vec({2, 1});
    double fbest = INFINITY;
    Vector best(2);
    for (double a = -4; a <= 4; a += 1e-3) {
        for (double b = -4; b <= 4; b += 1e-3) {
            const Vector x = vec({a, b});
            const double f = 0.5 * (x - v).squaredNorm() + sorted_l1_brute(x, w);
            if (f < fbest) fbest = f, best = x;
        }
    }
    const Vector p = prox::slope_prox(v, w);
    CHECK((p - best).cwiseAbs().maxCoeff() < 2e-3);
    CHECK(0.5 * (p - v).squaredNorm() + sorted_l1_brute(p, w) <= fbest + 1e-9);
}

TEST_CASE("sorted l1 norm and its dual")
{
    std::mt19937_64 gen(21);
    std::normal_distribution<double> z;
    const Vector w = vec({3, 2, 2, 0.5});
    for (int rep = 0; rep < 5; ++rep) {
        const Vector v = Vector::NullaryExpr(4, [&] { return z(gen); });
        CHECK(prox::sorted_l1_norm(v, w) == doctest::Approx(sorted_l1_brute(v, w)));
        // dual norm = max of v.x over the unit ball; vertices are signed permutations of
        // (1/sum_{j<=k} w_j) (1,..,1,0,..,0)
        double best = 0.0;
        std::vector<double> a(4);
        for (int i = 0; i < 4; ++i) a[i] = std::abs(v(i));
        std::sort(a.rbegin(), a.rend());
        double num = 0.0, den = 0.0;
        for (int k = 0; k < 4; ++k) {
            num += a[k];
            den += w(k);
            best = std::max(best, num / den);
        }
        CHECK(prox::sorted_l1_dual_norm(v, w) == doctest::Approx(best));
        // and never below v.x / ||x|| for random x
        for (int t = 0; t < 200; ++t) {
            const Vector x = Vector::NullaryExpr(4, [&] { return z(gen); });
            CHECK(v.dot(x) <= prox::sorted_l1_dual_norm(v, w) * prox::sorted_l1_norm(x, w) + 1e-12);
        }
    }
}

TEST_CASE("permutahedron projection")
{
    const Vector w = vec({3, 1});
    // points already in the hull stay put
    CHECK((prox::project_permutahedron(vec({2, 2}), w) - vec({2, 2})).norm() < 1e-12);
    // sum is forced to sum(w)
    const Vector p = prox::project_permutahedron(vec({10, 10}), w);
    CHECK(p.sum() == doctest::Approx(4));
    CHECK(p(0) == doctest::Approx(2));
    const Vector q = prox::project_permutahedron(vec({5, -5}), w);
    CHECK(q(0) == doctest::Approx(3));
    CHECK(q(1) == doctest::Approx(1));
}

TEST_CASE("slope weights must be non-increasing and positive")
{
    CHECK_THROWS_AS(prox::require_slope_weights(vec({1, 2})), InvalidInput);
    CHECK_THROWS_AS(prox::require_slope_weights(vec({1, 0})), InvalidInput);
    CHECK_NOTHROW(prox::require_slope_weights(vec({2, 2, 1})));
}
