#include <doctest.h>

#include <cmath>
#include <random>

#include <pblab/errors.hpp>
#include <pblab/experiments.hpp>
#include <pblab/tuning.hpp>

using namespace pblab;

namespace {

Problem truth_problem(int n, int p, std::uint64_t seed, double sigma = 1.0)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    Matrix X = Matrix::NullaryExpr(n, p, [&] { return z(gen); });
    Vector b = Vector::Zero(p);
    for (int i = 0; i < std::min(3, p); ++i) b(i) = 0.5;
    Vector e = sigma * Vector::NullaryExpr(n, [&] { return z(gen); });
    return Problem::from_truth(X, b, e);
}

} // namespace

TEST_CASE("dual noise terms")
{
    const Problem p = truth_problem(20, 10, 1);
    const Vector v = p.X.transpose() * p.truth->eps;
    CHECK(dual_noise_terms(make_lasso(10, 1.0), p.X, p.truth->eps)(0) == doctest::Approx(v.cwiseAbs().maxCoeff()));

    const auto group = make_group_lasso(10, contiguous_groups(10, 4), 1.0);
    const Vector d = dual_noise_terms(group, p.X, p.truth->eps);
    REQUIRE(d.size() == 3);
    CHECK(d(0) == doctest::Approx(v.segment(0, 4).norm()));
    CHECK(d(1) == doctest::Approx(v.segment(4, 4).norm()));
    CHECK(d(2) == doctest::Approx(v.segment(8, 2).norm()));

    const Matrix I = Matrix::Identity(6, 6);
    const Vector eps = p.truth->eps.head(6);
    const Vector w = linalg::fused_pinv(6).transpose() * eps;
    CHECK(dual_noise_terms(make_fused(6, 1.0), I, eps)(0) == doctest::Approx(w.cwiseAbs().maxCoeff()));

    CHECK_THROWS_AS(dual_noise_terms(make_lasso(10, 1.0), p.X, Vector::Zero(20)), AssumptionViolated);
}

TEST_CASE("identity-link oracle tuning is closed form")
{
    const Problem p = truth_problem(30, 12, 2);
    const double d = (p.X.transpose() * p.truth->eps).cwiseAbs().maxCoeff();
    const OracleTuning t = oracle_lambda(make_lasso(12, 1.0), p, Vector::Ones(1));
    CHECK(t.lambda(0) == doctest::Approx(2 * d).epsilon(1e-14));
    CHECK(t.iterations == 0);
    const OracleTuning t3 = oracle_lambda(make_lasso(12, 1.0), p, Vector::Constant(1, 3.0));
    CHECK(t3.lambda(0) == doctest::Approx(6 * d).epsilon(1e-14));
}

TEST_CASE("square-root oracle tuning is the rescaled identity-link tuning")
{
    // At the fixed point the square-root estimate equals the squared-loss
    // estimate at 2 c .* d, and lambda = c .* d / ||residual||.
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        const Problem p = truth_problem(40, 20, seed);
        for (const auto& [sq, id] : {std::pair{make_sqrt_lasso(20, 1.0), make_lasso(20, 1.0)},
                                     std::pair{make_group_lasso(20, contiguous_groups(20, 5), 1.0,
                                                                LinkFunction::square_root()),
                                               make_group_lasso(20, contiguous_groups(20, 5), 1.0)}}) {
            const auto k = static_cast<Eigen::Index>(sq.num_terms());
            const Vector c = Vector::Ones(k);
            const Vector d = dual_noise_terms(sq, p.X, p.truth->eps);
            SolverConfig tight;
            tight.tol = 1e-11;
            const Solution ref = solve(id.with_lambdas(2.0 * d), p, tight);
            const Vector expected = d / (p.Y - p.X * ref.beta).norm();
            const OracleTuning t = oracle_lambda(sq, p, c);
            CAPTURE(seed);
            CHECK(t.fixed_point_residual <= 1e-8);
            CHECK((t.lambda - expected).cwiseAbs().maxCoeff() / expected.cwiseAbs().maxCoeff() < 1e-6);
            CHECK(t.iterations <= 200);
            REQUIRE(t.solution);
            CHECK(fixed_point_residual(sq, p, t.lambda, c, d, t.solution->beta) <= 1e-8);
        }
    }
}

TEST_CASE("fixed-point budget exhaustion raises with a trace")
{
    const Problem p = truth_problem(40, 20, 6);
    FixedPointConfig fp;
    fp.max_iter = 1;
    fp.tol = 1e-15;
    try {
        oracle_lambda(make_sqrt_lasso(20, 1.0), p, Vector::Ones(1), {}, fp);
        FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
        CHECK(e.trace().size() >= 1);
    }
}

TEST_CASE("lambda_max")
{
    const Problem p = truth_problem(25, 8, 7);
    const double m = 2 * (p.X.transpose() * p.Y).cwiseAbs().maxCoeff();
    CHECK(lambda_max(make_lasso(8, 1.0), p)(0) == doctest::Approx(std::max(m, 1.0)));
    Problem big = p;
    big.Y *= 10.0;
    CHECK(lambda_max(make_lasso(8, 1.0), big)(0) == doctest::Approx(10 * std::max(m, 1.0)));
    // square root link: 2 g'(||Y||^2) = 1/||Y||
    CHECK(lambda_max(make_sqrt_lasso(8, 1.0), p)(0) ==
          doctest::Approx(std::max(m / (2 * p.Y.norm()), 1.0)));
    // the floor at 1
    Problem tiny = p;
    tiny.Y *= 1e-6;
    CHECK(lambda_max(make_lasso(8, 1.0), tiny)(0) == 1.0);
}

TEST_CASE("elastic-net ridge level minimizes the sup norm")
{
    const Problem p = truth_problem(30, 10, 9);
    const Vector v = p.X.transpose() * p.truth->eps;
    const Vector& b = p.truth->beta_star;
    const double l2 = elastic_net_lambda2(p.X, p.truth->eps, b);
    const double f = (v - l2 * b).cwiseAbs().maxCoeff();
    for (double t = 0; t <= 200; t += 0.01) CHECK(f <= (v - t * b).cwiseAbs().maxCoeff() + 1e-9);
    CHECK(elastic_net_lambda2(p.X, p.truth->eps, Vector::Zero(10)) == 0.0);
}

TEST_CASE("invalid constants")
{
    const Problem p = truth_problem(10, 5, 10);
    CHECK_THROWS_AS(oracle_lambda(make_lasso(5, 1.0), p, Vector::Zero(1)), InvalidInput);
    CHECK_THROWS_AS(oracle_lambda(make_lasso(5, 1.0), p, Vector::Ones(2)), DimensionMismatch);
}

TEST_CASE("an interpolating iterate pushes the square-root fixed point upward")
{
    // group square-root lasso with p > n whose starting tuning interpolates
    ExperimentConfig cfg;
    cfg.estimator = "group-sqrt-lasso";
    cfg.seed = 1019;
    const Problem p = draw_problem(cfg, 61);
    const EstimatorSpec spec = make_catalog_spec(cfg.estimator, cfg.p, cfg.n, 1.0);
    const OracleTuning t = oracle_lambda(spec, p, Vector::Ones(static_cast<Eigen::Index>(spec.num_terms())));
    CHECK(t.fixed_point_residual <= 1e-8);
    REQUIRE(t.solution);
    const double rn = (p.Y - p.X * t.solution->beta).norm();
    CHECK(rn > 0.0);
    CHECK((t.lambda - t.dual_terms / rn).cwiseAbs().maxCoeff() <= 1e-7 * t.lambda.maxCoeff());
}
