#include <doctest.h>

#include <cmath>

#include <pblab/errors.hpp>
#include <pblab/experiments.hpp>
#include <pblab/rng.hpp>

using namespace pblab;

TEST_CASE("design generator")
{
    const Matrix X = generate_design(40, 6, 0.0, 99);
    for (int j = 0; j < 6; ++j) CHECK(X.col(j).squaredNorm() == doctest::Approx(40).epsilon(1e-12));
    CHECK(generate_design(40, 6, 0.0, 99) == X);
    CHECK(generate_design(40, 6, 0.0, 100) != X);

    const Matrix C = generate_design(1000, 2, 0.9, 7);
    const Vector a = C.col(0).array() - C.col(0).mean(), b = C.col(1).array() - C.col(1).mean();
    const double corr = a.dot(b) / (a.norm() * b.norm());
    CHECK(corr > 0.8);
    CHECK(corr < 0.97);
    CHECK_THROWS_AS(generate_design(10, 2, 1.0, 1), InvalidInput);
}

TEST_CASE("noise and truth generators")
{
    NoiseSpec zero;
    zero.sigma = 0.0;
    CHECK_THROWS_AS(generate_noise(zero, 10, 1), InvalidInput);
    NoiseSpec t;
    t.kind = NoiseKind::StudentT;
    t.df = 3;
    const Vector e = generate_noise(t, 500, 3);
    CHECK(e.allFinite());
    CHECK(generate_noise(t, 500, 3) == e);
    CHECK(make_beta_star(6, 0, 1.0).norm() == 0.0);
    const Vector b = make_beta_star(6, 2, 1.5);
    CHECK(b(0) == 1.5);
    CHECK(b(1) == 1.5);
    CHECK(b.tail(4).norm() == 0.0);
}

TEST_CASE("seed substreams are distinct")
{
    CHECK(rng::substream_seed(1, 0, 0) != rng::substream_seed(1, 0, 1));
    CHECK(rng::substream_seed(1, 0, 0) != rng::substream_seed(1, 1, 0));
    CHECK(rng::substream_seed(1, 0, 0) != rng::substream_seed(2, 0, 0));
}

TEST_CASE("catalog registry")
{
    for (const char* label :
         {"lasso", "sqrt-lasso", "group-lasso", "group-sqrt-lasso", "elastic-net", "slope", "fused", "trend-filter"}) {
        CHECK(is_catalog_label(label));
    }
    CHECK(catalog().size() == 8);
    CHECK_FALSE(is_catalog_label("ridge"));
}

TEST_CASE("config validation")
{
    ExperimentConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.estimator = "ridge";
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.design.rho = 1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.estimator = "fused";
    cfg.p = 7;
    CHECK(cfg.effective_p() == cfg.n);
}

TEST_CASE("monte carlo runs are deterministic and thread-count independent")
{
    ExperimentConfig cfg;
    cfg.n = 30;
    cfg.p = 40;
    cfg.trials = 6;
    cfg.estimator = "sqrt-lasso";
    const auto a = run_monte_carlo(cfg, 1);
    const auto b = run_monte_carlo(cfg, 3);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].trial == static_cast<int>(i));
        CHECK(a[i].lambda == b[i].lambda);
        CHECK(a[i].lhs == b[i].lhs);
        CHECK(a[i].rhs_special2 == b[i].rhs_special2);
        CHECK_FALSE(a[i].failed);
    }
}

TEST_CASE("lasso campaign certifies every trial")
{
    ExperimentConfig cfg;
    cfg.n = 50;
    cfg.p = 200;
    cfg.trials = 500;
    const auto recs = run_monte_carlo(cfg, 2);
    const CampaignSummary s = summarize(recs);
    CHECK(s.trials == 500);
    CHECK(s.failures == 0);
    CHECK(s.certified == 500);
    CHECK(s.passed);
    for (const auto& r : recs) {
        CHECK(r.holds_special1);
        CHECK(r.holds_theorem_u05);
    }
}

TEST_CASE("zero-truth campaign")
{
    ExperimentConfig cfg;
    cfg.n = 40;
    cfg.p = 60;
    cfg.trials = 30;
    cfg.beta_star.s = 0;
    for (const char* est : {"lasso", "group-lasso", "slope"}) {
        cfg.estimator = est;
        for (const auto& r : run_monte_carlo(cfg, 2)) {
            CAPTURE(est);
            CHECK_FALSE(r.failed);
            CHECK(r.rhs_special2 == 0.0);
            CHECK(r.lhs <= r.allowance);
        }
    }
}

TEST_CASE("identity-link tuning is linear in sigma")
{
    ExperimentConfig cfg;
    cfg.n = 30;
    cfg.p = 20;
    cfg.trials = 3;
    const auto one = run_monte_carlo(cfg, 1);
    cfg.noise.sigma = 2.0;
    const auto two = run_monte_carlo(cfg, 1);
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(two[i].lambda(0) == doctest::Approx(2 * one[i].lambda(0)).epsilon(1e-14));
    }
}

TEST_CASE("small rate and sigma studies")
{
    const auto rows = rate_study_lasso({30, 60}, 10, 1.0, 0.0, 5, 2);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.p == 2 * r.n);
        CHECK(r.within_special2);
        CHECK(r.max_lhs_over_special2 <= 1.0);
        CHECK(r.median_lambda_ratio > 0.5);
        CHECK(r.median_lambda_ratio < 2.5);
    }
    const SigmaStudy s = sigma_invariance_study_sqrt_lasso(80, 40, 1.0, {0.5, 1.0, 2.0}, 8, 3, 2);
    CHECK(s.failures == 0);
    CHECK(s.ratio >= 1.0);
    CHECK(s.ratio < 1.25);
    CHECK(s.control_max_rel_error <= 1e-10);
}

TEST_CASE("median")
{
    CHECK(median({3, 1, 2}) == 2);
    CHECK(median({4, 1, 2, 3}) == 2.5);
}
