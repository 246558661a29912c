#include <pblab/experiments.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <pblab/errors.hpp>
#include <pblab/rng.hpp>

namespace pblab {
namespace {

constexpr std::uint64_t kDesignStream = 0;
constexpr std::uint64_t kNoiseStream = 1;

bool identity_design_label(const std::string& label) { return label == "fused" || label == "trend-filter"; }

std::string noise_label(NoiseKind kind) { return kind == NoiseKind::Gaussian ? "gaussian" : "student_t"; }

double slope_lambda_default() { return 4.0 + std::sqrt(2.0) + 0.01; }

} // namespace

void ExperimentConfig::validate() const
{
    if (!is_catalog_label(estimator)) throw InvalidInput("unknown estimator '" + estimator + "'");
    if (n < 2) throw InvalidInput("n must be >= 2");
    if (p < 1) throw InvalidInput("p must be >= 1");
    if (trials < 1) throw InvalidInput("trials must be >= 1");
    if (!(design.rho >= 0.0 && design.rho < 1.0)) throw InvalidInput("rho must lie in [0, 1)");
    if (group_size < 1) throw InvalidInput("group_size must be >= 1");
    if (trend_order < 1 || trend_order > 3) throw InvalidInput("trend_order must be 1, 2 or 3");
    if (noise.kind == NoiseKind::Gaussian && !(noise.sigma > 0.0)) throw InvalidInput("noise sigma must be > 0");
    if (noise.kind == NoiseKind::StudentT && (!(noise.df > 0.0) || !(noise.sigma > 0.0))) {
        throw InvalidInput("student t noise needs df > 0 and scale > 0");
    }
    if (!std::isfinite(noise.sigma)) throw InvalidInput("noise sigma must be finite");
    const int pe = effective_p();
    if (beta_star.custom) {
        if (beta_star.custom->size() != pe) throw DimensionMismatch("custom beta_star has the wrong length");
    } else if (beta_star.s < 0 || beta_star.s > pe) {
        throw InvalidInput("beta_star sparsity must lie in [0, p]");
    }
    if (design.kind == DesignKind::Custom && !identity_design_label(estimator)) {
        if (design.custom.rows() != n || design.custom.cols() != p) {
            throw DimensionMismatch("custom design must be n x p");
        }
    }
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        if (!(c(j) > 0.0)) throw InvalidInput("constants c_j must be positive");
    }
    if (!(solver.tol > 0.0) || solver.max_iter < 1) throw InvalidInput("invalid solver settings");
}

int ExperimentConfig::effective_p() const { return identity_design_label(estimator) ? n : p; }

Matrix generate_design(int n, int p, double rho, std::uint64_t seed)
{
    if (n < 1 || p < 1) throw InvalidInput("generate_design: n and p must be >= 1");
    if (!(rho >= 0.0 && rho < 1.0)) throw InvalidInput("generate_design: rho must lie in [0, 1)");
    std::normal_distribution<double> normal;
    const double a = std::sqrt(rho), b = std::sqrt(1.0 - rho);
    rng::Engine eng(seed);
    Vector common(n);
    for (int i = 0; i < n; ++i) common(i) = normal(eng);

    Matrix X(n, p);
    for (int j = 0; j < p; ++j) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt > 0) eng.seed(rng::splitmix64(seed + attempt * 0x632BE59BD9B4E019ULL + static_cast<std::uint64_t>(j)));
            for (int i = 0; i < n; ++i) X(i, j) = a * common(i) + b * normal(eng);
            const double nrm = X.col(j).norm();
            if (nrm > 0.0 && std::isfinite(nrm)) {
                X.col(j) *= std::sqrt(static_cast<double>(n)) / nrm;
                break;
            }
        }
    }
    return X;
}

Vector generate_noise(const NoiseSpec& spec, int n, std::uint64_t seed)
{
    if (n < 1) throw InvalidInput("generate_noise: n must be >= 1");
    rng::Engine eng(seed);
    Vector eps(n);
    if (spec.kind == NoiseKind::Gaussian) {
        if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma)) {
            throw InvalidInput("gaussian noise needs sigma > 0");
        }
        std::normal_distribution<double> dist(0.0, spec.sigma);
        for (int i = 0; i < n; ++i) eps(i) = dist(eng);
    } else {
        if (!(spec.df > 0.0) || !(spec.sigma > 0.0)) throw InvalidInput("student t noise needs df > 0 and scale > 0");
        std::student_t_distribution<double> dist(spec.df);
        for (int i = 0; i < n; ++i) eps(i) = spec.sigma * dist(eng);
    }
    return eps;
}

Vector make_beta_star(int p, int s, double amplitude)
{
    if (p < 1 || s < 0 || s > p) throw InvalidInput("make_beta_star: need 0 <= s <= p");
    if (!std::isfinite(amplitude)) throw InvalidInput("make_beta_star: amplitude must be finite");
    Vector b = Vector::Zero(p);
    b.head(s).setConstant(amplitude);
    return b;
}

std::vector<CatalogEntry> catalog()
{
    return {
        {"lasso", "l1 penalty, squared loss", "{}"},
        {"sqrt-lasso", "l1 penalty, square-root loss", "{}"},
        {"group-lasso", "l2 norms of contiguous groups, squared loss",
         R"({"group_size": {"type": "integer", "minimum": 1, "default": 5}})"},
        {"group-sqrt-lasso", "l2 norms of contiguous groups, square-root loss",
         R"({"group_size": {"type": "integer", "minimum": 1, "default": 5}})"},
        {"elastic-net", "l1 plus ridge penalty, solved as an augmented lasso; ridge level from the noise",
         R"({"lambda2": {"type": "number", "minimum": 0, "description": "solve only; campaigns use the oracle value"}})"},
        {"slope", "sorted l1 penalty with weights 2 sigma sqrt(n log(2p/j))",
         R"({"sigma": {"type": "number", "exclusiveMinimum": 0, "default": 1}})"},
        {"fused", "l1 norm of first differences; identity design, p = n", "{}"},
        {"trend-filter", "l1 norm of l-th order differences; identity design, p = n",
         R"({"trend_order": {"type": "integer", "enum": [1, 2, 3], "default": 2}})"},
    };
}

bool is_catalog_label(const std::string& label)
{
    const auto cat = catalog();
    return std::any_of(cat.begin(), cat.end(), [&](const CatalogEntry& e) { return e.label == label; });
}

EstimatorSpec make_catalog_spec(const std::string& label, int p, int n, double sigma, int group_size, int trend_order)
{
    if (label == "lasso") return make_lasso(p, 1.0);
    if (label == "sqrt-lasso") return make_sqrt_lasso(p, 1.0);
    if (label == "group-lasso") return make_group_lasso(p, contiguous_groups(p, group_size), 1.0);
    if (label == "group-sqrt-lasso") {
        return make_group_lasso(p, contiguous_groups(p, group_size), 1.0, LinkFunction::square_root());
    }
    if (label == "elastic-net") {
        auto spec = make_lasso(p, 1.0);
        spec.name = "elastic-net";
        return spec;
    }
    if (label == "slope") return make_slope(slope_bh_weights(p, n, sigma), slope_lambda_default());
    if (label == "fused") return make_fused(p, 1.0);
    if (label == "trend-filter") return make_trend_filter(p, trend_order, 1.0);
    throw InvalidInput("unknown estimator '" + label + "'");
}

Problem draw_problem(const ExperimentConfig& cfg, int trial)
{
    const auto t = static_cast<std::uint64_t>(trial);
    const int n = cfg.n, p = cfg.effective_p();
    Matrix X;
    if (identity_design_label(cfg.estimator) || cfg.design.kind == DesignKind::Identity) {
        if (n != p) throw DimensionMismatch("identity design needs p = n");
        X = Matrix::Identity(n, n);
    } else if (cfg.design.kind == DesignKind::Custom) {
        X = cfg.design.custom;
    } else {
        X = generate_design(n, p, cfg.design.rho, rng::substream_seed(cfg.seed, t, kDesignStream));
    }
    Vector eps = generate_noise(cfg.noise, n, rng::substream_seed(cfg.seed, t, kNoiseStream));
    Vector beta = cfg.beta_star.custom ? *cfg.beta_star.custom : make_beta_star(p, cfg.beta_star.s, cfg.beta_star.amplitude);
    return Problem::from_truth(std::move(X), std::move(beta), std::move(eps), rng::substream_seed(cfg.seed, t, 2));
}

TunedFit fit_oracle(const ExperimentConfig& cfg, const Problem& problem, const std::optional<Vector>& warm)
{
    const auto& truth = problem.require_truth();
    EstimatorSpec spec = make_catalog_spec(cfg.estimator, static_cast<int>(problem.p()), static_cast<int>(problem.n()),
                                           cfg.noise.sigma, cfg.group_size, cfg.trend_order);
    Problem solved = problem;
    double lambda2 = 0.0;
    if (cfg.estimator == "elastic-net") {
        lambda2 = elastic_net_lambda2(problem.X, truth.eps, truth.beta_star);
        auto aug = make_elastic_net_augmented(problem, 1.0, lambda2);
        spec = std::move(aug.first);
        solved = std::move(aug.second);
    }
    const auto k = static_cast<Eigen::Index>(spec.num_terms());
    Vector c = cfg.c.size() == 0 ? Vector::Ones(k) : cfg.c;
    if (c.size() == 1 && k > 1) c = Vector::Constant(k, c(0));

    const auto start = std::chrono::steady_clock::now();
    OracleTuning tuning = oracle_lambda(spec, solved, c, cfg.solver, cfg.fixed_point);
    spec = spec.with_lambdas(tuning.lambda);
    Solution solution = tuning.solution ? *tuning.solution : solve(spec, solved, cfg.solver, warm);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return TunedFit{std::move(spec), std::move(solved), std::move(tuning), std::move(solution), lambda2, ms};
}

TrialRecord record_fit(const ExperimentConfig& cfg, const TunedFit& fit, int trial)
{
    TrialRecord rec;
    rec.trial = trial;
    rec.estimator = cfg.estimator;
    rec.n = cfg.n;
    rec.p = cfg.effective_p();
    rec.rho = identity_design_label(cfg.estimator) ? 0.0 : cfg.design.rho;
    rec.noise = noise_label(cfg.noise.kind);
    rec.sigma = cfg.noise.sigma;
    rec.lambda = fit.tuning.lambda;
    if (cfg.estimator == "elastic-net") {
        rec.lambda.conservativeResize(rec.lambda.size() + 1);
        rec.lambda(rec.lambda.size() - 1) = fit.lambda2;
    }
    rec.kkt_residual = fit.solution.kkt_residual;
    rec.fp_residual = fit.tuning.fixed_point_residual;
    rec.solver_iterations = fit.solution.iterations;
    rec.fp_iterations = fit.tuning.iterations;
    rec.solve_ms = fit.solve_ms;
    rec.dual_norm_sum = fit.tuning.dual_terms.sum();
    if (!fit.solution.converged) throw NonConvergence("solver did not reach the KKT tolerance");

    CheckOptions opts;
    opts.tol = cfg.solver.tol;
    opts.candidates.push_back({"estimate", fit.solution.beta});
    const auto s2 = check_bound(fit.spec, fit.problem, fit.tuning, fit.solution, BoundMode::Special2, opts);
    rec.lhs = s2.lhs;
    rec.allowance = s2.allowance;
    rec.rhs_special2 = s2.rhs;
    rec.holds_special2 = s2.holds && s2.certified;
    if ((fit.tuning.c.array() == 1.0).all()) {
        const auto s1 = check_bound(fit.spec, fit.problem, fit.tuning, fit.solution, BoundMode::Special1, opts);
        rec.rhs_special1 = s1.rhs;
        rec.holds_special1 = s1.holds && s1.certified;
    }
    const auto th = check_bound(fit.spec, fit.problem, fit.tuning, fit.solution, BoundMode::Theorem, opts);
    rec.rhs_theorem_u05 = th.rhs;
    rec.holds_theorem_u05 = th.holds && th.certified;
    return rec;
}

TrialRecord run_trial(const ExperimentConfig& cfg, int trial)
{
    try {
        return record_fit(cfg, fit_oracle(cfg, draw_problem(cfg, trial)), trial);
    } catch (const Error& e) {
        TrialRecord rec;
        rec.trial = trial;
        rec.estimator = cfg.estimator;
        rec.n = cfg.n;
        rec.p = cfg.effective_p();
        rec.rho = identity_design_label(cfg.estimator) ? 0.0 : cfg.design.rho;
        rec.noise = noise_label(cfg.noise.kind);
        rec.sigma = cfg.noise.sigma;
        rec.failed = true;
        rec.error = e.what();
        return rec;
    }
}

void parallel_for(int count, int jobs, const std::function<void(int)>& f)
{
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!first) first = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

std::vector<TrialRecord> run_monte_carlo(const ExperimentConfig& cfg, int jobs)
{
    cfg.validate();
    std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials));
    parallel_for(cfg.trials, jobs, [&](int t) { records[static_cast<std::size_t>(t)] = run_trial(cfg, t); });
    return records;
}

CampaignSummary summarize(const std::vector<TrialRecord>& records)
{
    CampaignSummary s;
    s.trials = static_cast<int>(records.size());
    for (const auto& r : records) {
        if (r.failed) ++s.failures;
        else if (r.holds_special2) ++s.certified;
    }
    s.failure_rate = s.trials ? static_cast<double>(s.failures) / s.trials : 0.0;
    s.passed = s.trials > 0 && s.failure_rate <= 0.01 && s.certified == s.trials - s.failures;
    return s;
}

double median(std::vector<double> v)
{
    if (v.empty()) return std::nan("");
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

std::vector<RateRow> rate_study_lasso(const std::vector<int>& ns, int trials, double sigma, double rho,
                                      std::uint64_t seed, int jobs)
{
    std::vector<RateRow> rows;
    for (int n : ns) {
        ExperimentConfig cfg;
        cfg.estimator = "lasso";
        cfg.n = n;
        cfg.p = 2 * n;
        cfg.design.rho = rho;
        cfg.noise.sigma = sigma;
        cfg.trials = trials;
        cfg.seed = rng::splitmix64(seed ^ static_cast<std::uint64_t>(n));
        const auto records = run_monte_carlo(cfg, jobs);

        RateRow row;
        row.n = n;
        row.p = cfg.p;
        row.trials = trials;
        const double logp = std::log(static_cast<double>(cfg.p));
        const double l1 = cfg.beta_star.s * std::abs(cfg.beta_star.amplitude);
        std::vector<double> lam_ratio, lhs_ratio;
        for (const auto& r : records) {
            if (r.failed) {
                ++row.failures;
                row.within_special2 = false;
                continue;
            }
            lam_ratio.push_back(r.lambda(0) / (sigma * std::sqrt(n * logp)));
            lhs_ratio.push_back(r.lhs / (sigma * std::sqrt(logp / n) * l1));
            row.within_special2 = row.within_special2 && r.lhs <= r.rhs_special2 + r.allowance;
            if (r.rhs_special2 > 0.0) row.max_lhs_over_special2 = std::max(row.max_lhs_over_special2, r.lhs / r.rhs_special2);
        }
        row.median_lambda_ratio = median(lam_ratio);
        row.median_lhs_ratio = median(lhs_ratio);
        rows.push_back(row);
    }
    return rows;
}

SigmaStudy sigma_invariance_study_sqrt_lasso(int n, int p, double l1_norm, const std::vector<double>& sigmas,
                                             int trials, std::uint64_t seed, int jobs)
{
    if (sigmas.empty() || trials < 1) throw InvalidInput("sigma study needs sigmas and trials >= 1");
    const int s = std::min(5, p);
    const Vector beta = make_beta_star(p, s, l1_norm / s);
    const auto m = sigmas.size();
    std::vector<std::vector<double>> lam(m, std::vector<double>(static_cast<std::size_t>(trials), 0.0));
    std::vector<double> control_err(static_cast<std::size_t>(trials), 0.0);
    std::vector<int> failed(static_cast<std::size_t>(trials), 0);

    parallel_for(trials, jobs, [&](int t) {
        const auto tt = static_cast<std::uint64_t>(t);
        const Matrix X = generate_design(n, p, 0.0, rng::substream_seed(seed, tt, kDesignStream));
        const Vector eps0 = generate_noise(NoiseSpec{}, n, rng::substream_seed(seed, tt, kNoiseStream));
        const auto sqrt_spec = make_sqrt_lasso(p, 1.0);
        const auto lasso_spec = make_lasso(p, 1.0);
        const Vector one = Vector::Ones(1);
        try {
            const double base = oracle_lambda(lasso_spec, Problem::from_truth(X, beta, eps0), one).lambda(0);
            double err = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                const Problem pb = Problem::from_truth(X, beta, sigmas[k] * eps0);
                lam[k][static_cast<std::size_t>(t)] = oracle_lambda(sqrt_spec, pb, one).lambda(0);
                const double ctl = oracle_lambda(lasso_spec, pb, one).lambda(0);
                err = std::max(err, std::abs(ctl - sigmas[k] * base) / (sigmas[k] * base));
            }
            control_err[static_cast<std::size_t>(t)] = err;
        } catch (const Error&) {
            failed[static_cast<std::size_t>(t)] = 1;
        }
    });

    SigmaStudy study;
    for (int f : failed) study.failures += f;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> vals;
        for (int t = 0; t < trials; ++t) {
            if (!failed[static_cast<std::size_t>(t)]) vals.push_back(lam[k][static_cast<std::size_t>(t)]);
        }
        SigmaRow row;
        row.sigma = sigmas[k];
        row.median_lambda = median(vals);
        row.median_lambda_over_sqrt_log_p = row.median_lambda / std::sqrt(std::log(static_cast<double>(p)));
        lo = std::min(lo, row.median_lambda);
        hi = std::max(hi, row.median_lambda);
        study.rows.push_back(row);
    }
    study.ratio = hi / lo;
    study.control_max_rel_error = *std::max_element(control_err.begin(), control_err.end());
    return study;
}

} // namespace pblab
