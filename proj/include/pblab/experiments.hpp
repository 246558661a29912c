#pragma once
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <pblab/bounds.hpp>
#include <pblab/model.hpp>
#include <pblab/solvers.hpp>
#include <pblab/tuning.hpp>

namespace pblab {

enum class DesignKind { Equicorrelated, Identity, Custom };
enum class NoiseKind { Gaussian, StudentT };

struct DesignSpec
{
    DesignKind kind = DesignKind::Equicorrelated;
    double rho = 0.0;
    Matrix custom;  ///< used by DesignKind::Custom
};

struct NoiseSpec
{
    NoiseKind kind = NoiseKind::Gaussian;
    double sigma = 1.0;  ///< standard deviation (gaussian) or scale (student t)
    double df = 3.0;     ///< student t only
};

struct BetaStarSpec
{
    int s = 5;
    double amplitude = 1.0;
    std::optional<Vector> custom;
};

struct ExperimentConfig
{
    std::string estimator = "lasso";
    int group_size = 5;       ///< group-lasso, group-sqrt-lasso
    int trend_order = 2;      ///< trend-filter
    int n = 50;
    int p = 100;              ///< ignored by fused / trend-filter, which use p = n and X = I
    DesignSpec design;
    NoiseSpec noise;
    BetaStarSpec beta_star;
    int trials = 100;
    Vector c;                 ///< empty means c_j = 1 for every term
    std::uint64_t seed = 1;
    SolverConfig solver;
    FixedPointConfig fixed_point;

    /// Throws InvalidInput on out-of-range settings.
    void validate() const;
    /// Dimension actually used (p = n for identity-design estimators).
    int effective_p() const;
};

struct TrialRecord
{
    int trial = 0;
    std::string estimator;
    int n = 0;
    int p = 0;
    double rho = 0.0;
    std::string noise;
    double sigma = 0.0;
    Vector lambda;            ///< tuning of the solved problem; elastic net appends lambda2
    double lhs = 0.0;
    double rhs_special1 = 0.0;
    double rhs_special2 = 0.0;
    double rhs_theorem_u05 = 0.0;
    double allowance = 0.0;
    bool holds_special1 = false;
    bool holds_special2 = false;
    bool holds_theorem_u05 = false;
    double kkt_residual = 0.0;
    double fp_residual = 0.0;
    int solver_iterations = 0;
    int fp_iterations = 0;
    double solve_ms = 0.0;
    double dual_norm_sum = 0.0;   ///< sum_j d_j, used by the rate studies
    bool failed = false;
    std::string error;
};

struct CampaignSummary
{
    int trials = 0;
    int failures = 0;
    int certified = 0;            ///< holds_special2 among non-failed trials
    double failure_rate = 0.0;
    bool passed = false;          ///< failure rate <= 1% and every completed trial certified
};

struct CatalogEntry
{
    std::string label;
    std::string description;
    std::string parameters;       ///< JSON object describing the accepted parameters
};

/// Rows iid N(0, (1-rho) I + rho 11^T), each column rescaled to squared norm n.
Matrix generate_design(int n, int p, double rho, std::uint64_t seed);
/// Gaussian noise rejects sigma = 0; student t needs df > 0.
Vector generate_noise(const NoiseSpec& spec, int n, std::uint64_t seed);
/// s leading entries equal to amplitude, the rest 0.
Vector make_beta_star(int p, int s, double amplitude);

std::vector<CatalogEntry> catalog();
bool is_catalog_label(const std::string& label);

/// Catalog estimator on p coordinates with unit tuning parameters.
/// n and sigma only enter the slope weights.
EstimatorSpec make_catalog_spec(const std::string& label, int p, int n, double sigma, int group_size = 5,
                                int trend_order = 2);

/// Draws the design, noise and truth of one trial.
Problem draw_problem(const ExperimentConfig& cfg, int trial);

/**
 * Oracle tuning (c from the config) and solve for a catalog estimator.
 * The elastic net is reduced to a lasso on augmented data with
 * lambda2 = argmin ||X^T eps - lambda2 beta*||_inf.
 */
struct TunedFit
{
    EstimatorSpec spec;
    Problem problem;          ///< the problem actually solved
    OracleTuning tuning;
    Solution solution;
    double lambda2 = 0.0;
    double solve_ms = 0.0;
};
TunedFit fit_oracle(const ExperimentConfig& cfg, const Problem& problem, const std::optional<Vector>& warm = std::nullopt);

/**
 * Bound checks (special2, special1 when every c_j = 1, theorem at u = 1/2) for
 * a finished fit. Throws NonConvergence if the solve did not converge.
 */
TrialRecord record_fit(const ExperimentConfig& cfg, const TunedFit& fit, int trial);

/// Draw, fit and check one trial; library errors are caught into rec.failed / rec.error.
TrialRecord run_trial(const ExperimentConfig& cfg, int trial);

/// Trials run on `jobs` threads; records come back in trial order.
std::vector<TrialRecord> run_monte_carlo(const ExperimentConfig& cfg, int jobs = 1);
CampaignSummary summarize(const std::vector<TrialRecord>& records);

struct RateRow
{
    int n = 0;
    int p = 0;
    int trials = 0;
    double median_lambda_ratio = 0.0;  ///< lambda / (sigma sqrt(n log p))
    double median_lhs_ratio = 0.0;     ///< lhs / (sigma sqrt(log(p)/n) ||beta*||_1)
    double max_lhs_over_special2 = 0.0;
    bool within_special2 = true;       ///< lhs <= special2 rhs + allowance in every trial
    int failures = 0;
};

/// Lasso, p = 2n, gaussian noise, c = 1.
std::vector<RateRow> rate_study_lasso(const std::vector<int>& ns, int trials, double sigma, double rho,
                                      std::uint64_t seed, int jobs = 1);

struct SigmaRow
{
    double sigma = 0.0;
    double median_lambda = 0.0;
    double median_lambda_over_sqrt_log_p = 0.0;
};

struct SigmaStudy
{
    std::vector<SigmaRow> rows;
    double ratio = 0.0;                   ///< max / min of the median lambdas
    double control_max_rel_error = 0.0;   ///< lasso: |lambda(sigma) - sigma lambda(1)| / (sigma lambda(1))
    int failures = 0;
};

/**
 * Square-root lasso with a shared standardized noise draw scaled by each
 * sigma, ||beta*||_1 = l1_norm spread over 5 leading coordinates.
 */
SigmaStudy sigma_invariance_study_sqrt_lasso(int n, int p, double l1_norm, const std::vector<double>& sigmas,
                                             int trials, std::uint64_t seed, int jobs = 1);

/// Runs f(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& f);

double median(std::vector<double> v);

} // namespace pblab
