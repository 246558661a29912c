#include <pblab/cli.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <pblab/bounds.hpp>
#include <pblab/errors.hpp>
#include <pblab/experiments.hpp>
#include <pblab/io.hpp>
#include <pblab/tuning.hpp>
#include <pblab/version.hpp>

namespace pblab::cli {
namespace {

namespace fs = std::filesystem;
using io::json;

struct Options
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "pblab_out";
    int jobs = 1;
    std::string estimator;
    std::string mode = "special2";
    std::string lambda;
    std::optional<double> lambda2;
    std::string data;
    double u = 0.5;
    bool timing = false;
};

/// Result of one command: exit code plus the files it wrote.
struct Outcome
{
    int code = kOk;
    std::vector<std::string> outputs;
};

std::shared_ptr<spdlog::logger> logger()
{
    static std::shared_ptr<spdlog::logger> log = [] {
        auto l = spdlog::stderr_color_mt("pblab");
        l->set_pattern("[%l] %v");
        return l;
    }();
    const char* env = std::getenv("PBLAB_LOG");
    const std::string level = env ? env : "error";
    if (level == "debug") {
        log->set_level(spdlog::level::debug);
    } else if (level == "info") {
        log->set_level(spdlog::level::info);
    } else {
        log->set_level(spdlog::level::err);
    }
    return log;
}

/// Config document (or {}) with command-line overrides applied, plus the expanded campaign.
struct Loaded
{
    json doc = json::object();
    std::vector<ExperimentConfig> configs;
};

Loaded load(const Options& o)
{
    Loaded l;
    if (!o.config.empty()) l.doc = io::read_json(o.config);
    if (!o.estimator.empty()) l.doc["estimator"] = o.estimator;
    if (o.seed) l.doc["seed"] = *o.seed;
    l.configs = io::campaign_from_json(l.doc);
    return l;
}

/// Problem from --data, or trial 0 of the configuration. Adjusts n and p to the data.
Problem load_problem(const Options& o, ExperimentConfig& cfg, json& invocation)
{
    if (o.data.empty()) return draw_problem(cfg, 0);
    const json doc = io::read_json(o.data);
    invocation["data"] = doc;
    Problem p = io::problem_from_json(doc);
    cfg.n = static_cast<int>(p.n());
    cfg.p = static_cast<int>(p.p());
    if (cfg.effective_p() != cfg.p) throw DimensionMismatch("data: " + cfg.estimator + " needs a square identity design");
    return p;
}

ExperimentConfig single(const Loaded& l)
{
    if (l.configs.size() != 1) throw InvalidInput("config: expected a single estimator, rho and noise setting");
    return l.configs.front();
}

Vector parse_lambda(const std::string& text, const EstimatorSpec& spec, const Problem& problem)
{
    const auto k = static_cast<Eigen::Index>(spec.num_terms());
    if (text.empty()) throw InvalidInput("--lambda: required");
    if (text == "max") return lambda_max(spec, problem);
    std::vector<double> values;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, text.find(';') != std::string::npos ? ';' : ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw InvalidInput("--lambda: cannot parse '" + item + "'");
        values.push_back(v);
    }
    if (values.size() == 1) return Vector::Constant(k, values[0]);
    if (static_cast<Eigen::Index>(values.size()) != k) {
        throw InvalidInput("--lambda: expected 1 or " + std::to_string(k) + " values");
    }
    return Eigen::Map<const Vector>(values.data(), k);
}

Outcome cmd_solve(const Options& o, json& invocation)
{
    Loaded l = load(o);
    ExperimentConfig cfg = single(l);
    invocation["config"] = l.doc;
    invocation["lambda"] = o.lambda;
    Problem problem = load_problem(o, cfg, invocation);
    EstimatorSpec spec = make_catalog_spec(cfg.estimator, static_cast<int>(problem.p()), static_cast<int>(problem.n()),
                                           cfg.noise.sigma, cfg.group_size, cfg.trend_order);
    json extra = json::object();
    if (cfg.estimator == "elastic-net") {
        const double l2 = o.lambda2.value_or(0.0);
        if (!(l2 >= 0.0)) throw InvalidInput("--lambda2: must be >= 0");
        invocation["lambda2"] = l2;
        auto aug = make_elastic_net_augmented(problem, 1.0, l2);
        spec = std::move(aug.first);
        problem = std::move(aug.second);
        extra["lambda2"] = l2;
    } else if (o.lambda2) {
        throw InvalidInput("--lambda2: only used by elastic-net");
    }
    const Vector lambda = parse_lambda(o.lambda, spec, problem);
    logger()->info("solve {} with n={}, p={}", cfg.estimator, problem.n(), problem.p());
    const Solution sol = solve(spec.with_lambdas(lambda), problem, cfg.solver);
    json out = io::to_json(sol);
    out["estimator"] = cfg.estimator;
    out["lambda"] = io::to_json(lambda);
    out.update(extra);
    const fs::path file = fs::path(o.out_dir) / "solution.json";
    io::write_text(file, out.dump(2) + "\n");
    logger()->info("kkt residual {} after {} iterations", sol.kkt_residual, sol.iterations);
    return {sol.converged ? kOk : kNonConvergence, {file.string()}};
}

Outcome cmd_tune(const Options& o, json& invocation)
{
    Loaded l = load(o);
    ExperimentConfig cfg = single(l);
    invocation["config"] = l.doc;
    const Problem problem = load_problem(o, cfg, invocation);
    const TunedFit fit = fit_oracle(cfg, problem);
    json out = io::to_json(fit.tuning);
    out["estimator"] = cfg.estimator;
    if (cfg.estimator == "elastic-net") out["lambda2"] = fit.lambda2;
    if (!fit.tuning.solution) out["solution"] = io::to_json(fit.solution);
    const fs::path file = fs::path(o.out_dir) / "tuning.json";
    io::write_text(file, out.dump(2) + "\n");
    logger()->info("lambda_1 = {}, fixed-point residual {}", fit.tuning.lambda(0), fit.tuning.fixed_point_residual);
    return {fit.solution.converged ? kOk : kNonConvergence, {file.string()}};
}

Outcome cmd_verify(const Options& o, json& invocation)
{
    const BoundMode mode = parse_bound_mode(o.mode);
    Loaded l = load(o);
    ExperimentConfig cfg = single(l);
    invocation["config"] = l.doc;
    invocation["mode"] = o.mode;
    invocation["u"] = o.u;
    const Problem problem = load_problem(o, cfg, invocation);
    const TunedFit fit = fit_oracle(cfg, problem);
    const TrialRecord rec = record_fit(cfg, fit, 0);

    CheckOptions opts;
    opts.tol = cfg.solver.tol;
    opts.u = o.u;
    opts.candidates.push_back({"estimate", fit.solution.beta});
    const BoundReport report = check_bound(fit.spec, fit.problem, fit.tuning, fit.solution, mode, opts);

    const fs::path csv = fs::path(o.out_dir) / "verify.csv";
    const fs::path js = fs::path(o.out_dir) / "bound.json";
    io::write_text(csv, io::csv_header() + "\n" + io::csv_row(rec, o.timing) + "\n");
    io::write_text(js, io::to_json(report).dump(2) + "\n");
    const bool ok = report.holds && report.certified;
    logger()->info("{}: lhs {} rhs {} holds {}", o.mode, report.lhs, report.rhs, ok);
    return {ok ? kOk : kCertificationFailed, {csv.string(), js.string()}};
}

std::string noise_name(const NoiseSpec& ns) { return ns.kind == NoiseKind::Gaussian ? "gaussian" : "student_t"; }

Outcome cmd_campaign(const Options& o, json& invocation)
{
    if (o.config.empty()) throw InvalidInput("--config: required for campaign");
    if (o.jobs < 1) throw InvalidInput("--jobs: must be >= 1");
    Loaded l = load(o);
    invocation["config"] = l.doc;

    std::string csv = io::csv_header() + "\n";
    std::vector<TrialRecord> all;
    json groups = json::array();
    for (const auto& cfg : l.configs) {
        logger()->info("campaign {} rho={} noise={}: {} trials", cfg.estimator, cfg.design.rho, noise_name(cfg.noise),
                       cfg.trials);
        const auto records = run_monte_carlo(cfg, o.jobs);
        for (const auto& r : records) {
            csv += io::csv_row(r, o.timing) + "\n";
            if (r.failed) logger()->warn("{} trial {}: {}", r.estimator, r.trial, r.error);
        }
        json g = io::to_json(summarize(records));
        g["estimator"] = cfg.estimator;
        g["rho"] = cfg.design.rho;
        g["noise"] = noise_name(cfg.noise);
        g["sigma"] = cfg.noise.sigma;
        groups.push_back(std::move(g));
        all.insert(all.end(), records.begin(), records.end());
    }
    const CampaignSummary total = summarize(all);
    json summary = {{"overall", io::to_json(total)}, {"groups", groups}};

    const fs::path csv_file = fs::path(o.out_dir) / "campaign.csv";
    const fs::path sum_file = fs::path(o.out_dir) / "summary.json";
    io::write_text(csv_file, csv);
    io::write_text(sum_file, summary.dump(2) + "\n");
    const bool all_hold = total.certified == total.trials;
    return {all_hold ? kOk : kCertificationFailed, {csv_file.string(), sum_file.string()}};
}

Outcome cmd_catalog(const Options& o, json&)
{
    json out = json::array();
    for (const auto& e : catalog()) {
        out.push_back({{"label", e.label}, {"description", e.description}, {"parameters", json::parse(e.parameters)}});
    }
    std::cout << out.dump(2) << "\n";
    const fs::path file = fs::path(o.out_dir) / "catalog.json";
    io::write_text(file, out.dump(2) + "\n");
    return {kOk, {file.string()}};
}

} // namespace

int run_cli(int argc, const char* const* argv)
{
    Options o;
    CLI::App app{"Penalized regression bounds lab"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON experiment configuration");
        sub->add_option("--seed", o.seed, "override the configuration seed");
        sub->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
        sub->add_option("--estimator", o.estimator, "catalog label");
        sub->add_flag("--timing", o.timing, "record wall-clock solve times in CSV output");
    };
    auto* solve_cmd = app.add_subcommand("solve", "solve one instance at a given tuning");
    add_common(solve_cmd);
    solve_cmd->add_option("--lambda", o.lambda, "tuning: one value, one per term (comma separated), or 'max'")
        ->required();
    solve_cmd->add_option("--lambda2", o.lambda2, "ridge level for elastic-net");
    solve_cmd->add_option("--data", o.data, "JSON problem {X, Y, beta_star, eps}");

    auto* tune_cmd = app.add_subcommand("tune", "oracle tuning for one instance");
    add_common(tune_cmd);
    tune_cmd->add_option("--data", o.data, "JSON problem with beta_star and eps");

    auto* verify_cmd = app.add_subcommand("verify", "check a prediction bound on one instance");
    add_common(verify_cmd);
    verify_cmd->add_option("--mode", o.mode, "theorem, special1, special2 or la")->capture_default_str();
    verify_cmd->add_option("--u", o.u, "u in (0, 1) for the theorem mode")->capture_default_str();
    verify_cmd->add_option("--data", o.data, "JSON problem with beta_star and eps");

    auto* campaign_cmd = app.add_subcommand("campaign", "Monte Carlo certification campaign");
    add_common(campaign_cmd);
    campaign_cmd->add_option("--jobs", o.jobs, "worker threads")->capture_default_str();

    auto* catalog_cmd = app.add_subcommand("catalog", "list estimator labels and parameters");
    catalog_cmd->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalidInput;
    }

    auto log = logger();
    const std::string started = io::utc_timestamp();
    json invocation = {{"command", app.get_subcommands().front()->get_name()}};
    Outcome outcome;
    try {
        CLI::App* sub = app.get_subcommands().front();
        if (sub == solve_cmd) {
            outcome = cmd_solve(o, invocation);
        } else if (sub == tune_cmd) {
            outcome = cmd_tune(o, invocation);
        } else if (sub == verify_cmd) {
            outcome = cmd_verify(o, invocation);
        } else if (sub == campaign_cmd) {
            outcome = cmd_campaign(o, invocation);
        } else {
            outcome = cmd_catalog(o, invocation);
        }
    } catch (const InvalidInput& e) {
        log->error("{}", e.what());
        outcome.code = kInvalidInput;
    } catch (const NonConvergence& e) {
        log->error("{}", e.what());
        outcome.code = kNonConvergence;
    } catch (const AssumptionViolated& e) {
        log->error("{}", e.what());
        outcome.code = kAssumptionViolated;
    } catch (const std::exception& e) {
        log->error("{}", e.what());
        outcome.code = kUnexpected;
    }

    try {
        io::RunManifest m;
        m.version = std::string(kVersion);
        m.command = invocation["command"].get<std::string>();
        m.config_hash = io::config_hash(invocation);
        m.seed = ExperimentConfig{}.seed;
        if (invocation.contains("config") && invocation["config"].contains("seed") &&
            invocation["config"]["seed"].is_number_unsigned()) {
            m.seed = invocation["config"]["seed"].get<std::uint64_t>();
        }
        m.started = started;
        m.finished = io::utc_timestamp();
        m.outputs = outcome.outputs;
        json mj = io::to_json(m);
        mj["exit_code"] = outcome.code;
        io::write_text(fs::path(o.out_dir) / "manifest.json", mj.dump(2) + "\n");
    } catch (const std::exception& e) {
        log->error("manifest: {}", e.what());
        if (outcome.code == kOk) outcome.code = kUnexpected;
    }
    return outcome.code;
}

} // namespace pblab::cli
