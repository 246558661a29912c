#include <pblab/io.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <pblab/errors.hpp>

namespace pblab::io {
namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path)
{
    if (!obj.is_object()) throw InvalidInput((path.empty() ? std::string("config") : path) + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw InvalidInput(join(path, key) + ": unknown field");
    }
}

double number(const json& j, const std::string& field)
{
    if (!j.is_number()) throw InvalidInput(field + ": expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw InvalidInput(field + ": must be finite");
    return x;
}

int integer(const json& j, const std::string& field)
{
    if (!j.is_number_integer()) throw InvalidInput(field + ": expected an integer");
    const auto v = j.get<std::int64_t>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw InvalidInput(field + ": out of range");
    }
    return static_cast<int>(v);
}

std::string string(const json& j, const std::string& field)
{
    if (!j.is_string()) throw InvalidInput(field + ": expected a string");
    return j.get<std::string>();
}

NoiseSpec noise_from_json(const json& j, const std::string& field)
{
    reject_unknown(j, {"kind", "sigma", "df", "scale"}, field);
    NoiseSpec ns;
    const std::string kind = j.contains("kind") ? string(j["kind"], field + ".kind") : "gaussian";
    if (kind == "gaussian") {
        ns.kind = NoiseKind::Gaussian;
        if (j.contains("df") || j.contains("scale")) throw InvalidInput(field + ": df/scale only apply to student_t");
        if (j.contains("sigma")) ns.sigma = number(j["sigma"], field + ".sigma");
    } else if (kind == "student_t") {
        ns.kind = NoiseKind::StudentT;
        if (j.contains("sigma")) throw InvalidInput(field + ".sigma: student_t noise takes 'scale'");
        if (j.contains("df")) ns.df = number(j["df"], field + ".df");
        if (j.contains("scale")) ns.sigma = number(j["scale"], field + ".scale");
    } else {
        throw InvalidInput(field + ".kind: expected 'gaussian' or 'student_t'");
    }
    return ns;
}

void apply_solver(const json& j, SolverConfig& s)
{
    reject_unknown(j, {"tol", "max_iter", "restarts"}, "solver");
    if (j.contains("tol")) s.tol = number(j["tol"], "solver.tol");
    if (j.contains("max_iter")) s.max_iter = integer(j["max_iter"], "solver.max_iter");
    if (j.contains("restarts")) s.restarts = integer(j["restarts"], "solver.restarts");
    if (s.restarts < 1) throw InvalidInput("solver.restarts: must be >= 1");
}

void apply_fixed_point(const json& j, FixedPointConfig& f)
{
    reject_unknown(j, {"tol", "max_iter", "damping"}, "fixed_point");
    if (j.contains("tol")) f.tol = number(j["tol"], "fixed_point.tol");
    if (j.contains("max_iter")) f.max_iter = integer(j["max_iter"], "fixed_point.max_iter");
    if (j.contains("damping")) f.damping = number(j["damping"], "fixed_point.damping");
    if (!(f.tol > 0.0) || f.max_iter < 1 || !(f.damping > 0.0 && f.damping <= 1.0)) {
        throw InvalidInput("fixed_point: need tol > 0, max_iter >= 1, damping in (0, 1]");
    }
}

} // namespace

std::string format_double(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

json to_json(const Vector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json to_json(const Matrix& m)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
    return out;
}

Vector vector_from_json(const json& j, const std::string& field)
{
    if (j.is_number()) return Vector::Constant(1, number(j, field));
    if (!j.is_array()) throw InvalidInput(field + ": expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = number(j[i], field + "[" + std::to_string(i) + "]");
    }
    return v;
}

Matrix matrix_from_json(const json& j, const std::string& field)
{
    if (!j.is_array() || j.empty()) throw InvalidInput(field + ": expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw InvalidInput(field + "[0]: expected a non-empty row");
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string row = field + "[" + std::to_string(i) + "]";
        if (!j[i].is_array() || j[i].size() != cols) throw InvalidInput(row + ": rows must have equal length");
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                number(j[i][c], row + "[" + std::to_string(c) + "]");
        }
    }
    return m;
}

json to_json(const Solution& s)
{
    return {{"beta", to_json(s.beta)},           {"fitted", to_json(s.fitted)},
            {"objective", s.objective},          {"kkt_residual", s.kkt_residual},
            {"iterations", s.iterations},        {"converged", s.converged},
            {"method", s.method}};
}

json to_json(const OracleTuning& t)
{
    json out = {{"c", to_json(t.c)},
                {"lambda", to_json(t.lambda)},
                {"dual_terms", to_json(t.dual_terms)},
                {"fixed_point_residual", t.fixed_point_residual},
                {"iterations", t.iterations},
                {"bisection", t.bisection}};
    if (t.solution) out["solution"] = to_json(*t.solution);
    return out;
}

json to_json(const BoundReport& r)
{
    json terms = json::array();
    for (const auto& t : r.per_term) terms.push_back({{"penalty", t.penalty}, {"credit", t.credit}});
    json out = {{"mode", std::string(to_string(r.mode))},
                {"lhs", r.lhs},
                {"rhs", r.rhs},
                {"candidate", r.candidate},
                {"approximation", r.approximation},
                {"per_term", terms},
                {"slack", r.slack},
                {"allowance", r.allowance},
                {"holds", r.holds},
                {"certified", r.certified}};
    out["u"] = r.u ? json(*r.u) : json(nullptr);
    return out;
}

json to_json(const CampaignSummary& s)
{
    return {{"trials", s.trials},
            {"failures", s.failures},
            {"certified", s.certified},
            {"failure_rate", s.failure_rate},
            {"passed", s.passed}};
}

Problem problem_from_json(const json& j)
{
    reject_unknown(j, {"X", "Y", "beta_star", "eps"}, "data");
    if (!j.contains("X")) throw InvalidInput("data.X: missing");
    Matrix X = matrix_from_json(j["X"], "data.X");
    const bool has_truth = j.contains("beta_star") && j.contains("eps");
    if (j.contains("beta_star") != j.contains("eps")) {
        throw InvalidInput(std::string("data.") + (j.contains("eps") ? "beta_star" : "eps") +
                           ": beta_star and eps must be given together");
    }
    Problem p;
    if (has_truth) {
        Vector b = vector_from_json(j["beta_star"], "data.beta_star");
        Vector e = vector_from_json(j["eps"], "data.eps");
        if (b.size() != X.cols()) throw DimensionMismatch("data.beta_star: length differs from the columns of X");
        if (e.size() != X.rows()) throw DimensionMismatch("data.eps: length differs from the rows of X");
        p = Problem::from_truth(std::move(X), std::move(b), std::move(e));
        if (j.contains("Y")) {
            const Vector y = vector_from_json(j["Y"], "data.Y");
            if (y.size() != p.Y.size()) throw DimensionMismatch("data.Y: length differs from the rows of X");
            if ((y - p.Y).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + p.Y.cwiseAbs().maxCoeff())) {
                throw InvalidInput("data.Y: differs from X beta_star + eps");
            }
        }
    } else {
        if (!j.contains("Y")) throw InvalidInput("data.Y: missing (give Y or beta_star and eps)");
        p.X = std::move(X);
        p.Y = vector_from_json(j["Y"], "data.Y");
        if (p.Y.size() != p.X.rows()) throw DimensionMismatch("data.Y: length differs from the rows of X");
    }
    return p;
}

json to_json(const Problem& p)
{
    json out = {{"X", to_json(p.X)}, {"Y", to_json(p.Y)}};
    if (p.truth) {
        out["beta_star"] = to_json(p.truth->beta_star);
        out["eps"] = to_json(p.truth->eps);
    }
    return out;
}

std::vector<ExperimentConfig> campaign_from_json(const json& j)
{
    reject_unknown(j, {"estimator", "n", "p", "trials", "seed", "design", "noise", "beta_star", "c", "group_size",
                       "trend_order", "solver", "fixed_point"},
                   "");
    ExperimentConfig base;
    std::vector<std::string> estimators{base.estimator};
    std::vector<double> rhos{base.design.rho};
    std::vector<NoiseSpec> noises{base.noise};

    if (j.contains("estimator")) {
        const auto& e = j["estimator"];
        estimators.clear();
        if (e.is_array()) {
            if (e.empty()) throw InvalidInput("estimator: empty list");
            for (std::size_t i = 0; i < e.size(); ++i) {
                estimators.push_back(string(e[i], "estimator[" + std::to_string(i) + "]"));
            }
        } else {
            estimators.push_back(string(e, "estimator"));
        }
        for (std::size_t i = 0; i < estimators.size(); ++i) {
            if (!is_catalog_label(estimators[i])) throw InvalidInput("estimator: unknown label '" + estimators[i] + "'");
        }
    }
    if (j.contains("n")) base.n = integer(j["n"], "n");
    if (j.contains("p")) base.p = integer(j["p"], "p");
    if (j.contains("trials")) base.trials = integer(j["trials"], "trials");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw InvalidInput("seed: expected a non-negative integer");
        base.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("group_size")) base.group_size = integer(j["group_size"], "group_size");
    if (j.contains("trend_order")) base.trend_order = integer(j["trend_order"], "trend_order");
    if (j.contains("design")) {
        const auto& d = j["design"];
        reject_unknown(d, {"kind", "rho", "X"}, "design");
        const std::string kind = d.contains("kind") ? string(d["kind"], "design.kind") : "equicorrelated";
        if (kind == "equicorrelated") {
            base.design.kind = DesignKind::Equicorrelated;
        } else if (kind == "identity") {
            base.design.kind = DesignKind::Identity;
        } else if (kind == "custom") {
            base.design.kind = DesignKind::Custom;
            if (!d.contains("X")) throw InvalidInput("design.X: required for a custom design");
            base.design.custom = matrix_from_json(d["X"], "design.X");
        } else {
            throw InvalidInput("design.kind: expected 'equicorrelated', 'identity' or 'custom'");
        }
        if (d.contains("X") && kind != "custom") throw InvalidInput("design.X: only used with kind 'custom'");
        if (d.contains("rho")) {
            rhos.clear();
            if (d["rho"].is_array()) {
                if (d["rho"].empty()) throw InvalidInput("design.rho: empty list");
                for (std::size_t i = 0; i < d["rho"].size(); ++i) {
                    rhos.push_back(number(d["rho"][i], "design.rho[" + std::to_string(i) + "]"));
                }
            } else {
                rhos.push_back(number(d["rho"], "design.rho"));
            }
        }
    }
    if (j.contains("noise")) {
        const auto& nz = j["noise"];
        noises.clear();
        if (nz.is_array()) {
            if (nz.empty()) throw InvalidInput("noise: empty list");
            for (std::size_t i = 0; i < nz.size(); ++i) {
                noises.push_back(noise_from_json(nz[i], "noise[" + std::to_string(i) + "]"));
            }
        } else {
            noises.push_back(noise_from_json(nz, "noise"));
        }
    }
    if (j.contains("beta_star")) {
        const auto& b = j["beta_star"];
        reject_unknown(b, {"s", "amplitude", "values"}, "beta_star");
        if (b.contains("values")) {
            if (b.contains("s") || b.contains("amplitude")) {
                throw InvalidInput("beta_star.values: cannot be combined with s/amplitude");
            }
            base.beta_star.custom = vector_from_json(b["values"], "beta_star.values");
        }
        if (b.contains("s")) base.beta_star.s = integer(b["s"], "beta_star.s");
        if (b.contains("amplitude")) base.beta_star.amplitude = number(b["amplitude"], "beta_star.amplitude");
    }
    if (j.contains("c")) base.c = vector_from_json(j["c"], "c");
    if (j.contains("solver")) apply_solver(j["solver"], base.solver);
    if (j.contains("fixed_point")) apply_fixed_point(j["fixed_point"], base.fixed_point);

    std::vector<ExperimentConfig> out;
    for (const auto& est : estimators) {
        for (double rho : rhos) {
            for (const auto& ns : noises) {
                ExperimentConfig cfg = base;
                cfg.estimator = est;
                cfg.design.rho = rho;
                cfg.noise = ns;
                try {
                    cfg.validate();
                } catch (const InvalidInput& e) {
                    throw InvalidInput(std::string("config (") + est + "): " + e.what());
                }
                out.push_back(std::move(cfg));
            }
        }
    }
    return out;
}

ExperimentConfig config_from_json(const json& j)
{
    auto all = campaign_from_json(j);
    if (all.size() != 1) throw InvalidInput("config: expected a single estimator, rho and noise setting");
    return std::move(all.front());
}

std::string config_hash(const json& j)
{
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string csv_header()
{
    return "trial,estimator,n,p,rho,noise,sigma,lambda,lhs,rhs_special1,rhs_special2,rhs_theorem_u05,"
           "holds_special2,kkt_residual,fp_residual,solve_ms";
}

std::string csv_row(const TrialRecord& r, bool timing)
{
    std::string lambda;
    for (Eigen::Index i = 0; i < r.lambda.size(); ++i) {
        if (i) lambda += ';';
        lambda += format_double(r.lambda(i));
    }
    std::ostringstream os;
    os << r.trial << ',' << r.estimator << ',' << r.n << ',' << r.p << ',' << format_double(r.rho) << ','
       << r.noise << ',' << format_double(r.sigma) << ',' << lambda << ',' << format_double(r.lhs) << ','
       << format_double(r.rhs_special1) << ',' << format_double(r.rhs_special2) << ','
       << format_double(r.rhs_theorem_u05) << ',' << (r.holds_special2 ? "true" : "false") << ','
       << format_double(r.kkt_residual) << ',' << format_double(r.fp_residual) << ','
       << format_double(timing ? r.solve_ms : 0.0);
    return os.str();
}

json to_json(const RunManifest& m)
{
    return {{"version", m.version}, {"command", m.command}, {"config_hash", m.config_hash}, {"seed", m.seed},
            {"started", m.started}, {"finished", m.finished}, {"outputs", m.outputs}};
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidInput(path.string() + ": cannot open");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput(path.string() + ": malformed JSON (" + e.what() + ")");
    }
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(path.string() + ": cannot write");
    out << text;
    if (!out) throw Error(path.string() + ": write failed");
}

} // namespace pblab::io
