#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <pblab/cli.hpp>
#include <pblab/io.hpp>

using namespace pblab;
using io::json;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir()
{
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("pblab_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

void write(const std::string& name, const std::string& text)
{
    std::ofstream(workdir() / name) << text;
}

std::string slurp(const std::string& file)
{
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(std::vector<std::string> args)
{
    args.insert(args.begin(), "pblab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

} // namespace

TEST_CASE("solve on a toy problem")
{
    write("toy.json", R"({"X": [[1, 0], [0, 1]], "Y": [3, 0]})");
    const std::string out = path("solve");
    CHECK(run({"solve", "--estimator", "lasso", "--lambda", "2.0", "--data", path("toy.json"), "--out-dir", out}) ==
          cli::kOk);
    const json s = json::parse(slurp(out + "/solution.json"));
    CHECK(s["kkt_residual"].get<double>() <= 1e-8);
    CHECK(s["beta"][0].get<double>() == doctest::Approx(2.0));
    CHECK(s["beta"][1].get<double>() == 0.0);

    const json m = json::parse(slurp(out + "/manifest.json"));
    CHECK(m["command"] == "solve");
    CHECK(m["version"] == "0.3.0");
    CHECK(m["config_hash"].get<std::string>().size() == 16);
    CHECK(m["outputs"].size() == 1);
    CHECK(m["started"].get<std::string>().back() == 'Z');
}

TEST_CASE("solve at lambda_max gives zero")
{
    write("gen.json", R"({"estimator": "group-lasso", "n": 20, "p": 30})");
    const std::string out = path("solve_max");
    CHECK(run({"solve", "--config", path("gen.json"), "--lambda", "max", "--out-dir", out}) == cli::kOk);
    const json s = json::parse(slurp(out + "/solution.json"));
    for (const auto& b : s["beta"]) CHECK(std::abs(b.get<double>()) <= 1e-8);
}

TEST_CASE("exit code 2: invalid input")
{
    write("bad.json", R"({"estimator": "lasso", "n": 20)");
    write("unknown.json", R"({"estimator": "lasso", "sample_size": 20})");
    const std::string out = path("bad");
    CHECK(run({"tune", "--config", path("bad.json"), "--out-dir", out}) == cli::kInvalidInput);
    CHECK(run({"tune", "--config", path("unknown.json"), "--out-dir", out}) == cli::kInvalidInput);
    CHECK(run({"tune", "--config", path("missing.json"), "--out-dir", out}) == cli::kInvalidInput);
    CHECK(run({"verify", "--mode", "sideways", "--estimator", "lasso", "--out-dir", out}) == cli::kInvalidInput);
    CHECK(run({"solve", "--estimator", "lasso", "--out-dir", out}) == cli::kInvalidInput);
    CHECK(run({"solve", "--estimator", "lasso", "--lambda", "x", "--data", path("toy.json"), "--out-dir", out}) ==
          cli::kInvalidInput);
    CHECK(run({"frobnicate"}) == cli::kInvalidInput);
    CHECK(run({"campaign", "--out-dir", out}) == cli::kInvalidInput);
    const json m = json::parse(slurp(out + "/manifest.json"));
    CHECK(m["exit_code"] == cli::kInvalidInput);
}

TEST_CASE("exit code 3: non-convergence")
{
    write("slow.json", R"({"estimator": "lasso", "n": 40, "p": 80, "solver": {"max_iter": 1, "restarts": 1}})");
    CHECK(run({"solve", "--config", path("slow.json"), "--lambda", "0.5", "--out-dir", path("slow")}) ==
          cli::kNonConvergence);
    const json s = json::parse(slurp(path("slow") + "/solution.json"));
    CHECK(s["converged"] == false);
    CHECK(run({"tune", "--config", path("slow.json"), "--estimator", "sqrt-lasso", "--out-dir", path("slow")}) ==
          cli::kNonConvergence);
}

TEST_CASE("exit code 4: assumption violations")
{
    write("zero.json", R"({"X": [[1, 0], [0, 1]], "Y": [0, 0]})");
    write("zero_noise.json", R"({"X": [[1, 0], [0, 1]], "beta_star": [1, 1], "eps": [0, 0]})");
    CHECK(run({"solve", "--estimator", "lasso", "--lambda", "1", "--data", path("zero.json"), "--out-dir",
               path("zero")}) == cli::kAssumptionViolated);
    CHECK(run({"tune", "--estimator", "lasso", "--data", path("zero_noise.json"), "--out-dir", path("zero")}) ==
          cli::kAssumptionViolated);
}

TEST_CASE("exit code 5: certification failure")
{
    write("fail.json", R"({"estimator": "lasso", "n": 30, "p": 60, "trials": 3, "solver": {"max_iter": 1, "restarts": 1}})");
    CHECK(run({"campaign", "--config", path("fail.json"), "--out-dir", path("fail")}) == cli::kCertificationFailed);
    const json s = json::parse(slurp(path("fail") + "/summary.json"));
    CHECK(s["overall"]["failures"] == 3);
    CHECK(s["overall"]["passed"] == false);
}

TEST_CASE("tune reports the fixed-point certificate")
{
    write("sqrt.json", R"({"estimator": "sqrt-lasso", "n": 100, "p": 50, "seed": 4})");
    CHECK(run({"tune", "--config", path("sqrt.json"), "--out-dir", path("tune")}) == cli::kOk);
    const json t = json::parse(slurp(path("tune") + "/tuning.json"));
    CHECK(t["fixed_point_residual"].get<double>() <= 1e-7);
    CHECK(t["iterations"].get<int>() <= 200);
}

TEST_CASE("verify writes a certified csv row")
{
    CHECK(run({"verify", "--mode", "special2", "--estimator", "lasso", "--seed", "3", "--out-dir", path("verify")}) ==
          cli::kOk);
    const std::string csv = slurp(path("verify") + "/verify.csv");
    CHECK(csv.rfind(io::csv_header() + "\n", 0) == 0);
    const std::string row = csv.substr(io::csv_header().size() + 1);
    CHECK(row.find(",true,") != std::string::npos);
    const json b = json::parse(slurp(path("verify") + "/bound.json"));
    CHECK(b["holds"] == true);
    CHECK(b["certified"] == true);
    CHECK(run({"verify", "--mode", "theorem", "--u", "0.25", "--estimator", "group-lasso", "--out-dir",
               path("verify_th")}) == cli::kOk);
}

TEST_CASE("campaigns are byte-for-byte reproducible")
{
    write("camp.json", R"({"estimator": ["lasso", "sqrt-lasso"], "n": 20, "p": 30, "trials": 4, "seed": 11,
                           "noise": [{"kind": "gaussian", "sigma": 1}, {"kind": "student_t", "df": 3, "scale": 1}]})");
    CHECK(run({"campaign", "--config", path("camp.json"), "--out-dir", path("c1")}) == cli::kOk);
    CHECK(run({"campaign", "--config", path("camp.json"), "--out-dir", path("c2"), "--jobs", "2"}) == cli::kOk);
    const std::string a = slurp(path("c1") + "/campaign.csv");
    CHECK(a == slurp(path("c2") + "/campaign.csv"));
    CHECK(std::count(a.begin(), a.end(), '\n') == 1 + 16);
    const json m1 = json::parse(slurp(path("c1") + "/manifest.json"));
    const json m2 = json::parse(slurp(path("c2") + "/manifest.json"));
    CHECK(m1["config_hash"] == m2["config_hash"]);
    CHECK(m1["seed"] == 11);
    CHECK(run({"campaign", "--config", path("camp.json"), "--seed", "12", "--out-dir", path("c3")}) == cli::kOk);
    CHECK(slurp(path("c3") + "/campaign.csv") != a);
}

TEST_CASE("catalog lists every estimator")
{
    CHECK(run({"catalog", "--out-dir", path("cat")}) == cli::kOk);
    const json c = json::parse(slurp(path("cat") + "/catalog.json"));
    std::vector<std::string> labels;
    for (const auto& e : c) labels.push_back(e["label"]);
    for (const char* l :
         {"lasso", "sqrt-lasso", "group-lasso", "group-sqrt-lasso", "elastic-net", "slope", "fused", "trend-filter"}) {
        CHECK(std::find(labels.begin(), labels.end(), l) != labels.end());
    }
}
