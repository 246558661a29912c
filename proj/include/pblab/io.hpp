#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include <pblab/bounds.hpp>
#include <pblab/experiments.hpp>

namespace pblab::io {

using json = nlohmann::json;

/// Shortest decimal string that reads back to the same double.
std::string format_double(double x);

json to_json(const Vector& v);
json to_json(const Matrix& m);
Vector vector_from_json(const json& j, const std::string& field);
/// Nested row arrays; every row must have the same length.
Matrix matrix_from_json(const json& j, const std::string& field);

json to_json(const Solution& s);
json to_json(const OracleTuning& t);
json to_json(const BoundReport& r);
json to_json(const CampaignSummary& s);

/**
 * Problem document {"X": [[...]], "Y": [...], "beta_star": [...], "eps": [...]}.
 * Y may be omitted when beta_star and eps are given. Errors name the field.
 */
Problem problem_from_json(const json& j);
json to_json(const Problem& p);

/**
 * Experiment configuration. "estimator", "design.rho" and "noise" may be
 * arrays, in which case the campaign is their cartesian product (estimator
 * outermost). Unknown keys raise InvalidInput naming the key.
 */
std::vector<ExperimentConfig> campaign_from_json(const json& j);
/// Same as campaign_from_json but the document must describe one configuration.
ExperimentConfig config_from_json(const json& j);

/// FNV-1a 64 of the canonical dump (object keys sorted), as 16 hex digits.
std::string config_hash(const json& j);

std::string csv_header();
/// solve_ms is written as 0 unless timing is set, so reruns give identical bytes.
std::string csv_row(const TrialRecord& r, bool timing = false);

struct RunManifest
{
    std::string version;
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;
};
json to_json(const RunManifest& m);

/// Current UTC time, ISO 8601 with a trailing Z.
std::string utc_timestamp();

/// Throws InvalidInput if the file cannot be read or does not parse.
json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace pblab::io
