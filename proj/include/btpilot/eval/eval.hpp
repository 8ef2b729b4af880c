#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "btpilot/runtime/runtime.hpp"

namespace btp::eval {

using runtime::ExecutionLog;
using runtime::Stage;

/// A scenario file that does not match the schema. what() names the file and field.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string file, std::string field, const std::string& why);
    const std::string& file() const { return file_; }
    const std::string& field() const { return field_; }

private:
    std::string file_;
    std::string field_;
};

struct ExpectedResponse {
    std::string exact;  // reference backend
    std::string regex;  // llm backend (ECMAScript, full match)
};

struct ScenarioSpec {
    std::string id;        // "Phi2.1"
    std::string category;  // "Phi2"
    drivers::RobotKind robot = drivers::RobotKind::Drone;
    nlohmann::json initial;  // world document, see runtime::config_from_world
    std::string instruction;
    std::optional<std::string> expected_tool;      // tool name or "none"
    std::optional<std::string> expected_dispatch;  // pathway or "none"
    ExpectedResponse expected_response;
    nlohmann::json expected_final = nlohmann::json::object();
    std::set<Stage> applicable_stages;
    int k = 10;
    std::optional<std::int64_t> duration_ticks;  // fixed run length; otherwise until the command ends
    std::int64_t max_ticks = 600;
    std::string details;
    std::string file;

    /// "Phi2.1/drone"; unique across the shipped suite.
    std::string key() const;
    bool applies(Stage s) const { return applicable_stages.count(s) > 0; }
};

/// Parses one scenario document. `file` is used in error messages only.
ScenarioSpec parse_scenario(const nlohmann::json& doc, const std::string& file);
ScenarioSpec load_scenario(const std::filesystem::path& path);
/// Every *.json file in `dir`, ordered by scenario id then robot (drone first).
std::vector<ScenarioSpec> load_scenarios(const std::filesystem::path& dir);
nlohmann::json to_json(const ScenarioSpec& s);

/// Runtime configuration for one run of the scenario.
runtime::RuntimeConfig scenario_config(const ScenarioSpec& spec);

/// Judges one stage of a finished run from its log. The log must hold the
/// header, the command record of the first submitted command and the final record.
bool judge_stage(const ExecutionLog& log, const ScenarioSpec& spec, Stage stage,
                 intent::Backend backend = intent::Backend::Reference);

/// Checks the expected_final predicates alone. On failure `why` names the first failing predicate.
bool final_predicates_hold(const ExecutionLog& log, const ScenarioSpec& spec, std::string* why = nullptr);

/// Per-run bits per stage; an absent list means the stage does not apply.
struct StageScores {
    std::optional<std::vector<int>> cog;
    std::optional<std::vector<int>> disp;
    std::optional<std::vector<int>> exec;

    const std::optional<std::vector<int>>& of(Stage s) const;
    std::optional<std::vector<int>>& of(Stage s);
    friend bool operator==(const StageScores&, const StageScores&) = default;
};

std::optional<double> stage_mean(const std::optional<std::vector<int>>& bits);
/// Mean over the applicable stages of the per-stage means. Throws
/// std::invalid_argument when no stage applies or list lengths differ.
double aggregate(const StageScores& scores);
/// Same formula on already averaged stage values.
double aggregate_means(const std::vector<double>& stage_means);

/// Per-stage probabilities of forcing a stage outcome to failure.
struct FaultProbabilities {
    double cog = 0.0;
    double disp = 0.0;
    double exec = 0.0;
    double of(Stage s) const;
    bool any() const { return cog > 0 || disp > 0 || exec > 0; }
};

/// Default probabilities plus optional overrides keyed by scenario id or key.
struct FaultConfig {
    FaultProbabilities defaults;
    std::map<std::string, FaultProbabilities> overrides;
    FaultProbabilities for_scenario(const ScenarioSpec& s) const;
};

FaultConfig fault_config_from_json(const nlohmann::json& j);
FaultConfig load_fault_config(const std::filesystem::path& path);

/// Deterministic uniform [0, 1) draws built on a 64-bit Mersenne twister.
class FaultInjector {
public:
    FaultInjector(std::uint64_t seed, std::string_view scenario_key);
    /// True with probability p.
    bool draw(double p);

private:
    std::mt19937_64 rng_;
};

struct LatencyMeans {
    std::optional<double> cog;
    std::optional<double> disp;
    std::optional<double> exec;
    double total = 0.0;
};

struct RunResult {
    int cog = 0;
    int disp = 0;
    int exec = 0;
    runtime::StageTimings timings;
    std::string response;
    std::string digest;
    std::string error;  // non-empty when the run threw
};

struct ScenarioReport {
    std::string id;
    std::string robot;
    std::string category;
    int k = 0;
    StageScores scores;
    std::optional<double> eta_cog;
    std::optional<double> eta_disp;
    std::optional<double> eta_exec;
    double sigma = 0.0;
    LatencyMeans latency;
    std::string details;
    std::vector<RunResult> runs;
    std::vector<ExecutionLog> logs;  // kept only on request

    std::optional<double> eta(Stage s) const;
};

struct EvalOptions {
    intent::Backend backend = intent::Backend::Reference;
    std::string llm_model = "gpt-4o";
    std::string llm_fixtures;
    std::shared_ptr<intent::LlmTransport> llm_transport;
    std::optional<FaultConfig> faults;
    std::uint64_t seed = 0;
    std::optional<int> k;  // overrides each spec's k
    std::int64_t cog_cost_ms = 0;
    bool keep_logs = false;
};

/// One fresh virtual-time run. Returns the judged bits (before faults) and the log.
RunResult run_once(const ScenarioSpec& spec, const EvalOptions& opts, std::uint64_t run_seed, ExecutionLog* log_out);

ScenarioReport run_scenario(const ScenarioSpec& spec, const EvalOptions& opts);
std::vector<ScenarioReport> run_suite(const std::vector<ScenarioSpec>& specs, const EvalOptions& opts);

/// One row of the emitted CSV.
struct ReportRow {
    std::string id;
    std::string robot;
    std::optional<double> eta_cog;
    std::optional<double> eta_disp;
    std::optional<double> eta_exec;
    double sigma = 0.0;
    std::optional<double> l_cog;
    std::optional<double> l_disp;
    std::optional<double> l_exec;
    double l_total = 0.0;
    std::string details;
    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

ReportRow to_row(const ScenarioReport& r);
/// Column-wise means over the rows that have the column; sigma is the mean of sigmas.
ReportRow average_row(const std::vector<ReportRow>& rows);

std::string to_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> rows_from_csv(std::string_view text);
std::string to_table(const std::vector<ReportRow>& rows);

/// Writes report.csv (scenario rows then the "Avg." row), report.txt, digests.txt
/// and, when logs were kept, logs/<id>_<robot>_<run>.ndjson.
void emit_report(const std::vector<ScenarioReport>& reports, const std::filesystem::path& dir);
std::vector<ReportRow> load_report_csv(const std::filesystem::path& path);

}  // namespace btp::eval
