#include <array>
#include <fstream>
#include <numeric>

#include "btpilot/eval/eval.hpp"

namespace btp::eval {

// ---------------------------------------------------------------- scores

const std::optional<std::vector<int>>& StageScores::of(Stage s) const {
    switch (s) {
        case Stage::Cog: return cog;
        case Stage::Disp: return disp;
        case Stage::Exec: return exec;
    }
    return cog;
}

std::optional<std::vector<int>>& StageScores::of(Stage s) {
    return const_cast<std::optional<std::vector<int>>&>(static_cast<const StageScores&>(*this).of(s));
}

std::optional<double> stage_mean(const std::optional<std::vector<int>>& bits) {
    if (!bits || bits->empty()) return std::nullopt;
    return static_cast<double>(std::accumulate(bits->begin(), bits->end(), 0)) / static_cast<double>(bits->size());
}

double aggregate_means(const std::vector<double>& stage_means) {
    if (stage_means.empty()) throw std::invalid_argument("no applicable stage");
    return std::accumulate(stage_means.begin(), stage_means.end(), 0.0) / static_cast<double>(stage_means.size());
}

double aggregate(const StageScores& scores) {
    std::vector<double> means;
    std::optional<std::size_t> k;
    for (auto s : {Stage::Cog, Stage::Disp, Stage::Exec}) {
        const auto& bits = scores.of(s);
        if (!bits) continue;
        if (bits->empty()) throw std::invalid_argument("k must be at least 1");
        if (k && *k != bits->size()) throw std::invalid_argument("stage bit lists differ in length");
        k = bits->size();
        for (int b : *bits) {
            if (b != 0 && b != 1) throw std::invalid_argument("stage bits must be 0 or 1");
        }
        means.push_back(*stage_mean(bits));
    }
    return aggregate_means(means);
}

// ---------------------------------------------------------------- faults

double FaultProbabilities::of(Stage s) const {
    switch (s) {
        case Stage::Cog: return cog;
        case Stage::Disp: return disp;
        case Stage::Exec: return exec;
    }
    return 0.0;
}

FaultProbabilities FaultConfig::for_scenario(const ScenarioSpec& s) const {
    if (auto it = overrides.find(s.key()); it != overrides.end()) return it->second;
    if (auto it = overrides.find(s.id); it != overrides.end()) return it->second;
    return defaults;
}

namespace {

FaultProbabilities probabilities_from_json(const nlohmann::json& j, const std::string& where) {
    FaultProbabilities p;
    auto read = [&](const char* name, double& out) {
        if (!j.contains(name)) return;
        if (!j.at(name).is_number()) throw std::invalid_argument(where + "." + name + " must be a number");
        out = j.at(name).get<double>();
        if (out < 0.0 || out > 1.0) throw std::invalid_argument(where + "." + name + " must lie in [0, 1]");
    };
    read("cog", p.cog);
    read("disp", p.disp);
    read("exec", p.exec);
    return p;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

FaultConfig fault_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("fault config must be an object");
    FaultConfig c;
    c.defaults = probabilities_from_json(j, "faults");
    if (j.contains("scenarios")) {
        for (const auto& [key, v] : j.at("scenarios").items()) c.overrides[key] = probabilities_from_json(v, key);
    }
    return c;
}

FaultConfig load_fault_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
    return fault_config_from_json(nlohmann::json::parse(in));
}

FaultInjector::FaultInjector(std::uint64_t seed, std::string_view scenario_key) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(fnv1a(scenario_key)), static_cast<std::uint32_t>(fnv1a(scenario_key) >> 32)};
    rng_.seed(seq);
}

bool FaultInjector::draw(double p) {
    // 53 random bits mapped to [0, 1)
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return u < p;
}

// ---------------------------------------------------------------- runs

std::optional<double> ScenarioReport::eta(Stage s) const {
    switch (s) {
        case Stage::Cog: return eta_cog;
        case Stage::Disp: return eta_disp;
        case Stage::Exec: return eta_exec;
    }
    return std::nullopt;
}

RunResult run_once(const ScenarioSpec& spec, const EvalOptions& opts, std::uint64_t run_seed, ExecutionLog* log_out) {
    RunResult out;
    auto cfg = scenario_config(spec);
    cfg.backend = opts.backend;
    cfg.llm_model = opts.llm_model;
    cfg.llm_fixtures = opts.llm_fixtures;
    cfg.llm_transport = opts.llm_transport;
    cfg.seed = run_seed;
    cfg.cog_cost_ms = opts.cog_cost_ms;
    cfg.keep_log = true;
    try {
        runtime::Runtime rt(cfg);
        const auto id = rt.submit_command(spec.instruction);
        try {
            if (spec.duration_ticks) {
                rt.run_ticks(*spec.duration_ticks);
            } else {
                rt.run_until([&](const runtime::Runtime& r) { return r.envelope(id).done(); }, spec.max_ticks);
            }
        } catch (const runtime::MaxTicksExceeded& e) {
            out.error = e.what();
        }
        const auto& log = rt.collect_trace();
        const auto& env = rt.envelope(id);
        out.timings = runtime::timings_of(env);
        out.response = env.last_reply();
        out.digest = log.digest();
        if (spec.applies(Stage::Cog)) out.cog = judge_stage(log, spec, Stage::Cog, opts.backend);
        if (spec.applies(Stage::Disp)) out.disp = judge_stage(log, spec, Stage::Disp, opts.backend);
        if (spec.applies(Stage::Exec)) out.exec = out.error.empty() && judge_stage(log, spec, Stage::Exec, opts.backend);
        if (log_out) *log_out = log;
    } catch (const std::exception& e) {
        out = RunResult{};
        out.error = e.what();
    }
    return out;
}

ScenarioReport run_scenario(const ScenarioSpec& spec, const EvalOptions& opts) {
    ScenarioReport rep;
    rep.id = spec.id;
    rep.robot = std::string(drivers::to_string(spec.robot));
    rep.category = spec.category;
    rep.details = spec.details;
    rep.k = opts.k.value_or(spec.k);
    if (rep.k < 1) throw std::invalid_argument("k must be at least 1");

    const auto probs = opts.faults ? opts.faults->for_scenario(spec) : FaultProbabilities{};
    FaultInjector faults(opts.seed, spec.key());
    const std::uint64_t base = opts.seed * 0x9E3779B97F4A7C15ULL + fnv1a(spec.key());

    for (auto s : {Stage::Cog, Stage::Disp, Stage::Exec}) {
        if (spec.applies(s)) rep.scores.of(s).emplace();
    }
    std::array<double, 3> lat_sum{};
    std::array<int, 3> lat_n{};
    double total_sum = 0.0;

    for (int run = 0; run < rep.k; ++run) {
        ExecutionLog log;
        RunResult r = run_once(spec, opts, base + static_cast<std::uint64_t>(run), opts.keep_logs ? &log : nullptr);
        for (auto s : {Stage::Cog, Stage::Disp, Stage::Exec}) {
            if (!spec.applies(s)) continue;
            int& bit = s == Stage::Cog ? r.cog : s == Stage::Disp ? r.disp : r.exec;
            if (faults.draw(probs.of(s))) bit = 0;
            rep.scores.of(s)->push_back(bit);
        }
        const std::array<std::optional<std::int64_t>, 3> t{r.timings.cog, r.timings.disp, r.timings.exec};
        for (std::size_t i = 0; i < 3; ++i) {
            if (t[i]) {
                lat_sum[i] += static_cast<double>(*t[i]);
                ++lat_n[i];
            }
        }
        total_sum += static_cast<double>(r.timings.total);
        rep.runs.push_back(std::move(r));
        if (opts.keep_logs) rep.logs.push_back(std::move(log));
    }

    rep.eta_cog = stage_mean(rep.scores.cog);
    rep.eta_disp = stage_mean(rep.scores.disp);
    rep.eta_exec = stage_mean(rep.scores.exec);
    rep.sigma = aggregate(rep.scores);
    auto mean = [&](std::size_t i) -> std::optional<double> {
        if (lat_n[i] == 0) return std::nullopt;
        return lat_sum[i] / lat_n[i];
    };
    rep.latency = {mean(0), mean(1), mean(2), total_sum / rep.k};
    return rep;
}

std::vector<ScenarioReport> run_suite(const std::vector<ScenarioSpec>& specs, const EvalOptions& opts) {
    std::vector<ScenarioReport> out;
    out.reserve(specs.size());
    for (const auto& s : specs) out.push_back(run_scenario(s, opts));
    return out;
}

}  // namespace btp::eval
