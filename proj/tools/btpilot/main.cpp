#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

#include "btpilot/bt/tree_json.hpp"
#include "btpilot/eval/eval.hpp"
#include "btpilot/gateway/gateway.hpp"
#include "btpilot/runtime/runtime.hpp"

using namespace btp;

namespace {

struct Common {
    std::string robot = "drone";
    std::string tree;
    std::string world;
    std::string interpreter = "reference";
    std::string llm_model = "gpt-4o";
    std::string llm_fixtures;
    bool realtime = false;
    std::uint64_t seed = 0;
    std::int64_t cog_cost_ms = 0;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--robot", c.robot, "drone | legged")->check(CLI::IsMember({"drone", "legged"}));
    app->add_option("--tree", c.tree, "tree description (JSON); defaults to the shipped tree");
    app->add_option("--world", c.world, "world description (JSON)");
    app->add_option("--interpreter", c.interpreter, "reference | llm")->check(CLI::IsMember({"reference", "llm"}));
    app->add_option("--llm-model", c.llm_model, "model name sent to the chat endpoint");
    app->add_option("--llm-fixtures", c.llm_fixtures, "replay directory for recorded LLM exchanges");
    app->add_flag("--realtime", c.realtime, "wall-clock cognition instead of virtual time");
    app->add_option("--seed", c.seed, "run seed");
    app->add_option("--cog-cost-ms", c.cog_cost_ms, "virtual time charged per interpretation");
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return nlohmann::json::parse(in);
}

runtime::RuntimeConfig make_config(const Common& c) {
    const auto kind = drivers::parse_robot_kind(c.robot);
    std::string world = c.world;
    if (world.empty()) {
        world = std::string(BTPILOT_DATA_DIR) + (kind == drivers::RobotKind::Drone ? "/worlds/drone_landed.json" : "/worlds/spot.json");
    }
    auto cfg = runtime::config_from_world(read_json(world));
    if (cfg.robot != kind) {
        if (!c.world.empty()) throw std::runtime_error("world " + world + " describes a different robot than --robot " + c.robot);
        cfg.robot = kind;
    }
    if (!c.tree.empty()) cfg.tree = bt::load_tree_spec(c.tree);
    cfg.backend = intent::parse_backend(c.interpreter);
    cfg.llm_model = c.llm_model;
    cfg.llm_fixtures = c.llm_fixtures;
    cfg.realtime = c.realtime;
    cfg.seed = c.seed;
    cfg.cog_cost_ms = c.cog_cost_ms;
    return cfg;
}

void print_event(const std::string& kind, const nlohmann::json& payload) {
    if (kind == "response" || kind == "explanation") {
        std::cout << "[" << payload.value("t_ms", std::int64_t{0}) << " ms] " << kind << ": " << payload.value("text", "") << "\n";
    } else if (kind == "status_change") {
        std::cout << "[status] " << payload.dump() << "\n";
    }
}

void settle(runtime::Runtime& rt, std::int64_t max_ticks) {
    try {
        rt.run_until([](const runtime::Runtime& r) { return r.idle(); }, max_ticks);
    } catch (const runtime::MaxTicksExceeded&) {
        std::cout << "[note] still active after " << max_ticks << " ticks\n";
    }
}

/// Lines are commands; ":gesture g", ":key k", ":tick n" and ":status" are controls.
void run_line(runtime::Runtime& rt, const std::string& line, std::int64_t max_ticks) {
    if (line.empty()) return;
    if (line[0] != ':') {
        rt.submit_command(line);
        settle(rt, max_ticks);
        return;
    }
    std::istringstream in(line.substr(1));
    std::string verb;
    std::string arg;
    in >> verb >> arg;
    if (verb == "gesture") {
        rt.inject_gesture(arg);
        rt.run_ticks(2);
    } else if (verb == "key") {
        rt.inject_key(arg);
        rt.run_ticks(2);
    } else if (verb == "tick") {
        rt.run_ticks(arg.empty() ? 1 : std::stoll(arg));
    } else if (verb == "status") {
        std::cout << rt.snapshot()["robot"].dump() << "\n";
    } else {
        std::cout << "[error] unknown control :" << verb << "\n";
    }
}

int cmd_run(const Common& c, const std::vector<std::string>& commands, std::int64_t ticks, std::int64_t max_ticks,
            const std::string& log_path) {
    runtime::Runtime rt(make_config(c));
    rt.set_event_sink(print_event);
    auto guarded = [&](const std::string& line) {
        try {
            run_line(rt, line, max_ticks);
        } catch (const std::exception& e) {
            std::cout << "[error] " << e.what() << "\n";
        }
    };
    if (commands.empty()) {
        std::string line;
        while (std::getline(std::cin, line)) guarded(line);
    } else {
        for (const auto& line : commands) guarded(line);
    }
    if (ticks > 0) rt.run_ticks(ticks);
    const auto& log = rt.collect_trace();
    if (!log_path.empty()) log.save(log_path);
    std::cout << "[done] tick " << rt.tick_index() << ", " << rt.now_ms() << " ms\n";
    return 0;
}

int cmd_eval(const Common& c, const std::string& dir, std::optional<int> k, const std::string& report, const std::string& faults,
             bool logs) {
    eval::EvalOptions opts;
    opts.backend = intent::parse_backend(c.interpreter);
    opts.llm_model = c.llm_model;
    opts.llm_fixtures = c.llm_fixtures;
    opts.seed = c.seed;
    opts.k = k;
    opts.cog_cost_ms = c.cog_cost_ms;
    opts.keep_logs = logs;
    if (!faults.empty()) opts.faults = eval::load_fault_config(faults);
    const auto start = std::chrono::steady_clock::now();
    const auto specs = eval::load_scenarios(dir);
    const auto reports = eval::run_suite(specs, opts);
    std::vector<eval::ReportRow> rows;
    for (const auto& r : reports) rows.push_back(eval::to_row(r));
    rows.push_back(eval::average_row(rows));
    std::cout << eval::to_table(rows);
    if (!report.empty()) eval::emit_report(reports, report);
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << reports.size() << " scenarios in " << secs << " s\n";
    return 0;
}

int cmd_serve(const Common& c, const std::string& address, std::uint16_t port, const std::string& scenarios,
              std::int64_t period) {
    gateway::GatewayConfig gc;
    gc.runtime = make_config(c);
    gc.scenario_dir = scenarios;
    gc.tick_period_ms = period;
    gateway::GatewayCore core(std::move(gc));
    gateway::Server server(core, address, port);
    const auto bound = server.start();
    core.start();
    std::cout << "listening on http://" << address << ":" << bound << "\n" << std::flush;
    server.wait();
    core.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"btpilot: behavior-tree robot pilot with natural-language commands"};
    app.require_subcommand(1);

    Common run_c;
    std::vector<std::string> commands;
    std::int64_t ticks = 0;
    std::int64_t max_ticks = 600;
    std::string log_path;
    auto* run = app.add_subcommand("run", "run one robot; commands from --command or stdin lines");
    add_common(run, run_c);
    run->add_option("--command,-c", commands, "command text (repeatable)");
    run->add_option("--ticks", ticks, "extra ticks after the last command");
    run->add_option("--max-ticks", max_ticks, "tick budget per command");
    run->add_option("--log", log_path, "write the execution log (NDJSON)");

    Common eval_c;
    std::string scen_dir = BTPILOT_SCENARIO_DIR;
    std::optional<int> k;
    std::string report;
    std::string faults;
    bool logs = false;
    auto* ev = app.add_subcommand("eval", "run the scenario suite and report per-stage accuracy");
    add_common(ev, eval_c);
    ev->add_option("--scenarios", scen_dir, "scenario directory");
    ev->add_option("--k", k, "runs per scenario (overrides the files)")->check(CLI::PositiveNumber);
    ev->add_option("--report", report, "output directory for report.csv, report.txt and digests.txt");
    ev->add_option("--faults", faults, "per-stage fault probabilities (JSON)");
    ev->add_flag("--logs", logs, "also write every run's execution log");

    Common serve_c;
    std::string address = "127.0.0.1";
    std::uint16_t port = 8080;
    std::string serve_scen = BTPILOT_SCENARIO_DIR;
    std::int64_t period = 100;
    auto* serve = app.add_subcommand("serve", "HTTP and WebSocket gateway for the console");
    add_common(serve, serve_c);
    serve->add_option("--address", address, "bind address");
    serve->add_option("--port", port, "bind port (0 picks one)");
    serve->add_option("--scenarios", serve_scen, "scenario directory");
    serve->add_option("--tick-period-ms", period, "wall-clock pause between ticks");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(run_c, commands, ticks, max_ticks, log_path);
        if (*ev) return cmd_eval(eval_c, scen_dir, k, report, faults, logs);
        if (*serve) return cmd_serve(serve_c, address, port, serve_scen, period);
    } catch (const std::exception& e) {
        std::cerr << "btpilot: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
