#include <cmath>
#include <regex>

#include "btpilot/bus/bus.hpp"
#include "btpilot/eval/eval.hpp"

namespace btp::eval {

namespace {

/// The envelope of the first command submitted in the run.
const nlohmann::json* first_envelope(const ExecutionLog& log) {
    std::string id;
    for (const auto& r : log.records()) {
        if (r["type"] == "submit") {
            id = r.at("id").get<std::string>();
            break;
        }
    }
    if (id.empty()) return nullptr;
    for (const auto& r : log.records()) {
        if (r["type"] == "command" && r.at("envelope").at("id") == id) return &r.at("envelope");
    }
    return nullptr;
}

std::string interpreted_tool(const nlohmann::json& env) {
    const auto& i = env.at("interpreted");
    if (i.is_null()) return std::string();
    const auto& o = i.at("outcome");
    const std::string type = o.at("type").get<std::string>();
    if (type == "tool_call") return o.at("name").get<std::string>();
    if (type == "info_answer") return o.at("tool").get<std::string>();
    return "none";
}

std::string last_reply(const nlohmann::json& env) {
    const auto& replies = env.at("replies");
    return replies.empty() ? std::string() : replies.back().at("text").get<std::string>();
}

bool response_matches(const std::string& text, const ScenarioSpec& spec, intent::Backend backend) {
    const auto& e = spec.expected_response;
    const bool use_regex = backend == intent::Backend::Llm ? !e.regex.empty() : e.exact.empty();
    if (use_regex) return std::regex_match(text, std::regex(e.regex));
    return text == e.exact;
}

bool within(double actual, const nlohmann::json& expect) {
    const double value = expect.at("value").get<double>();
    const double tol = expect.value("tol", 0.05);
    return std::abs(actual - value) <= tol;
}

bool fail(std::string* why, std::string what) {
    if (why) *why = std::move(what);
    return false;
}

}  // namespace

bool final_predicates_hold(const ExecutionLog& log, const ScenarioSpec& spec, std::string* why) {
    const auto* header = log.header();
    const auto* final = log.final_record();
    if (!header || !final) return fail(why, "log lacks header or final record");
    const auto* env = first_envelope(log);
    const auto& status = final->at("status");
    const world::World w0 = world::world_from_json(header->at("config").at("world"));
    const world::World w1 = world::world_from_json(final->at("world"));

    for (const auto& [key, expect] : spec.expected_final.items()) {
        if (key == "op_state" || key == "connectivity") {
            if (status.at(key) != expect) return fail(why, key + " is " + status.at(key).dump());
        } else if (key == "active_plugin") {
            if (final->value("active_plugin", std::string()) != expect) return fail(why, "active_plugin differs");
        } else if (key == "terminal") {
            if (!env || env->at("terminal") != expect) return fail(why, "terminal differs");
        } else if (key == "driver_verbs") {
            nlohmann::json verbs = nlohmann::json::array();
            for (const auto& r : log.records()) {
                if (r["type"] == "invocation" && r["source"] == "intent" && r["outcome"]["result"] != "rejected") {
                    verbs.push_back(r["verb"]);
                }
            }
            if (verbs != expect) return fail(why, "driver verbs were " + verbs.dump());
        } else if (key == "heading_change") {
            const double d = world::wrap_angle(w1.robot.heading - w0.robot.heading);
            if (!within(d, expect)) return fail(why, "heading changed by " + std::to_string(d));
        } else if (key == "displacement") {
            const double dx = w1.robot.position.x - w0.robot.position.x;
            const double dy = w1.robot.position.y - w0.robot.position.y;
            const double along = dx * std::cos(w0.robot.heading) + dy * std::sin(w0.robot.heading);
            if (!within(along, expect)) return fail(why, "displacement was " + std::to_string(along));
        } else if (key == "centered_on") {
            const std::string person = expect.at("person").get<std::string>();
            const double tol = expect.value("tol_frac", 0.05) * w1.camera.image_width;
            bool ok = false;
            for (const auto& d : world::render_detections(w1, nullptr)) {
                if (d.person_id == person) ok = std::abs(d.bbox.center_u() - 0.5 * w1.camera.image_width) < tol;
            }
            if (!ok) return fail(why, "not centered on " + person);
        } else if (key == "plugin_failure") {
            bool seen = false;
            for (const auto& r : log.records()) {
                if (r["type"] != "message" || r["topic"] != bus::topics::kPluginFailures) continue;
                for (const auto& m : r["payload"]["modes"]) seen = seen || m == expect;
            }
            if (!seen) return fail(why, "no plugin failure " + expect.dump());
        } else if (key == "halted") {
            const auto& v = status.at("velocity");
            const bool still = v.value("vx", 0.0) == 0.0 && v.value("vy", 0.0) == 0.0 && v.value("yaw_rate", 0.0) == 0.0 &&
                               !status.at("busy").get<bool>();
            if (still != expect.get<bool>()) return fail(why, "halted is " + std::string(still ? "true" : "false"));
        }
    }
    return true;
}

bool judge_stage(const ExecutionLog& log, const ScenarioSpec& spec, Stage stage, intent::Backend backend) {
    const auto* env = first_envelope(log);
    if (!env) return false;
    switch (stage) {
        case Stage::Cog:
            return spec.expected_tool && interpreted_tool(*env) == *spec.expected_tool;
        case Stage::Disp: {
            std::string pathway = env->value("pathway", std::string());
            if (pathway.empty()) pathway = "none";
            return spec.expected_dispatch && pathway == *spec.expected_dispatch;
        }
        case Stage::Exec:
            return final_predicates_hold(log, spec) && response_matches(last_reply(*env), spec, backend);
    }
    return false;
}

}  // namespace btp::eval
