#include "btpilot/intent/tools.hpp"

#include <algorithm>
#include <cmath>

namespace btp::intent {

nlohmann::json to_json(const RuntimeContext& ctx) {
    return {{"robot", drivers::to_string(ctx.robot)},
            {"status", drivers::to_json(ctx.status)},
            {"active_plugin", ctx.active_plugin},
            {"available_tools", ctx.available_tools}};
}

std::vector<FailureMode> check_gates(const std::vector<Gate>& gates, const RuntimeContext& ctx) {
    bool disconnected = false;
    bool wrong_robot = false;
    bool low_battery = false;
    bool bad_state = false;
    for (const Gate& g : gates) {
        switch (g.kind) {
            case Gate::Kind::Connected:
                disconnected |= ctx.status.connectivity != drivers::Connectivity::Connected;
                break;
            case Gate::Kind::RobotIs:
                wrong_robot |= ctx.robot != g.robot;
                break;
            case Gate::Kind::BatteryAtLeast:
                low_battery |= ctx.status.battery < g.battery;
                break;
            case Gate::Kind::StateIn:
                bad_state |= std::find(g.states.begin(), g.states.end(), ctx.status.op_state) == g.states.end();
                break;
        }
    }
    if (disconnected) return {FailureMode::Disconnected};
    if (wrong_robot) return {FailureMode::UnsupportedAction};
    std::vector<FailureMode> out;
    if (low_battery) out.push_back(FailureMode::LowBattery);
    if (bad_state) out.push_back(FailureMode::InvalidState);
    return out;
}

UnknownTool::UnknownTool(std::string_view name) : std::runtime_error("unknown tool '" + std::string(name) + "'") {}

const std::vector<std::string>& known_plugins() {
    static const std::vector<std::string> ids{"hand_gesture", "keyboard", "person_tracking", "none"};
    return ids;
}

namespace {

ArgSpec number(std::string name, nlohmann::json def, std::string desc) {
    return {std::move(name), ArgType::Number, false, std::move(def), {}, std::move(desc)};
}

ArgSpec text(std::string name, bool required, nlohmann::json def, std::vector<std::string> choices, std::string desc) {
    return {std::move(name), ArgType::String, required, std::move(def), std::move(choices), std::move(desc)};
}

ToolRegistry build_standard() {
    using D = drivers::RobotKind;
    using S = drivers::OpState;
    const double kMin = drivers::kBatteryThreshold;
    ToolRegistry r;
    r.add({"take_off", "Take off and hover at 1 m (drone only).", {},
           {Gate::connected(), Gate::robot_is(D::Drone), Gate::battery_at_least(kMin), Gate::state_in({S::Landed})},
           ToolClass::Driver});
    r.add({"land", "Land the drone.", {},
           {Gate::connected(), Gate::robot_is(D::Drone), Gate::state_in({S::Flying})}, ToolClass::Driver});
    r.add({"flip", "Perform a flip (drone only).",
           {text("direction", false, "forward", {"forward", "backward", "left", "right"}, "flip direction")},
           {Gate::connected(), Gate::robot_is(D::Drone), Gate::battery_at_least(kMin), Gate::state_in({S::Flying})},
           ToolClass::Driver});
    r.add({"move", "Move with a body-frame velocity for a duration.",
           {number("vx", 0.0, "forward velocity, m/s (negative = backward)"),
            number("vy", 0.0, "leftward velocity, m/s (negative = right)"),
            number("yaw_rate", 0.0, "turn rate, rad/s (positive = left)"),
            number("duration", 1.0, "seconds, > 0")},
           {Gate::connected(), Gate::state_in({S::Flying, S::Standing})}, ToolClass::Driver});
    r.add({"rotate", "Rotate in place by an angle.",
           {{"angle", ArgType::Number, true, nullptr, {}, "radians, positive = counter-clockwise (left)"}},
           {Gate::connected(), Gate::state_in({S::Flying, S::Standing})}, ToolClass::Driver});
    r.add({"stand", "Stand up (legged robot only).", {},
           {Gate::connected(), Gate::robot_is(D::Legged), Gate::state_in({S::Sitting})}, ToolClass::Driver});
    r.add({"sit", "Sit down (legged robot only).", {},
           {Gate::connected(), Gate::robot_is(D::Legged), Gate::state_in({S::Standing})}, ToolClass::Driver});
    r.add({"stop", "Stop all motion.", {}, {Gate::connected()}, ToolClass::Driver});
    r.add({"switch_plugin", "Change the active control mode.",
           {text("plugin", true, nullptr, known_plugins(), "control plugin to enable")}, {Gate::connected()},
           ToolClass::Plugin});
    r.add({"track_person", "Find and follow a person with the given visual attribute.",
           {text("descriptor", true, nullptr, {}, "attribute of the person, e.g. phone")},
           {Gate::connected(), Gate::state_in({S::Flying, S::Standing})}, ToolClass::Plugin});
    r.add({"get_status", "Answer a question about the robot state.",
           {text("query", false, "status", {"battery", "status", "feasibility", "unknown_causes"}, "what is asked"),
            text("action", false, "", {}, "tool name, for feasibility questions")},
           {}, ToolClass::Info});
    r.add({"list_capabilities", "List the actions available for this robot.", {}, {}, ToolClass::Info});
    return r;
}

std::string_view type_name(ArgType t) { return t == ArgType::Number ? "number" : "string"; }

}  // namespace

const ToolRegistry& ToolRegistry::standard() {
    static const ToolRegistry r = build_standard();
    return r;
}

void ToolRegistry::add(ToolSpec spec) {
    if (find(spec.name)) {
        throw std::invalid_argument("tool '" + spec.name + "' registered twice");
    }
    tools_.push_back(std::move(spec));
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
    for (const auto& t : tools_) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

const ToolSpec& ToolRegistry::at(std::string_view name) const {
    if (const ToolSpec* t = find(name)) return *t;
    throw UnknownTool(name);
}

nlohmann::json ToolRegistry::validate(std::string_view tool, const nlohmann::json& args) const {
    const ToolSpec& spec = at(tool);
    if (!args.is_null() && !args.is_object()) {
        throw InvalidArguments(std::string(tool) + ": args must be an object");
    }
    nlohmann::json out = nlohmann::json::object();
    if (args.is_object()) {
        for (const auto& [key, value] : args.items()) {
            auto it = std::find_if(spec.args.begin(), spec.args.end(), [&](const ArgSpec& a) { return a.name == key; });
            if (it == spec.args.end()) {
                throw InvalidArguments(std::string(tool) + ": unknown argument '" + key + "'");
            }
        }
    }
    for (const ArgSpec& a : spec.args) {
        nlohmann::json v;
        if (args.is_object() && args.contains(a.name) && !args.at(a.name).is_null()) {
            v = args.at(a.name);
        } else if (!a.default_value.is_null()) {
            v = a.default_value;
        } else if (a.required) {
            throw InvalidArguments(std::string(tool) + ": missing required argument '" + a.name + "'");
        } else {
            continue;
        }
        if (a.type == ArgType::Number) {
            if (!v.is_number() || !std::isfinite(v.get<double>())) {
                throw InvalidArguments(std::string(tool) + ": '" + a.name + "' must be a " + std::string(type_name(a.type)));
            }
            v = v.get<double>();
        } else {
            if (!v.is_string()) {
                throw InvalidArguments(std::string(tool) + ": '" + a.name + "' must be a string");
            }
            if (!a.choices.empty() &&
                std::find(a.choices.begin(), a.choices.end(), v.get<std::string>()) == a.choices.end()) {
                throw InvalidArguments(std::string(tool) + ": '" + a.name + "' has unsupported value '" +
                                       v.get<std::string>() + "'");
            }
        }
        out[a.name] = std::move(v);
    }
    if (tool == "move" && !(out.at("duration").get<double>() > 0.0)) {
        throw InvalidArguments("move: duration must be > 0");
    }
    if (tool == "track_person" && out.at("descriptor").get<std::string>().empty()) {
        throw InvalidArguments("track_person: descriptor must not be empty");
    }
    return out;
}

nlohmann::json ToolRegistry::describe() const {
    nlohmann::json tools = nlohmann::json::array();
    for (const auto& t : tools_) {
        nlohmann::json args = nlohmann::json::object();
        for (const auto& a : t.args) {
            nlohmann::json d{{"type", type_name(a.type)}, {"required", a.required}, {"description", a.description}};
            if (!a.default_value.is_null()) d["default"] = a.default_value;
            if (!a.choices.empty()) d["enum"] = a.choices;
            args[a.name] = std::move(d);
        }
        tools.push_back({{"name", t.name}, {"description", t.description}, {"args", std::move(args)}});
    }
    return tools;
}

}  // namespace btp::intent
