#include "btpilot/intent/dispatch.hpp"
#include "btpilot/intent/interpret.hpp"

#include <algorithm>

namespace btp::intent {

namespace dc = drivers::cmd;

std::string DispatchDecision::pathway() const {
    if (const auto* p = std::get_if<PluginActivation>(&target)) return "plugin:" + p->plugin_id;
    if (const auto* d = std::get_if<DriverCommand>(&target)) return "driver:" + std::string(drivers::verb_name(d->command.verb));
    if (std::holds_alternative<StatusQuery>(target)) return "status";
    return "none";
}

const FailureReport* DispatchDecision::failure() const {
    if (const auto* n = std::get_if<NoOp>(&target)) {
        return n->report ? &*n->report : nullptr;
    }
    return nullptr;
}

nlohmann::json to_json(const DispatchDecision& d) {
    nlohmann::json j{{"pathway", d.pathway()}, {"rationale", d.rationale}};
    if (const auto* p = std::get_if<PluginActivation>(&d.target)) {
        j["plugin_id"] = p->plugin_id;
        if (!p->descriptor.empty()) j["descriptor"] = p->descriptor;
    } else if (const auto* c = std::get_if<DriverCommand>(&d.target)) {
        j["robot"] = drivers::to_string(c->robot);
        j["command"] = drivers::to_json(c->command);
    } else if (const auto* s = std::get_if<StatusQuery>(&d.target)) {
        j["tool"] = s->tool;
        j["text"] = s->text;
    } else if (const auto* r = d.failure()) {
        j["report"] = to_json(*r);
    }
    return j;
}

drivers::RobotCommand to_robot_command(const ToolCall& call, std::int64_t issued_at) {
    const auto& a = call.args;
    drivers::RobotCommand c;
    c.issued_at = issued_at;
    if (call.name == "take_off") c.verb = dc::TakeOff{};
    else if (call.name == "land") c.verb = dc::Land{};
    else if (call.name == "flip") c.verb = dc::Flip{drivers::parse_flip_direction(a.value("direction", std::string("forward")))};
    else if (call.name == "move")
        c.verb = dc::Move{a.value("vx", 0.0), a.value("vy", 0.0), a.value("yaw_rate", 0.0), a.value("duration", 1.0)};
    else if (call.name == "rotate") c.verb = dc::Rotate{a.at("angle").get<double>()};
    else if (call.name == "stand") c.verb = dc::Stand{};
    else if (call.name == "sit") c.verb = dc::Sit{};
    else if (call.name == "stop") c.verb = dc::Stop{};
    else throw std::invalid_argument("'" + call.name + "' is not a driver tool");
    return c;
}

DispatchDecision select_behavior(const InterpretedCommand& cmd, const RuntimeContext& ctx, const ToolRegistry& tools) {
    if (const InfoAnswer* info = cmd.info()) {
        tools.at(info->tool);
        return {StatusQuery{info->tool, info->text}, "information request answered from the runtime context"};
    }
    const ToolCall* call = cmd.tool_call();
    if (!call) {
        throw std::invalid_argument("select_behavior needs a tool call or an info answer");
    }
    const ToolSpec& spec = tools.at(call->name);

    auto modes = check_gates(spec.gates, ctx);
    if (!modes.empty()) {
        FailureReport r{std::move(modes), FailureSource::Driver, ctx, {}};
        return {NoOp{std::move(r)}, "gating predicate of '" + spec.name + "' violated"};
    }

    switch (spec.cls) {
        case ToolClass::Driver:
            return {DriverCommand{ctx.robot, to_robot_command(*call)}, "'" + spec.name + "' maps to a driver command"};
        case ToolClass::Plugin: {
            if (call->name == "track_person") {
                return {PluginActivation{"person_tracking", call->args.at("descriptor").get<std::string>()},
                        "tracking request activates the person tracking plugin"};
            }
            const std::string id = call->args.at("plugin").get<std::string>();
            const auto& known = known_plugins();
            if (std::find(known.begin(), known.end(), id) == known.end()) {
                FailureReport r{{FailureMode::UnsupportedAction}, FailureSource::Plugin, ctx, {}};
                return {NoOp{std::move(r)}, "plugin '" + id + "' is not registered"};
            }
            return {PluginActivation{id, {}}, "control mode switch"};
        }
        case ToolClass::Info:
            return {StatusQuery{call->name, answer_info(*call, ctx)}, "information request"};
    }
    return {NoOp{}, "unreachable"};
}

}  // namespace btp::intent
