#pragma once

#include <optional>
#include <string>
#include <variant>

#include "btpilot/intent/command.hpp"
#include "btpilot/intent/explain.hpp"

namespace btp::intent {

struct PluginActivation {
    std::string plugin_id;
    std::string descriptor;  // track_person only

    friend bool operator==(const PluginActivation&, const PluginActivation&) = default;
};

struct DriverCommand {
    RobotKind robot = RobotKind::Drone;
    drivers::RobotCommand command;
};

struct StatusQuery {
    std::string tool;
    std::string text;
};

struct NoOp {
    std::optional<FailureReport> report;
};

using DispatchTarget = std::variant<PluginActivation, DriverCommand, StatusQuery, NoOp>;

struct DispatchDecision {
    DispatchTarget target;
    std::string rationale;

    /// "none", "driver:<verb>", "plugin:<id>" or "status".
    std::string pathway() const;
    const FailureReport* failure() const;
};

nlohmann::json to_json(const DispatchDecision& d);

/// Behavior selection: gates first, then the tool -> behavior mapping.
/// A ToolCall whose gates fail yields NoOp with a FailureReport for the
/// explanation function. Throws UnknownTool for unregistered tools and
/// std::invalid_argument for a Refusal (nothing to select).
DispatchDecision select_behavior(const InterpretedCommand& cmd, const RuntimeContext& ctx,
                                 const ToolRegistry& tools = ToolRegistry::standard());

/// Builds the driver command for a validated driver-class tool call.
drivers::RobotCommand to_robot_command(const ToolCall& call, std::int64_t issued_at = 0);

}  // namespace btp::intent
