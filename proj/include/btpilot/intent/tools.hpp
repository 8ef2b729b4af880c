#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "btpilot/drivers/driver.hpp"

namespace btp::intent {

using drivers::FailureMode;
using drivers::OpState;
using drivers::RobotKind;
using drivers::RobotStatus;

/// Snapshot of the robot as seen when a command arrives.
struct RuntimeContext {
    RobotKind robot = RobotKind::Drone;
    RobotStatus status;
    std::string active_plugin = "none";
    std::vector<std::string> available_tools;  // empty = every registered tool

    friend bool operator==(const RuntimeContext&, const RuntimeContext&) = default;
};

nlohmann::json to_json(const RuntimeContext& ctx);

enum class ArgType : std::uint8_t { Number, String };

struct ArgSpec {
    std::string name;
    ArgType type = ArgType::Number;
    bool required = false;
    nlohmann::json default_value;          // null = no default
    std::vector<std::string> choices;      // String args only; empty = free text
    std::string description;
};

/// Machine-checkable precondition on the runtime context.
struct Gate {
    enum class Kind : std::uint8_t { Connected, RobotIs, BatteryAtLeast, StateIn };
    Kind kind;
    RobotKind robot = RobotKind::Drone;
    double battery = 0.0;
    std::vector<OpState> states;

    static Gate connected() { return {Kind::Connected, {}, 0.0, {}}; }
    static Gate robot_is(RobotKind r) { return {Kind::RobotIs, r, 0.0, {}}; }
    static Gate battery_at_least(double b) { return {Kind::BatteryAtLeast, {}, b, {}}; }
    static Gate state_in(std::vector<OpState> s) { return {Kind::StateIn, {}, 0.0, std::move(s)}; }
};

enum class ToolClass : std::uint8_t { Driver, Plugin, Info };

struct ToolSpec {
    std::string name;
    std::string description;
    std::vector<ArgSpec> args;
    std::vector<Gate> gates;
    ToolClass cls = ToolClass::Driver;
};

/// Failure modes raised by `gates` against `ctx`. A lost connection is reported
/// on its own; otherwise the order is unsupported robot, battery, state.
std::vector<FailureMode> check_gates(const std::vector<Gate>& gates, const RuntimeContext& ctx);

class InvalidArguments : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnknownTool : public std::runtime_error {
public:
    explicit UnknownTool(std::string_view name);
};

class ToolRegistry {
public:
    /// The twelve shipped tools.
    static const ToolRegistry& standard();

    void add(ToolSpec spec);
    const ToolSpec* find(std::string_view name) const;
    const ToolSpec& at(std::string_view name) const;  // throws UnknownTool
    const std::vector<ToolSpec>& tools() const { return tools_; }

    /// Fills defaults and validates types, choices and required args.
    /// Unknown argument names are rejected. Throws InvalidArguments.
    nlohmann::json validate(std::string_view tool, const nlohmann::json& args) const;

    /// JSON description used in the LLM system prompt.
    nlohmann::json describe() const;

private:
    std::vector<ToolSpec> tools_;
};

/// Plugin ids that switch_plugin accepts. "none" disables every plugin.
const std::vector<std::string>& known_plugins();

}  // namespace btp::intent
