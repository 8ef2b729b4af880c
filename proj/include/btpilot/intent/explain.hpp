#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "btpilot/intent/tools.hpp"

namespace btp::intent {

enum class FailureSource : std::uint8_t { Driver, Plugin };

struct FailureReport {
    std::vector<FailureMode> modes;  // non-empty, ordered
    FailureSource source = FailureSource::Driver;
    RuntimeContext context;
    std::string descriptor;  // target attributes for TargetNotFound, comma separated

    friend bool operator==(const FailureReport&, const FailureReport&) = default;
};

struct Explanation {
    std::string text;
    std::vector<FailureMode> modes_covered;

    friend bool operator==(const Explanation&, const Explanation&) = default;
};

/// Deterministic failure explanation (the reference templates).
///   [InvalidState]             -> "I cannot do it as the drone is on the ground."
///   [LowBattery]               -> "I cannot do it due to low battery."
///   [LowBattery, InvalidState] -> "I cannot do it due to low battery and robot status."
///   [TargetNotFound] "phone"   -> "No person with a phone detected"
/// Throws std::invalid_argument for an empty report.
Explanation explain_failure(const FailureReport& report);

/// "drone" or "robot", used in user-facing sentences.
std::string robot_noun(RobotKind kind);
/// "on the ground", "flying", "sitting", "standing".
std::string state_phrase(OpState state);

nlohmann::json to_json(const FailureReport& r);
nlohmann::json to_json(const Explanation& e);

}  // namespace btp::intent
