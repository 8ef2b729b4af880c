#include "btpilot/intent/explain.hpp"

#include <sstream>

namespace btp::intent {

std::string robot_noun(RobotKind kind) { return kind == RobotKind::Drone ? "drone" : "robot"; }

std::string state_phrase(OpState state) {
    switch (state) {
        case OpState::Landed: return "on the ground";
        case OpState::Flying: return "flying";
        case OpState::Sitting: return "sitting";
        case OpState::Standing: return "standing";
    }
    return "in an unknown state";
}

namespace {

std::string mode_phrase(FailureMode m) {
    switch (m) {
        case FailureMode::LowBattery: return "low battery";
        case FailureMode::InvalidState: return "robot status";
        case FailureMode::Disconnected: return "a lost connection";
        case FailureMode::UnsupportedAction: return "an unsupported action";
        case FailureMode::TargetNotFound: return "a missing target";
        case FailureMode::Busy: return "an ongoing action";
        case FailureMode::Timeout: return "a backend timeout";
    }
    return "an unknown failure";
}

// "phone" -> "a phone"; "phone,red shirt" -> "a phone and a red shirt"
std::string describe_attributes(const std::string& descriptor) {
    std::vector<std::string> parts;
    std::stringstream ss(descriptor);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto b = item.find_first_not_of(' ');
        auto e = item.find_last_not_of(' ');
        if (b == std::string::npos) continue;
        item = item.substr(b, e - b + 1);
        const bool vowel = std::string("aeiou").find(item[0]) != std::string::npos;
        parts.push_back((vowel ? "an " : "a ") + item);
    }
    if (parts.empty()) return "the requested attributes";
    std::string out = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) out += " and " + parts[i];
    return out;
}

std::string single(FailureMode m, const FailureReport& r) {
    const std::string noun = robot_noun(r.context.robot);
    switch (m) {
        case FailureMode::InvalidState: {
            const OpState s = r.context.status.op_state;
            const bool already = s == OpState::Flying || s == OpState::Standing;
            return "I cannot do it as the " + noun + " is " + (already ? "already " : "") + state_phrase(s) + ".";
        }
        case FailureMode::LowBattery: return "I cannot do it due to low battery.";
        case FailureMode::Disconnected: return "I cannot do it as the " + noun + " is disconnected.";
        case FailureMode::UnsupportedAction: return "I cannot perform this action.";
        case FailureMode::TargetNotFound: return "No person with " + describe_attributes(r.descriptor) + " detected";
        case FailureMode::Busy: return "I cannot do it as the " + noun + " is busy with another action.";
        case FailureMode::Timeout: return "I could not process the command in time.";
    }
    return "I cannot do it.";
}

}  // namespace

Explanation explain_failure(const FailureReport& report) {
    if (report.modes.empty()) {
        throw std::invalid_argument("failure report without modes");
    }
    Explanation e;
    e.modes_covered = report.modes;
    if (report.modes.size() == 1) {
        e.text = single(report.modes.front(), report);
        return e;
    }
    std::string joined = mode_phrase(report.modes[0]);
    for (std::size_t i = 1; i < report.modes.size(); ++i) joined += " and " + mode_phrase(report.modes[i]);
    e.text = "I cannot do it due to " + joined + ".";
    return e;
}

nlohmann::json to_json(const FailureReport& r) {
    nlohmann::json modes = nlohmann::json::array();
    for (auto m : r.modes) modes.push_back(drivers::to_string(m));
    nlohmann::json j{{"modes", std::move(modes)},
                     {"source", r.source == FailureSource::Driver ? "driver" : "plugin"},
                     {"context", to_json(r.context)}};
    if (!r.descriptor.empty()) j["descriptor"] = r.descriptor;
    return j;
}

nlohmann::json to_json(const Explanation& e) {
    nlohmann::json modes = nlohmann::json::array();
    for (auto m : e.modes_covered) modes.push_back(drivers::to_string(m));
    return {{"text", e.text}, {"modes_covered", std::move(modes)}};
}

}  // namespace btp::intent
