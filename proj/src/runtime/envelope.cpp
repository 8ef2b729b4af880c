#include <cctype>

#include "btpilot/runtime/runtime.hpp"

namespace btp::runtime {

QueueFull::QueueFull(std::size_t capacity)
    : std::runtime_error("queue is full (" + std::to_string(capacity) + " pending)") {}

MaxTicksExceeded::MaxTicksExceeded(std::int64_t max_ticks)
    : std::runtime_error("condition not met within " + std::to_string(max_ticks) + " ticks") {}

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::Cog: return "cog";
        case Stage::Disp: return "disp";
        case Stage::Exec: return "exec";
    }
    return "cog";
}

std::string_view to_string(Terminal t) {
    switch (t) {
        case Terminal::Completed: return "completed";
        case Terminal::Refused: return "refused";
        case Terminal::Failed: return "failed";
    }
    return "failed";
}

Terminal parse_terminal(std::string_view text) {
    if (text == "completed") return Terminal::Completed;
    if (text == "refused") return Terminal::Refused;
    if (text == "failed") return Terminal::Failed;
    throw std::invalid_argument("unknown terminal state '" + std::string(text) + "'");
}

std::string CommandEnvelope::last_reply() const { return replies.empty() ? std::string() : replies.back().text; }

namespace {

nlohmann::json mark_json(const std::optional<StageMark>& m) {
    if (!m) return nullptr;
    return {{"start", m->start}, {"end", m->end}};
}

std::optional<StageMark> mark_from(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return StageMark{j.at("start").get<std::int64_t>(), j.at("end").get<std::int64_t>()};
}

}  // namespace

nlohmann::json to_json(const CommandEnvelope& e) {
    nlohmann::json modes = nlohmann::json::array();
    for (auto m : e.failure_modes) modes.push_back(drivers::to_string(m));
    nlohmann::json replies = nlohmann::json::array();
    for (const auto& r : e.replies) replies.push_back({{"kind", r.kind}, {"text", r.text}, {"t_ms", r.t_ms}});
    return {{"id", e.id},
            {"text", e.text},
            {"submitted_at", e.submitted_at},
            {"submitted_tick", e.submitted_tick},
            {"stage_marks", {{"cog", mark_json(e.cog)}, {"disp", mark_json(e.disp)}, {"exec", mark_json(e.exec)}}},
            {"terminal", e.terminal ? nlohmann::json(to_string(*e.terminal)) : nlohmann::json(nullptr)},
            {"interpreted", e.interpreted ? intent::to_json(*e.interpreted) : nlohmann::json(nullptr)},
            {"pathway", e.pathway},
            {"failure_modes", std::move(modes)},
            {"replies", std::move(replies)},
            {"timings", e.terminal ? to_json(timings_of(e)) : nlohmann::json(nullptr)}};
}

CommandEnvelope envelope_from_json(const nlohmann::json& j) {
    CommandEnvelope e;
    e.id = j.at("id").get<std::string>();
    e.text = j.at("text").get<std::string>();
    e.submitted_at = j.value("submitted_at", std::int64_t{0});
    e.submitted_tick = j.value("submitted_tick", std::int64_t{0});
    const auto& marks = j.at("stage_marks");
    e.cog = mark_from(marks.at("cog"));
    e.disp = mark_from(marks.at("disp"));
    e.exec = mark_from(marks.at("exec"));
    if (!j.at("terminal").is_null()) e.terminal = parse_terminal(j.at("terminal").get<std::string>());
    if (j.contains("interpreted") && !j.at("interpreted").is_null()) {
        e.interpreted = intent::interpreted_from_json(j.at("interpreted"));
    }
    e.pathway = j.value("pathway", std::string());
    for (const auto& m : j.value("failure_modes", nlohmann::json::array())) {
        e.failure_modes.push_back(drivers::parse_failure_mode(m.get<std::string>()));
    }
    for (const auto& r : j.value("replies", nlohmann::json::array())) {
        e.replies.push_back({r.at("kind").get<std::string>(), r.at("text").get<std::string>(), r.at("t_ms").get<std::int64_t>()});
    }
    return e;
}

StageTimings timings_of(const CommandEnvelope& e) {
    StageTimings t;
    if (e.cog) t.cog = e.cog->duration();
    if (e.disp) t.disp = e.disp->duration();
    if (e.exec) t.exec = e.exec->duration();
    t.total = t.cog.value_or(0) + t.disp.value_or(0) + t.exec.value_or(0);
    return t;
}

nlohmann::json to_json(const StageTimings& t) {
    auto opt = [](const std::optional<std::int64_t>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"L_cog", opt(t.cog)}, {"L_disp", opt(t.disp)}, {"L_exec", opt(t.exec)}, {"L_total", t.total}};
}

std::string driver_ack(std::string_view verb, RobotKind robot) {
    const std::string noun = robot == RobotKind::Drone ? "drone" : "robot";
    if (verb == "flip") return "Flip maneuver executed.";
    if (verb == "take_off") return "The " + noun + " took off.";
    if (verb == "land") return "The " + noun + " landed.";
    if (verb == "move") return "Motion executed.";
    if (verb == "rotate") return "Rotation executed.";
    if (verb == "stand") return "The robot is standing.";
    if (verb == "sit") return "The robot is sitting.";
    if (verb == "stop") return "The " + noun + " stopped.";
    return "Done.";
}

std::string plugin_ack(std::string_view plugin_id) {
    if (plugin_id == "hand_gesture") return "You can now control the robot using hand gestures.";
    if (plugin_id == "keyboard") return "You can now control the robot using the keyboard.";
    if (plugin_id == "person_tracking") return "You can now control the robot using person tracking.";
    return "Plugin control disabled.";
}

std::string tracking_ack(std::string_view descriptor) {
    auto items = plugins::parse_descriptor(descriptor);
    std::string joined;
    for (const auto& i : items) {
        if (!joined.empty()) joined += " and ";
        joined += i;
    }
    if (joined.empty()) joined = "target";
    const char first = static_cast<char>(std::tolower(static_cast<unsigned char>(joined.front())));
    const std::string article = std::string("aeiou").find(first) != std::string::npos ? "an" : "a";
    return "Now tracking the person with " + article + " " + joined + ".";
}

}  // namespace btp::runtime
