#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <regex>

#include "btpilot/intent/interpret.hpp"

namespace btp::intent {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTurnRate = 0.5;

const std::string kNum = R"((\d+(?:\.\d+)?|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|fifteen|twenty|thirty))";
const std::string kSeconds = R"(\s*(?:s|sec|secs|second|seconds)\b)";

double parse_number(const std::string& s) {
    static const std::map<std::string, double> words{
        {"one", 1},    {"two", 2},      {"three", 3},   {"four", 4},     {"five", 5},    {"six", 6},
        {"seven", 7},  {"eight", 8},    {"nine", 9},    {"ten", 10},     {"eleven", 11}, {"twelve", 12},
        {"fifteen", 15}, {"twenty", 20}, {"thirty", 30}};
    auto it = words.find(s);
    if (it != words.end()) return it->second;
    return std::stod(s);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool has(const std::string& text, const std::regex& re) { return std::regex_search(text, re); }

std::optional<double> find_number(const std::string& text, const std::string& pattern) {
    std::smatch m;
    if (std::regex_search(text, m, std::regex(pattern))) return parse_number(m[1].str());
    return std::nullopt;
}

InterpretedCommand call(std::string_view query, std::string name, nlohmann::json args = nlohmann::json::object()) {
    return {std::string(query), ToolCall{std::move(name), std::move(args)}, Backend::Reference, {}};
}

InterpretedCommand refuse(std::string_view query) {
    return {std::string(query), Refusal{FailureMode::UnsupportedAction, std::string(kCannotPerform), {}}, Backend::Reference, {}};
}

std::string normalise_descriptor(std::string d) {
    static const std::regex trailing(R"([\s.!?]+$)");
    static const std::regex article(R"(^(?:a|an|the)\s+)");
    static const std::regex phone(R"(\b(?:cell\s?phone|mobile(?:\s+phone)?|smart\s?phone)\b)");
    d = std::regex_replace(d, trailing, "");
    d = std::regex_replace(d, article, "");
    d = std::regex_replace(d, phone, "phone");
    return d;
}

std::optional<std::string> plugin_from_text(const std::string& t) {
    if (has(t, std::regex(R"(\bgestures?\b)"))) return "hand_gesture";
    if (has(t, std::regex(R"(\bkeyboard\b|\bkeys\b)"))) return "keyboard";
    if (has(t, std::regex(R"(\btracking\b)"))) return "person_tracking";
    if (has(t, std::regex(R"(\b(?:none|off|manual|nothing)\b)"))) return "none";
    return std::nullopt;
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

InterpretedCommand reference_interpret(std::string_view query) {
    const std::string t = lower(trim(query));
    std::smatch m;

    if (has(t, std::regex(R"(\b(?:which|what)\b.*\b(?:actions?|commands?|capabilit\w*)\b)")) ||
        has(t, std::regex(R"(\bwhat can (?:you|i|it) do\b)"))) {
        return call(query, "list_capabilities");
    }
    if (has(t, std::regex(R"(\bcauses?\b.*\bunknown\b|\bunknown\b.*\bcauses?\b|\bwhy\b.*\bunknown\b)"))) {
        return call(query, "get_status", {{"query", "unknown_causes"}});
    }
    if (std::regex_search(t, m, std::regex(R"(^(?:can|could|may) (?:i|we|you|it)\b\s*(.*)$)"))) {
        auto inner = reference_interpret(m[1].str());
        const auto* tc = inner.tool_call();
        if (!tc || tc->name == "get_status" || tc->name == "list_capabilities") {
            return refuse(query);
        }
        return call(query, "get_status", {{"query", "feasibility"}, {"action", tc->name}});
    }
    if (has(t, std::regex(R"(\bbattery\b)"))) {
        return call(query, "get_status", {{"query", "battery"}});
    }
    if (has(t, std::regex(R"(\b(?:status|state)\b)"))) {
        return call(query, "get_status", {{"query", "status"}});
    }
    if (std::regex_search(t, m, std::regex(R"(\b(?:change|switch|set)\b.*\b(?:control|mode)\b.*\bto\b(.*)$)")) ||
        std::regex_search(t, m, std::regex(R"(\buse\b(.*)$)"))) {
        if (auto plugin = plugin_from_text(m[1].str())) {
            return call(query, "switch_plugin", {{"plugin", *plugin}});
        }
        return refuse(query);
    }
    if (std::regex_search(t, m, std::regex(R"(\b(?:track|follow|find)\b.*\b(?:person|man|woman|someone|people)\b(?:.*?\b(?:with|holding|carrying|wearing)\b\s+(.+))?$)"))) {
        std::string d = m[1].matched ? normalise_descriptor(m[1].str()) : std::string();
        if (d.empty()) return refuse(query);
        return call(query, "track_person", {{"descriptor", d}});
    }
    if (std::regex_search(t, m, std::regex(R"(\bflip\b(?:.*\b(forward|forwards|backward|backwards|left|right)\b)?)"))) {
        std::string dir = m[1].matched ? m[1].str() : "forward";
        if (dir.back() == 's') dir.pop_back();
        return call(query, "flip", {{"direction", dir}});
    }
    if (has(t, std::regex(R"(\btake[\s-]?off\b|\blift[\s-]?off\b|\blaunch\b)"))) {
        return call(query, "take_off");
    }
    if (has(t, std::regex(R"(\bland\b)"))) {
        return call(query, "land");
    }
    if (has(t, std::regex(R"(\b(?:turn|rotate|spin)\b.*\baround\b)"))) {
        return call(query, "rotate", {{"angle", kPi}});
    }
    if (std::regex_search(t, m, std::regex(R"(\b(?:turn|rotate|spin)\b\s*(?:to the\s+)?(left|right)?)"))) {
        const double sign = m[1].matched && m[1].str() == "right" ? -1.0 : 1.0;
        if (auto secs = find_number(t, R"(\bfor\s+)" + kNum + kSeconds)) {
            return call(query, "move", {{"yaw_rate", sign * kTurnRate}, {"duration", *secs}});
        }
        double deg = find_number(t, R"(\bby\s+)" + kNum + R"(\s*(?:deg|degree|degrees)\b)").value_or(90.0);
        return call(query, "rotate", {{"angle", sign * deg * kPi / 180.0}});
    }
    if (std::regex_search(t, m, std::regex(R"(\b(?:move|go|walk|fly|drive)\b\s*(forwards?|ahead|backwards?|back|left|right)\b)"))) {
        const std::string dir = m[1].str();
        double v = find_number(t, R"(\b(?:with|at)\s+(?:a\s+)?(?:velocity|speed)\s+(?:of\s+)?)" + kNum).value_or(drivers::kDefaultSpeed);
        double secs = find_number(t, R"(\bfor\s+)" + kNum + kSeconds).value_or(1.0);
        nlohmann::json args{{"duration", secs}};
        if (dir.rfind("forward", 0) == 0 || dir == "ahead") args["vx"] = v;
        else if (dir.rfind("backward", 0) == 0 || dir == "back") args["vx"] = -v;
        else if (dir == "left") args["vy"] = v;
        else args["vy"] = -v;
        return call(query, "move", args);
    }
    if (has(t, std::regex(R"(\bstand\b)"))) return call(query, "stand");
    if (has(t, std::regex(R"(\bsit\b)"))) return call(query, "sit");
    if (has(t, std::regex(R"(\b(?:stop|halt|freeze|hover)\b)"))) return call(query, "stop");
    return refuse(query);
}

namespace {

std::string battery_text(double b) { return std::to_string(std::lround(b)) + "%"; }

std::string capability_phrase(std::string_view tool) {
    static const std::map<std::string, std::string, std::less<>> phrases{
        {"take_off", "take off"},        {"land", "land"},
        {"flip", "do a flip"},           {"move", "move"},
        {"rotate", "rotate"},            {"stand", "stand up"},
        {"sit", "sit down"},             {"stop", "stop"},
        {"switch_plugin", "switch the control mode"},
        {"track_person", "track a person"}, {"get_status", "ask for the status"}};
    auto it = phrases.find(tool);
    return it == phrases.end() ? std::string(tool) : it->second;
}

}  // namespace

std::string answer_info(const ToolCall& call, const RuntimeContext& ctx) {
    const ToolRegistry& tools = ToolRegistry::standard();
    const std::string noun = robot_noun(ctx.robot);
    const auto& st = ctx.status;
    const bool connected = st.connectivity == drivers::Connectivity::Connected;

    if (call.name == "list_capabilities") {
        std::vector<std::string> items;
        for (const auto& t : tools.tools()) {
            if (t.name == "list_capabilities") continue;
            bool ok = true;
            for (const auto& g : t.gates) {
                if (g.kind == Gate::Kind::RobotIs && g.robot != ctx.robot) ok = false;
            }
            if (ok) items.push_back(capability_phrase(t.name));
        }
        std::string text = "You can ";
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i > 0) text += i + 1 == items.size() ? " and " : ", ";
            text += items[i];
        }
        return text + ".";
    }
    if (call.name != "get_status") {
        throw std::invalid_argument("'" + call.name + "' is not an info tool");
    }
    const std::string q = call.args.value("query", std::string("status"));
    if (q == "battery") {
        return "The battery level is " + battery_text(st.battery);
    }
    if (q == "unknown_causes") {
        return "The common causes for the robot state being unknown could be a lost network connection, "
               "a drained battery, the robot being out of communication range, or a stopped driver process.";
    }
    if (q == "feasibility") {
        const std::string action = call.args.value("action", std::string());
        const ToolSpec& spec = tools.at(action);
        auto modes = check_gates(spec.gates, ctx);
        if (modes.empty()) {
            return "Yes, since the " + noun + " is " + state_phrase(st.op_state) + " and the battery level is " +
                   battery_text(st.battery);
        }
        std::vector<std::string> reasons;
        for (auto m : modes) {
            if (m == FailureMode::Disconnected) reasons.push_back("the " + noun + " is disconnected");
            if (m == FailureMode::UnsupportedAction) reasons.push_back("the " + noun + " does not support this action");
        }
        bool low = std::find(modes.begin(), modes.end(), FailureMode::LowBattery) != modes.end();
        bool state = std::find(modes.begin(), modes.end(), FailureMode::InvalidState) != modes.end();
        if (state) reasons.push_back("the " + noun + " is " + state_phrase(st.op_state));
        if (low) reasons.push_back("the battery level is " + battery_text(st.battery));
        std::string text = "No, since " + reasons[0];
        for (std::size_t i = 1; i < reasons.size(); ++i) text += " and " + reasons[i];
        return text;
    }
    // status
    if (!connected) {
        return "The " + noun + " status is unknown as it is disconnected";
    }
    return "The " + noun + " is " + state_phrase(st.op_state) + " with a battery of " + battery_text(st.battery);
}

InterpretedCommand ReferenceInterpreter::run(std::string_view query, const RuntimeContext&) {
    return reference_interpret(query);
}

InterpretedCommand interpret(std::string_view query, const RuntimeContext& ctx, Interpreter& backend,
                             const ToolRegistry& tools) {
    const std::string q = trim(query);
    if (q.empty()) {
        throw EmptyQuery();
    }
    InterpretedCommand out = backend.run(q, ctx);
    out.query = q;
    out.backend = backend.backend();

    if (const ToolCall* tc = out.tool_call()) {
        const ToolSpec* spec = tools.find(tc->name);
        if (!spec) {
            out.outcome = Refusal{FailureMode::UnsupportedAction, std::string(kCannotPerform), "unknown tool '" + tc->name + "'"};
            return out;
        }
        if (!ctx.available_tools.empty() &&
            std::find(ctx.available_tools.begin(), ctx.available_tools.end(), tc->name) == ctx.available_tools.end()) {
            out.outcome = Refusal{FailureMode::UnsupportedAction, std::string(kCannotPerform), "tool '" + tc->name + "' not available"};
            return out;
        }
        ToolCall filled;
        try {
            filled = ToolCall{tc->name, tools.validate(tc->name, tc->args)};
        } catch (const InvalidArguments& e) {
            out.outcome = Refusal{FailureMode::UnsupportedAction, std::string(kCannotPerform), e.what()};
            return out;
        }
        if (spec->cls == ToolClass::Info) {
            std::string text;
            try {
                text = answer_info(filled, ctx);
            } catch (const std::exception& e) {
                out.outcome = Refusal{FailureMode::UnsupportedAction, std::string(kCannotPerform), e.what()};
                return out;
            }
            // An LLM backend may phrase the answer itself.
            if (out.backend == Backend::Llm && !out.say.empty()) text = out.say;
            out.outcome = InfoAnswer{filled.name, text};
        } else {
            out.outcome = std::move(filled);
        }
    }
    return out;
}

}  // namespace btp::intent
