#include <algorithm>
#include <fstream>
#include <regex>

#include "btpilot/eval/eval.hpp"

namespace btp::eval {

ParseError::ParseError(std::string file, std::string field, const std::string& why)
    : std::runtime_error(file + ": field '" + field + "': " + why), file_(std::move(file)), field_(std::move(field)) {}

std::string ScenarioSpec::key() const { return id + "/" + std::string(drivers::to_string(robot)); }

namespace {

struct Reader {
    const nlohmann::json& doc;
    const std::string& file;

    const nlohmann::json& required(const char* field) const {
        if (!doc.contains(field)) throw ParseError(file, field, "missing");
        return doc.at(field);
    }

    std::string string(const char* field) const {
        const auto& v = required(field);
        if (!v.is_string()) throw ParseError(file, field, "expected a string");
        auto s = v.get<std::string>();
        if (s.empty()) throw ParseError(file, field, "must not be empty");
        return s;
    }

    std::optional<std::string> optional_string(const char* field) const {
        if (!doc.contains(field) || doc.at(field).is_null()) return std::nullopt;
        if (!doc.at(field).is_string()) throw ParseError(file, field, "expected a string");
        return doc.at(field).get<std::string>();
    }

    std::int64_t positive(const char* field, std::int64_t fallback) const {
        if (!doc.contains(field)) return fallback;
        const auto& v = doc.at(field);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 1) throw ParseError(file, field, "expected a positive integer");
        return v.get<std::int64_t>();
    }
};

int numeric_order(const std::string& id, std::size_t part) {
    // "Phi4.2" -> part 0: 4, part 1: 2
    std::smatch m;
    static const std::regex re(R"(^Phi(\d+)\.(\d+)$)");
    if (!std::regex_match(id, m, re)) return 0;
    return std::stoi(m[part + 1].str());
}

}  // namespace

ScenarioSpec parse_scenario(const nlohmann::json& doc, const std::string& file) {
    if (!doc.is_object()) throw ParseError(file, "<root>", "expected an object");
    Reader r{doc, file};
    ScenarioSpec s;
    s.file = file;
    s.id = r.string("id");
    static const std::regex id_re(R"(^Phi[1-6]\.\d+$)");
    if (!std::regex_match(s.id, id_re)) throw ParseError(file, "id", "expected the form PhiN.M");
    s.category = r.string("category");
    if (s.category != s.id.substr(0, s.id.find('.'))) throw ParseError(file, "category", "does not match the id");
    try {
        s.robot = drivers::parse_robot_kind(r.string("robot"));
    } catch (const std::invalid_argument& e) {
        throw ParseError(file, "robot", e.what());
    }
    s.initial = r.required("initial");
    if (!s.initial.is_object()) throw ParseError(file, "initial", "expected an object");
    try {
        auto cfg = runtime::config_from_world(s.initial);
        if (cfg.robot != s.robot) throw ParseError(file, "initial.robot.kind", "differs from the scenario robot");
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(file, "initial", e.what());
    }
    s.instruction = r.string("instruction");
    s.expected_tool = r.optional_string("expected_tool");
    s.expected_dispatch = r.optional_string("expected_dispatch");

    const auto& resp = r.required("expected_response");
    if (resp.is_string()) {
        s.expected_response.exact = resp.get<std::string>();
    } else if (resp.is_object()) {
        s.expected_response.exact = resp.value("exact", std::string());
        s.expected_response.regex = resp.value("regex", std::string());
    } else {
        throw ParseError(file, "expected_response", "expected a string or an object");
    }
    if (s.expected_response.exact.empty() && s.expected_response.regex.empty()) {
        throw ParseError(file, "expected_response", "needs exact or regex");
    }
    if (!s.expected_response.regex.empty()) {
        try {
            std::regex probe(s.expected_response.regex);
        } catch (const std::regex_error& e) {
            throw ParseError(file, "expected_response.regex", e.what());
        }
    }

    if (doc.contains("expected_final")) {
        s.expected_final = doc.at("expected_final");
        if (!s.expected_final.is_object()) throw ParseError(file, "expected_final", "expected an object");
        static const std::set<std::string> known{"op_state",     "connectivity",  "active_plugin",  "terminal",
                                                 "driver_verbs", "heading_change", "displacement", "centered_on",
                                                 "plugin_failure", "halted"};
        for (const auto& [k, v] : s.expected_final.items()) {
            if (!known.count(k)) throw ParseError(file, "expected_final." + k, "unknown predicate");
        }
    }

    const auto& stages = r.required("applicable_stages");
    if (!stages.is_array() || stages.empty()) throw ParseError(file, "applicable_stages", "expected a non-empty array");
    for (const auto& st : stages) {
        const std::string name = st.is_string() ? st.get<std::string>() : std::string();
        if (name == "cog") s.applicable_stages.insert(Stage::Cog);
        else if (name == "disp") s.applicable_stages.insert(Stage::Disp);
        else if (name == "exec") s.applicable_stages.insert(Stage::Exec);
        else throw ParseError(file, "applicable_stages", "unknown stage '" + st.dump() + "'");
    }
    if (s.applies(Stage::Cog) && !s.expected_tool) throw ParseError(file, "expected_tool", "missing");
    if (s.applies(Stage::Disp) && !s.expected_dispatch) throw ParseError(file, "expected_dispatch", "missing");

    s.k = static_cast<int>(r.positive("k", 10));
    if (doc.contains("duration_ticks")) s.duration_ticks = r.positive("duration_ticks", 1);
    s.max_ticks = r.positive("max_ticks", s.max_ticks);
    s.details = doc.value("details", std::string());
    return s;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), "<file>", "cannot be read");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string(), "<json>", e.what());
    }
    return parse_scenario(doc, path.string());
}

std::vector<ScenarioSpec> load_scenarios(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("'" + dir.string() + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<ScenarioSpec> out;
    std::set<std::string> keys;
    for (const auto& f : files) {
        auto s = load_scenario(f);
        if (!keys.insert(s.key()).second) throw ParseError(f.string(), "id", "duplicate scenario " + s.key());
        out.push_back(std::move(s));
    }
    std::stable_sort(out.begin(), out.end(), [](const ScenarioSpec& a, const ScenarioSpec& b) {
        auto ka = std::make_tuple(numeric_order(a.id, 0), numeric_order(a.id, 1), static_cast<int>(a.robot));
        auto kb = std::make_tuple(numeric_order(b.id, 0), numeric_order(b.id, 1), static_cast<int>(b.robot));
        return ka < kb;
    });
    return out;
}

nlohmann::json to_json(const ScenarioSpec& s) {
    nlohmann::json stages = nlohmann::json::array();
    for (auto st : s.applicable_stages) stages.push_back(runtime::to_string(st));
    nlohmann::json j{{"id", s.id},
                     {"category", s.category},
                     {"robot", drivers::to_string(s.robot)},
                     {"initial", s.initial},
                     {"instruction", s.instruction},
                     {"expected_response", {{"exact", s.expected_response.exact}, {"regex", s.expected_response.regex}}},
                     {"expected_final", s.expected_final},
                     {"applicable_stages", stages},
                     {"k", s.k},
                     {"max_ticks", s.max_ticks}};
    if (s.expected_tool) j["expected_tool"] = *s.expected_tool;
    if (s.expected_dispatch) j["expected_dispatch"] = *s.expected_dispatch;
    if (s.duration_ticks) j["duration_ticks"] = *s.duration_ticks;
    if (!s.details.empty()) j["details"] = s.details;
    return j;
}

runtime::RuntimeConfig scenario_config(const ScenarioSpec& spec) { return runtime::config_from_world(spec.initial); }

}  // namespace btp::eval
