#include "btpilot/intent/llm.hpp"

#include <algorithm>
#include <fstream>

namespace btp::intent {

namespace fs = std::filesystem;

FixtureTransport::FixtureTransport(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw std::invalid_argument("fixture directory '" + dir.string() + "' does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("fixture '" + f.string() + "': " + e.what());
        }
        if (doc.is_array()) {
            for (auto& item : doc) fixtures_.push_back(std::move(item));
        } else {
            fixtures_.push_back(std::move(doc));
        }
    }
}

std::string FixtureTransport::complete(const LlmRequest& request) {
    seen_.push_back(request);
    const nlohmann::json* exact = nullptr;
    const nlohmann::json* wildcard = nullptr;
    for (const auto& f : fixtures_) {
        if (f.value("purpose", std::string("interpret")) != request.purpose) continue;
        const std::string q = f.value("query", std::string("*"));
        if (q == request.query && !exact) exact = &f;
        if (q == "*" && !wildcard) wildcard = &f;
    }
    const nlohmann::json* hit = exact ? exact : wildcard;
    if (!hit) {
        throw BackendUnavailable("no fixture for " + request.purpose + " '" + request.query + "'");
    }
    if (hit->value("timeout", false)) {
        throw BackendUnavailable("request timed out");
    }
    if (hit->contains("http_status")) {
        throw BackendUnavailable("HTTP status " + std::to_string(hit->at("http_status").get<int>()));
    }
    const auto& r = hit->at("response");
    return r.is_string() ? r.get<std::string>() : r.dump();
}

std::string system_prompt(const ToolRegistry& tools, const RuntimeContext& ctx) {
    std::string p;
    p += "You control a robot through a fixed set of tools. Interpret the operator's single message and choose "
         "exactly one tool.\n";
    p += "Reply with one JSON object and nothing else, using this schema:\n";
    p += std::string(kToolCallSchema) + "\n";
    p += "Use \"tool\": \"none\" when no tool fits or the request is unsafe; put a short explanation in \"say\".\n";
    p += "Constraints: never invent tools or arguments; prefer the robot's current state when a question can be "
         "answered from it; flips and take-off need at least 20% battery.\n";
    p += "Tools:\n" + tools.describe().dump() + "\n";
    p += "Current context:\n" + to_json(ctx).dump() + "\n";
    return p;
}

nlohmann::json build_interpret_request(const std::string& model, std::string_view query, const RuntimeContext& ctx,
                                       const ToolRegistry& tools) {
    return {{"model", model},
            {"temperature", 0},
            {"messages",
             nlohmann::json::array({{{"role", "system"}, {"content", system_prompt(tools, ctx)}},
                                    {{"role", "user"}, {"content", std::string(query)}}})}};
}

namespace {

std::optional<nlohmann::json> extract_json(std::string_view content) {
    auto b = content.find('{');
    auto e = content.rfind('}');
    if (b == std::string_view::npos || e == std::string_view::npos || e < b) return std::nullopt;
    try {
        return nlohmann::json::parse(content.substr(b, e - b + 1));
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

InterpretedCommand parse_failure(std::string_view query, std::string diagnostic) {
    return {std::string(query), Refusal{FailureMode::UnsupportedAction, std::string(kCannotPerform), std::move(diagnostic)},
            Backend::Llm, {}};
}

}  // namespace

InterpretedCommand parse_llm_reply(std::string_view query, std::string_view content) {
    auto j = extract_json(content);
    if (!j || !j->is_object()) {
        return parse_failure(query, "reply is not a JSON object");
    }
    if (!j->contains("tool") || !j->at("tool").is_string()) {
        return parse_failure(query, "reply has no tool name");
    }
    std::string say;
    if (j->contains("say") && j->at("say").is_string()) say = j->at("say").get<std::string>();
    const std::string tool = j->at("tool").get<std::string>();
    if (tool == "none") {
        return {std::string(query), Refusal{FailureMode::UnsupportedAction, say.empty() ? std::string(kCannotPerform) : say, {}},
                Backend::Llm, say};
    }
    nlohmann::json args = j->value("args", nlohmann::json::object());
    if (args.is_null()) args = nlohmann::json::object();
    return {std::string(query), ToolCall{tool, args}, Backend::Llm, say};
}

LlmInterpreter::LlmInterpreter(std::shared_ptr<LlmTransport> transport, std::string model, const ToolRegistry& tools)
    : transport_(std::move(transport)), model_(std::move(model)), tools_(tools) {
    if (!transport_) throw std::invalid_argument("LLM interpreter needs a transport");
}

InterpretedCommand LlmInterpreter::run(std::string_view query, const RuntimeContext& ctx) {
    LlmRequest req{"interpret", std::string(query), build_interpret_request(model_, query, ctx, tools_)};
    std::string content;
    try {
        content = transport_->complete(req);
    } catch (const BackendUnavailable& e) {
        return {std::string(query), Refusal{FailureMode::Timeout, "I could not process the command in time.", e.what()},
                Backend::Llm, {}};
    }
    return parse_llm_reply(query, content);
}

std::optional<std::string> llm_select_person(LlmTransport& transport, const std::string& model,
                                             const nlohmann::json& detections, const std::string& descriptor) {
    nlohmann::json body{
        {"model", model},
        {"temperature", 0},
        {"messages",
         nlohmann::json::array(
             {{{"role", "system"},
               {"content", "Pick the person matching the description from the detections. Reply with one JSON object "
                           "{\"person_id\": <id or null>}."}},
              {{"role", "user"}, {"content", nlohmann::json{{"description", descriptor}, {"detections", detections}}.dump()}}})}};
    std::string content;
    try {
        content = transport.complete({"select_target", descriptor, std::move(body)});
    } catch (const BackendUnavailable&) {
        return std::nullopt;
    }
    auto j = extract_json(content);
    if (!j || !j->contains("person_id") || !j->at("person_id").is_string()) return std::nullopt;
    return j->at("person_id").get<std::string>();
}

}  // namespace btp::intent
