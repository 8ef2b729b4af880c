#include "btpilot/intent/command.hpp"

namespace btp::intent {

std::string_view to_string(Backend b) { return b == Backend::Reference ? "reference" : "llm"; }

Backend parse_backend(std::string_view text) {
    if (text == "reference") return Backend::Reference;
    if (text == "llm") return Backend::Llm;
    throw std::invalid_argument("unknown interpreter backend '" + std::string(text) + "'");
}

std::string InterpretedCommand::tool_name() const {
    if (const auto* c = tool_call()) return c->name;
    if (const auto* i = info()) return i->tool;
    return "none";
}

nlohmann::json to_json(const InterpretedCommand& c) {
    nlohmann::json j{{"query", c.query}, {"backend", to_string(c.backend)}};
    if (!c.say.empty()) j["say"] = c.say;
    if (const auto* t = c.tool_call()) {
        j["outcome"] = {{"type", "tool_call"}, {"name", t->name}, {"args", t->args}};
    } else if (const auto* i = c.info()) {
        j["outcome"] = {{"type", "info_answer"}, {"tool", i->tool}, {"text", i->text}};
    } else {
        const auto& r = *c.refusal();
        j["outcome"] = {{"type", "refusal"}, {"reason", drivers::to_string(r.reason)}, {"text", r.text}};
        if (!r.diagnostic.empty()) j["outcome"]["diagnostic"] = r.diagnostic;
    }
    return j;
}

InterpretedCommand interpreted_from_json(const nlohmann::json& j) {
    InterpretedCommand c;
    c.query = j.at("query").get<std::string>();
    c.backend = parse_backend(j.at("backend").get<std::string>());
    c.say = j.value("say", std::string());
    const auto& o = j.at("outcome");
    const std::string type = o.at("type").get<std::string>();
    if (type == "tool_call") {
        c.outcome = ToolCall{o.at("name").get<std::string>(), o.at("args")};
    } else if (type == "info_answer") {
        c.outcome = InfoAnswer{o.at("tool").get<std::string>(), o.at("text").get<std::string>()};
    } else if (type == "refusal") {
        c.outcome = Refusal{drivers::parse_failure_mode(o.at("reason").get<std::string>()), o.at("text").get<std::string>(),
                            o.value("diagnostic", std::string())};
    } else {
        throw std::invalid_argument("unknown outcome type '" + type + "'");
    }
    return c;
}

}  // namespace btp::intent
