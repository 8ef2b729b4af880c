#pragma once

#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "btpilot/intent/tools.hpp"

namespace btp::intent {

enum class Backend : std::uint8_t { Reference, Llm };
std::string_view to_string(Backend b);
Backend parse_backend(std::string_view text);

struct ToolCall {
    std::string name;
    nlohmann::json args = nlohmann::json::object();

    friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

/// Direct answer to an information question; `tool` names the info tool used.
struct InfoAnswer {
    std::string tool;
    std::string text;

    friend bool operator==(const InfoAnswer&, const InfoAnswer&) = default;
};

struct Refusal {
    FailureMode reason = FailureMode::UnsupportedAction;
    std::string text;
    std::string diagnostic;

    friend bool operator==(const Refusal&, const Refusal&) = default;
};

using Outcome = std::variant<ToolCall, InfoAnswer, Refusal>;

struct InterpretedCommand {
    std::string query;
    Outcome outcome;
    Backend backend = Backend::Reference;
    std::string say;  // optional free text from an LLM backend

    const ToolCall* tool_call() const { return std::get_if<ToolCall>(&outcome); }
    const InfoAnswer* info() const { return std::get_if<InfoAnswer>(&outcome); }
    const Refusal* refusal() const { return std::get_if<Refusal>(&outcome); }
    /// Tool name for ToolCall / InfoAnswer, "none" for a refusal.
    std::string tool_name() const;

    friend bool operator==(const InterpretedCommand&, const InterpretedCommand&) = default;
};

nlohmann::json to_json(const InterpretedCommand& c);
InterpretedCommand interpreted_from_json(const nlohmann::json& j);

}  // namespace btp::intent
