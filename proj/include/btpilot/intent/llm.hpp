#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "btpilot/intent/interpret.hpp"

namespace btp::intent {

/// Raised by transports on timeout, HTTP errors or missing fixtures.
class BackendUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reply payload every backend must produce; embedded verbatim in the system prompt.
inline constexpr std::string_view kToolCallSchema = R"({"tool": <name>, "args": {…}, "say": <text>})";

struct LlmRequest {
    std::string purpose;  // "interpret" or "select_target"
    std::string query;    // user text, or the descriptor for select_target
    nlohmann::json body;  // chat-completions request
};

class LlmTransport {
public:
    virtual ~LlmTransport() = default;
    /// Returns the assistant message content. Throws BackendUnavailable.
    virtual std::string complete(const LlmRequest& request) = 0;
};

/// Chat-completions endpoint over HTTP(S). POSTs to <base_url>/chat/completions.
class HttpTransport final : public LlmTransport {
public:
    HttpTransport(std::string base_url, std::string api_key, double timeout_s = 30.0);
    /// Reads BTP_LLM_BASE_URL and BTP_LLM_API_KEY; throws BackendUnavailable when the URL is unset.
    static std::unique_ptr<HttpTransport> from_env(double timeout_s = 30.0);
    std::string complete(const LlmRequest& request) override;

private:
    std::string base_url_;
    std::string api_key_;
    double timeout_s_;
};

/// Offline replay. Every *.json file in the directory holds one fixture object
/// or an array of them:
///   {"purpose": "interpret", "query": "Do a Flip", "response": {"tool": "flip", ...}}
///   {"purpose": "interpret", "query": "*", "timeout": true}
///   {"purpose": "interpret", "query": "Jump", "http_status": 500}
/// "response" may be an object (serialised as the reply) or a raw string.
/// Exact query matches win over "*". Files are read in name order.
class FixtureTransport final : public LlmTransport {
public:
    explicit FixtureTransport(const std::filesystem::path& dir);
    std::string complete(const LlmRequest& request) override;
    std::size_t size() const { return fixtures_.size(); }
    /// Requests seen so far, in order.
    const std::vector<LlmRequest>& requests() const { return seen_; }

private:
    std::vector<nlohmann::json> fixtures_;
    std::vector<LlmRequest> seen_;
};

std::string system_prompt(const ToolRegistry& tools, const RuntimeContext& ctx);
nlohmann::json build_interpret_request(const std::string& model, std::string_view query, const RuntimeContext& ctx,
                                       const ToolRegistry& tools);

/// Parses an assistant reply into an InterpretedCommand (before validation).
/// Malformed replies become a Refusal carrying a parse diagnostic.
InterpretedCommand parse_llm_reply(std::string_view query, std::string_view content);

class LlmInterpreter final : public Interpreter {
public:
    LlmInterpreter(std::shared_ptr<LlmTransport> transport, std::string model,
                   const ToolRegistry& tools = ToolRegistry::standard());
    Backend backend() const override { return Backend::Llm; }
    InterpretedCommand run(std::string_view query, const RuntimeContext& ctx) override;
    LlmTransport& transport() { return *transport_; }
    const std::string& model() const { return model_; }

private:
    std::shared_ptr<LlmTransport> transport_;
    std::string model_;
    const ToolRegistry& tools_;
};

/// LLM-mode target selection: the detections are sent with the descriptor and
/// the reply {"person_id": "<id>" | null} names the chosen person.
/// Transport errors and malformed replies yield nullopt.
std::optional<std::string> llm_select_person(LlmTransport& transport, const std::string& model,
                                             const nlohmann::json& detections, const std::string& descriptor);

}  // namespace btp::intent
