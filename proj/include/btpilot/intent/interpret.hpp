#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "btpilot/intent/command.hpp"
#include "btpilot/intent/explain.hpp"

namespace btp::intent {

inline constexpr std::string_view kCannotPerform = "I cannot perform this action.";

/// Deterministic pattern grammar (case-insensitive). Context free: info tools
/// come back as ToolCalls for interpret() to answer.
///
/// Recognised forms and synonyms:
///   which/what actions|commands can I ...      -> list_capabilities
///   ... causes ... unknown ...                 -> get_status{query: unknown_causes}
///   can/could I <action> ...                   -> get_status{query: feasibility, action}
///   ... battery ...                            -> get_status{query: battery}
///   ... status|state ...                       -> get_status{query: status}
///   change|switch|set the control|mode to X    -> switch_plugin{plugin}
///     X: hand gesture(s)|gesture(s), keyboard, person tracking|tracking, none|off|manual
///   track|follow the person with [a|an|the] Y  -> track_person{descriptor: Y}
///     Y synonyms: cell phone|mobile phone|smartphone|cellphone -> phone
///   [do a] flip [forward|backward|left|right]  -> flip{direction}
///   take off|takeoff|lift off|launch           -> take_off
///   land                                       -> land
///   turn|rotate|spin left|right for N sec      -> move{yaw_rate: +-0.5, duration: N}
///   turn|rotate left|right [by N degrees]      -> rotate{angle: +-N deg, default 90}
///   turn around                                -> rotate{angle: pi}
///   move|go|walk|fly forward|backward|left|right [for N sec] [with|at velocity|speed V]
///                                              -> move{vx|vy: +-V (default 0.5), duration: N (default 1)}
///   stand [up] / sit [down]                    -> stand / sit
///   stop|halt|freeze|hover                     -> stop
///   anything else                              -> Refusal{UnsupportedAction, "I cannot perform this action."}
/// Numbers may be digits or the words one..twenty, thirty.
InterpretedCommand reference_interpret(std::string_view query);

/// Text answer for an info tool call (get_status / list_capabilities).
std::string answer_info(const ToolCall& call, const RuntimeContext& ctx);

class Interpreter {
public:
    virtual ~Interpreter() = default;
    virtual Backend backend() const = 0;
    /// Raw interpretation of a trimmed, non-empty query.
    virtual InterpretedCommand run(std::string_view query, const RuntimeContext& ctx) = 0;
};

class ReferenceInterpreter final : public Interpreter {
public:
    Backend backend() const override { return Backend::Reference; }
    InterpretedCommand run(std::string_view query, const RuntimeContext& ctx) override;
};

class EmptyQuery : public std::invalid_argument {
public:
    EmptyQuery() : std::invalid_argument("query is empty") {}
};

/// Trims the query, runs the backend, validates ToolCall args against the
/// registry (invalid -> Refusal with diagnostic), refuses tools missing from
/// ctx.available_tools, and turns info tool calls into InfoAnswers.
/// Throws EmptyQuery when nothing is left after trimming.
InterpretedCommand interpret(std::string_view query, const RuntimeContext& ctx, Interpreter& backend,
                             const ToolRegistry& tools = ToolRegistry::standard());

std::string trim(std::string_view s);

}  // namespace btp::intent
