#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "btpilot/bt/tree.hpp"
#include "btpilot/bus/bus.hpp"
#include "btpilot/drivers/driver.hpp"
#include "btpilot/intent/dispatch.hpp"
#include "btpilot/intent/interpret.hpp"
#include "btpilot/intent/llm.hpp"
#include "btpilot/plugins/plugins.hpp"
#include "btpilot/runtime/log.hpp"
#include "btpilot/world/world.hpp"

namespace btp::runtime {

using drivers::Connectivity;
using drivers::OpState;
using drivers::RobotKind;

// ---------------------------------------------------------------- errors

class QueueFull : public std::runtime_error {
public:
    explicit QueueFull(std::size_t capacity);
};

class EmptyCommand : public std::invalid_argument {
public:
    EmptyCommand() : std::invalid_argument("command text is empty") {}
};

class MaxTicksExceeded : public std::runtime_error {
public:
    explicit MaxTicksExceeded(std::int64_t max_ticks);
};

class UnknownCommand : public std::out_of_range {
public:
    explicit UnknownCommand(const std::string& id) : std::out_of_range("unknown command '" + id + "'") {}
};

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------- commands

enum class Stage : std::uint8_t { Cog, Disp, Exec };
std::string_view to_string(Stage s);

enum class Terminal : std::uint8_t { Completed, Refused, Failed };
std::string_view to_string(Terminal t);
Terminal parse_terminal(std::string_view text);

struct StageMark {
    std::int64_t start = 0;
    std::int64_t end = 0;
    std::int64_t duration() const { return end - start; }
    friend bool operator==(const StageMark&, const StageMark&) = default;
};

/// A text the operator sees: "response" for answers and acknowledgements,
/// "explanation" for failure explanations.
struct Reply {
    std::string kind;
    std::string text;
    std::int64_t t_ms = 0;
    friend bool operator==(const Reply&, const Reply&) = default;
};

struct CommandEnvelope {
    std::string id;
    std::string text;
    std::int64_t submitted_at = 0;
    std::int64_t submitted_tick = 0;
    std::optional<StageMark> cog;
    std::optional<StageMark> disp;
    std::optional<StageMark> exec;
    std::optional<Terminal> terminal;

    std::optional<intent::InterpretedCommand> interpreted;
    std::string pathway;  // DispatchDecision::pathway(), empty before dispatch
    std::vector<drivers::FailureMode> failure_modes;
    std::vector<Reply> replies;

    bool done() const { return terminal.has_value(); }
    /// Text of the last reply, empty when there is none.
    std::string last_reply() const;
    friend bool operator==(const CommandEnvelope&, const CommandEnvelope&) = default;
};

nlohmann::json to_json(const CommandEnvelope& e);
CommandEnvelope envelope_from_json(const nlohmann::json& j);

/// Stage latencies in ms; absent stages did not occur. total is their exact sum.
struct StageTimings {
    std::optional<std::int64_t> cog;
    std::optional<std::int64_t> disp;
    std::optional<std::int64_t> exec;
    std::int64_t total = 0;
    friend bool operator==(const StageTimings&, const StageTimings&) = default;
};

StageTimings timings_of(const CommandEnvelope& e);
nlohmann::json to_json(const StageTimings& t);

/// Acknowledgement for a finished driver command ("Flip maneuver executed.").
std::string driver_ack(std::string_view verb, RobotKind robot);
/// Acknowledgement for a plugin switch.
std::string plugin_ack(std::string_view plugin_id);
/// "Now tracking the person with a phone."
std::string tracking_ack(std::string_view descriptor);

// ---------------------------------------------------------------- config

struct RuntimeConfig {
    RobotKind robot = RobotKind::Drone;
    world::World world;
    std::optional<OpState> initial_state;  // driver default when empty
    Connectivity connectivity = Connectivity::Connected;
    std::string active_plugin = "none";
    bt::TreeSpec tree;  // empty = the shipped reference tree

    intent::Backend backend = intent::Backend::Reference;
    std::string llm_model = "gpt-4o";
    std::string llm_fixtures;  // replay directory; empty = live HTTP endpoint
    std::shared_ptr<intent::LlmTransport> llm_transport;  // overrides the two fields above

    std::uint64_t seed = 0;
    std::int64_t tick_ms = 100;
    std::int64_t cog_cost_ms = 0;  // virtual-time charge per interpretation
    bool realtime = false;         // wall-clock cognition, interpretation off the tick thread
    std::size_t queue_capacity = 64;
    bool keep_log = true;
    plugins::TrackParams track;
};

/// Serialises everything needed to rebuild the runtime (transport objects excluded).
nlohmann::json to_json(const RuntimeConfig& c);
RuntimeConfig config_from_json(const nlohmann::json& j);

/// Reads a world document whose "robot" block may also carry
/// "kind", "op_state", "connectivity" and "active_plugin".
RuntimeConfig config_from_world(const nlohmann::json& world_doc);

/// The shipped tree description.
bt::TreeSpec reference_tree();

// ---------------------------------------------------------------- runtime

using EventSink = std::function<void(const std::string& kind, const nlohmann::json& payload)>;

/// Composition root. One thread owns tick(); submit_command / inject_* and
/// snapshot() may be called from other threads.
class Runtime {
public:
    explicit Runtime(RuntimeConfig config);
    ~Runtime();
    Runtime(const Runtime&) = delete;
    Runtime& operator=(const Runtime&) = delete;

    /// Enqueues a natural-language command. Throws EmptyCommand, QueueFull.
    std::string submit_command(const std::string& text);
    /// Enqueues a gesture / key event. Throws InvalidInput, QueueFull.
    void inject_gesture(const std::string& gesture);
    void inject_key(const std::string& key);

    bt::TickTrace tick();
    bt::TickTrace run_ticks(std::int64_t n);
    /// Ticks until `pred` holds after a tick. Throws MaxTicksExceeded.
    bt::TickTrace run_until(const std::function<bool(const Runtime&)>& pred, std::int64_t max_ticks);
    /// True when no command is queued, interpreting or unfinished.
    bool idle() const;

    StageTimings stage_timings(const std::string& id) const;
    const CommandEnvelope& envelope(const std::string& id) const;
    std::vector<CommandEnvelope> envelopes() const;

    /// Closes commands still open (continuous tracking) and appends the final
    /// record. Idempotent.
    void finish();
    /// finish() and return the log.
    const ExecutionLog& collect_trace();
    const ExecutionLog& log() const { return log_; }

    nlohmann::json snapshot() const;
    void set_event_sink(EventSink sink);

    std::int64_t tick_index() const { return tick_index_; }
    std::int64_t now_ms() const { return tick_index_ * config_.tick_ms; }
    const RuntimeConfig& config() const { return config_; }
    const world::World& world() const { return world_; }
    drivers::RobotStatus status() const;
    intent::RuntimeContext context() const;
    const bt::Blackboard& blackboard() const { return bb_; }
    const bt::BehaviorTree& tree() const { return tree_; }
    const std::optional<bt::TickTrace>& last_trace() const { return last_trace_; }
    bus::Bus& bus() { return bus_; }
    drivers::DriverRegistry& drivers() { return drivers_; }
    plugins::PluginManager& plugins() { return plugins_; }
    drivers::RobotDriver& driver() const { return drivers_.resolve(config_.robot); }

    /// Rebuilds a runtime from a log header, re-applies its submissions and
    /// inputs at their original ticks and runs the same number of ticks.
    static std::unique_ptr<Runtime> replay(const ExecutionLog& log);

private:
    struct Pending {
        std::string id;
        std::string text;
    };
    struct Input {
        std::string topic;
        nlohmann::json payload;
    };
    struct Interpreting {
        std::string id;
        intent::RuntimeContext ctx;
        std::future<std::pair<intent::InterpretedCommand, std::int64_t>> future;  // async mode
        std::optional<intent::InterpretedCommand> result;                       // sync mode
        std::int64_t ready_at = 0;
    };

    void build_registry();
    intent::InterpretedCommand run_interpreter(const std::string& text, const intent::RuntimeContext& ctx);
    void start_interpretations(std::int64_t now);
    void apply_ready(std::int64_t now);
    void apply_decision(CommandEnvelope& env, const intent::RuntimeContext& ctx, std::int64_t now);
    void handle_completions(std::int64_t now);
    void after_tree(std::int64_t now);
    void apply_velocity_topic();
    void publish_telemetry();
    void reply(CommandEnvelope& env, std::string kind, std::string text, std::int64_t t);
    void close(CommandEnvelope& env, Terminal t, std::int64_t at);
    void emit(const std::string& kind, const nlohmann::json& payload);
    void record(nlohmann::json rec);
    void flush_bus();
    void refresh_snapshot();
    CommandEnvelope& env_ref(const std::string& id);

    RuntimeConfig config_;
    world::World world_;
    bus::Bus bus_;
    mutable drivers::DriverRegistry drivers_;
    plugins::PluginEnv plugin_env_;
    plugins::PluginManager plugins_;
    bt::Registry registry_;
    bt::BehaviorTree tree_;
    bt::Blackboard bb_;
    std::unique_ptr<intent::Interpreter> interpreter_;
    std::shared_ptr<intent::LlmTransport> transport_;
    std::mt19937_64 noise_rng_;

    std::int64_t tick_index_ = 0;
    std::optional<bt::TickTrace> last_trace_;
    std::uint64_t next_command_ = 1;
    std::map<std::string, CommandEnvelope> envelopes_;
    std::vector<std::string> order_;
    std::vector<Interpreting> interpreting_;
    std::map<std::uint64_t, std::string> tickets_;  // driver ticket -> command id
    std::optional<std::string> tracking_command_;
    bool tracking_acquired_ = false;
    bool finished_ = false;

    mutable std::mutex queue_mu_;
    std::deque<Pending> commands_;
    std::deque<Input> inputs_;

    mutable std::mutex snap_mu_;
    nlohmann::json snapshot_;
    std::mutex sink_mu_;
    EventSink sink_;

    ExecutionLog log_;
};

}  // namespace btp::runtime
