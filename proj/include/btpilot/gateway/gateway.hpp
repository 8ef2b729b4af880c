#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "btpilot/eval/eval.hpp"
#include "btpilot/runtime/runtime.hpp"

namespace btp::gateway {

inline constexpr int kSchemaVersion = 1;

/// Per-connection frame queue. Tick frames waiting behind another unsent tick
/// frame replace it; every other frame is kept. Sequence numbers are assigned
/// on pop, so a connection sees 1, 2, 3, ... without gaps.
class Subscriber {
public:
    explicit Subscriber(std::function<void()> notify) : notify_(std::move(notify)) {}

    void push(const std::string& kind, const nlohmann::json& payload);
    /// Next frame {"v", "seq", "kind", "payload"}, or nothing when the queue is empty.
    std::optional<nlohmann::json> pop();
    /// Blocks until a frame is available or the timeout passes.
    std::optional<nlohmann::json> wait_pop(std::chrono::milliseconds timeout);
    std::size_t pending() const;
    std::uint64_t coalesced() const;

private:
    struct Item {
        std::string kind;
        nlohmann::json payload;
    };
    std::function<void()> notify_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Item> queue_;
    std::uint64_t next_seq_ = 1;
    std::uint64_t coalesced_ = 0;
};

class EventHub {
public:
    std::shared_ptr<Subscriber> subscribe(std::function<void()> notify = {});
    void unsubscribe(const std::shared_ptr<Subscriber>& s);
    void publish(const std::string& kind, const nlohmann::json& payload);
    std::size_t subscribers() const;

private:
    mutable std::mutex mu_;
    std::vector<std::shared_ptr<Subscriber>> subs_;
};

struct HttpReply {
    int status = 200;
    nlohmann::json body = nlohmann::json::object();
};

struct GatewayConfig {
    runtime::RuntimeConfig runtime;
    std::string scenario_dir;  // empty = no scenario control
    /// Wall-clock pause between ticks; 0 ticks as fast as possible.
    std::int64_t tick_period_ms = 100;
    /// When false the owner drives ticks through step().
    bool autotick = true;
};

/// Transport-independent request handling around one live runtime.
class GatewayCore {
public:
    explicit GatewayCore(GatewayConfig config);
    ~GatewayCore();
    GatewayCore(const GatewayCore&) = delete;
    GatewayCore& operator=(const GatewayCore&) = delete;

    /// Starts the tick thread when autotick is set.
    void start();
    /// Stops ticking; later commands get 503.
    void stop();
    bool running() const { return running_; }

    /// Advances the runtime by n ticks on the calling thread (autotick off).
    void step(std::int64_t n = 1);

    HttpReply handle(const std::string& method, const std::string& target, const std::string& body);

    EventHub& events() { return hub_; }
    nlohmann::json state() const;
    std::vector<std::string> scenario_ids() const;

private:
    void install_sink();
    void tick_once();
    void tick_loop();
    void reset(runtime::RuntimeConfig cfg, const eval::ScenarioSpec* scenario);
    HttpReply post_command(const nlohmann::json& body);
    HttpReply post_input(const std::string& kind, const nlohmann::json& body);
    HttpReply start_scenario(const std::string& id, const std::string& robot);
    HttpReply get_command(const std::string& id) const;

    GatewayConfig config_;
    std::vector<eval::ScenarioSpec> scenarios_;
    EventHub hub_;
    mutable std::shared_mutex rt_mu_;  // guards replacement of rt_
    std::unique_ptr<runtime::Runtime> rt_;
    std::optional<std::string> scenario_;
    std::optional<std::string> scenario_command_;
    bool scenario_reported_ = false;
    std::atomic<bool> running_{false};
    std::atomic<bool> stop_loop_{false};
    std::thread loop_;
    std::mutex tick_mu_;  // one tick at a time
};

/// HTTP + WebSocket listener over a GatewayCore.
class Server {
public:
    Server(GatewayCore& core, std::string address, std::uint16_t port, int threads = 2);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts serving in background threads; returns the bound port.
    std::uint16_t start();
    void stop();
    /// Blocks until stop() is called from another thread or a signal arrives.
    void wait();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace btp::gateway
