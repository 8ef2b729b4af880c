#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace btp::bus {

namespace topics {
inline constexpr std::string_view kCmdVel = "robot/cmd_vel";
inline constexpr std::string_view kDetections = "camera/detections";
inline constexpr std::string_view kPluginEvents = "plugins/events";
inline constexpr std::string_view kPluginFailures = "plugins/failures";
inline constexpr std::string_view kGestures = "ui/gestures";
inline constexpr std::string_view kKeys = "ui/keys";
inline constexpr std::string_view kRobotStatus = "robot/status";
inline constexpr std::string_view kTrace = "bt/trace";
}  // namespace topics

struct Message {
    std::uint64_t seq = 0;
    std::string topic;
    std::string source;
    std::int64_t tick = 0;
    std::int64_t t_ms = 0;
    nlohmann::json payload;

    friend bool operator==(const Message&, const Message&) = default;
};

nlohmann::json to_json(const Message& m);
Message message_from_json(const nlohmann::json& j);

/// In-process topic bus. Single-threaded: publish and subscribe happen on the
/// tick thread. Delivery is synchronous and FIFO; a message published from
/// inside a handler is delivered after the current one finishes, so no
/// subscriber ever observes reordering.
class Bus {
public:
    using Handler = std::function<void(const Message&)>;

    /// `topic` may be "*" to receive every message.
    std::size_t subscribe(std::string topic, Handler handler);
    void unsubscribe(std::size_t id);

    /// Stamps the message with the next sequence number and the current clock.
    const Message& publish(std::string_view topic, std::string_view source, nlohmann::json payload);

    /// Clock stamped onto subsequent messages (set by the tick loop).
    void set_clock(std::int64_t tick, std::int64_t t_ms);

    std::optional<Message> latest(std::string_view topic) const;

    /// Messages published on `topic` since the last clear_history().
    std::vector<Message> history(std::string_view topic) const;
    const std::vector<Message>& history() const { return history_; }
    std::vector<Message> take_history();

    std::uint64_t published() const { return next_seq_ - 1; }

private:
    struct Sub {
        std::size_t id;
        std::string topic;
        Handler handler;
    };

    void drain();

    std::vector<Sub> subs_;
    std::map<std::string, Message, std::less<>> latest_;
    std::vector<Message> history_;
    std::deque<Message> pending_;
    bool dispatching_ = false;
    std::uint64_t next_seq_ = 1;
    std::size_t next_sub_ = 1;
    std::int64_t tick_ = 0;
    std::int64_t t_ms_ = 0;
};

}  // namespace btp::bus
