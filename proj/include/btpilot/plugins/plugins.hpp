#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "btpilot/bt/tree.hpp"
#include "btpilot/bus/bus.hpp"
#include "btpilot/drivers/driver.hpp"
#include "btpilot/world/world.hpp"

namespace btp::plugins {

using bt::NodeStatus;
using drivers::RobotKind;
using world::Detection;

/// What a plugin may touch while it is ticked.
struct PluginEnv {
    bus::Bus& bus;
    drivers::DriverRegistry& drivers;
    RobotKind robot = RobotKind::Drone;
    world::CameraModel camera;
};

enum class PluginState : std::uint8_t { Idle, Active };
std::string_view to_string(PluginState s);

struct PluginDescriptor {
    std::string id;
    std::vector<std::string> subscriptions;
    std::vector<std::string> publications;
    PluginState state = PluginState::Idle;
};

nlohmann::json to_json(const PluginDescriptor& d);

struct VelocityCommand {
    double vx = 0.0;
    double vy = 0.0;
    double yaw_rate = 0.0;
    std::string source_plugin;

    world::Twist twist() const { return {vx, vy, yaw_rate}; }
    friend bool operator==(const VelocityCommand&, const VelocityCommand&) = default;
};

nlohmann::json to_json(const VelocityCommand& v);
VelocityCommand velocity_from_json(const nlohmann::json& j);

/// Publishes `v` on the velocity topic with the plugin as source.
void publish_velocity(bus::Bus& bus, const VelocityCommand& v);
/// Publishes a camera frame as {"detections": [...]} from source "camera".
void publish_detections(bus::Bus& bus, const std::vector<Detection>& detections);

class Plugin {
public:
    explicit Plugin(PluginEnv& env) : env_(env) {}
    virtual ~Plugin() = default;
    Plugin(const Plugin&) = delete;
    Plugin& operator=(const Plugin&) = delete;

    virtual std::string id() const = 0;
    virtual PluginDescriptor descriptor() const = 0;

    /// Called at the tick boundary where `active_plugin` switches to this plugin.
    virtual void activate(const bt::Blackboard& bb, std::int64_t now_ms) = 0;
    virtual void deactivate() = 0;
    bool active() const { return active_; }

    /// Whole-plugin behaviour for a single PluginClient leaf.
    virtual NodeStatus on_tick(bt::TickContext& ctx) = 0;

    /// Adds this plugin's leaves (at least one PluginClient named id()) to `reg`.
    virtual void register_nodes(bt::Registry& reg);

protected:
    PluginEnv& env_;
    bool active_ = false;
};

// ---------------------------------------------------------------- tracking

enum class Side : std::uint8_t { Left, Right };
std::string_view to_string(Side s);

struct TrackedTarget {
    std::string person_id;
    std::set<std::string> descriptor;
    world::BBox last_bbox;
    std::int64_t last_seen_tick = 0;
    std::int64_t last_seen_ms = 0;
    Side last_side = Side::Left;
};

nlohmann::json to_json(const TrackedTarget& t);

/// Left when the box center lies strictly left of the image center.
Side side_of(const world::BBox& box, const world::CameraModel& camera);

/// "phone, red shirt" -> {"phone", "red shirt"}. Blank items are dropped.
std::set<std::string> parse_descriptor(std::string_view text);

/// Reference selection: among detections whose attributes contain every
/// descriptor item, the largest box wins, then the smaller person id.
/// Throws std::invalid_argument for an empty descriptor.
std::optional<Detection> select_target(const std::vector<Detection>& detections, const std::set<std::string>& descriptor);

struct TrackParams {
    double k_yaw = 1.0;      // rad/s
    double k_fwd = 1.0;      // m/s
    double w_ref = 120.0;    // px
    double v_max = 1.0;      // m/s
    double search_rate = 0.5;        // rad/s while lost
    std::int64_t lost_timeout_ms = 5000;
};

class DegenerateBox : public std::invalid_argument {
public:
    DegenerateBox() : std::invalid_argument("bounding box has zero width") {}
};

/// Proportional follow law on the image-plane error and apparent size.
VelocityCommand track_control(const world::BBox& box, const world::CameraModel& camera, const TrackParams& params = {});

/// External selector used in LLM mode: returns the chosen person id.
using TargetSelector =
    std::function<std::optional<std::string>(const std::vector<Detection>&, const std::string& descriptor)>;

class PersonTracking final : public Plugin {
public:
    static constexpr std::string_view kId = "person_tracking";

    explicit PersonTracking(PluginEnv& env, TrackParams params = {});

    std::string id() const override { return std::string(kId); }
    PluginDescriptor descriptor() const override;
    void activate(const bt::Blackboard& bb, std::int64_t now_ms) override;
    void deactivate() override;
    NodeStatus on_tick(bt::TickContext& ctx) override;
    void register_nodes(bt::Registry& reg) override;

    /// Replaces reference matching (e.g. with an LLM-backed selector).
    void set_selector(TargetSelector selector) { selector_ = std::move(selector); }

    // Leaves of the reference tree.
    NodeStatus detect(bt::TickContext& ctx);
    NodeStatus select(bt::TickContext& ctx);
    NodeStatus follow(bt::TickContext& ctx);
    NodeStatus search(bt::TickContext& ctx);
    NodeStatus halt(bt::TickContext& ctx);

    const std::optional<TrackedTarget>& target() const { return target_; }
    const std::vector<Detection>& detections() const { return detections_; }
    /// Milliseconds since the target was last matched (or since activation).
    std::int64_t unseen_ms(std::int64_t now_ms) const { return now_ms - last_seen_ms_; }
    const TrackParams& params() const { return params_; }

private:
    void ensure_active(bt::TickContext& ctx);

    TrackParams params_;
    TargetSelector selector_;
    std::string descriptor_text_;
    std::set<std::string> descriptor_;
    std::vector<Detection> detections_;
    std::optional<TrackedTarget> target_;
    std::optional<Detection> current_;
    std::int64_t last_seen_ms_ = 0;
};

// ---------------------------------------------------------------- gestures

enum class Gesture : std::uint8_t { ThumbUp, ThumbDown, OpenPalm, PointLeft, PointRight, PointUp };
std::string_view to_string(Gesture g);
Gesture parse_gesture(std::string_view text);

struct GestureEvent {
    Gesture gesture = Gesture::OpenPalm;
    std::int64_t timestamp_ms = 0;
};

nlohmann::json to_json(const GestureEvent& e);
GestureEvent gesture_event_from_json(const nlohmann::json& j);

/// Fixed gesture vocabulary.
drivers::RobotCommand gesture_command(Gesture g, std::int64_t issued_at);

class HandGesture final : public Plugin {
public:
    static constexpr std::string_view kId = "hand_gesture";

    explicit HandGesture(PluginEnv& env);
    ~HandGesture() override;

    std::string id() const override { return std::string(kId); }
    PluginDescriptor descriptor() const override;
    void activate(const bt::Blackboard& bb, std::int64_t now_ms) override;
    void deactivate() override;
    NodeStatus on_tick(bt::TickContext& ctx) override;

    std::size_t pending() const { return pending_.size(); }

private:
    std::size_t sub_ = 0;
    std::deque<GestureEvent> pending_;
};

// ---------------------------------------------------------------- keyboard

inline constexpr double kKeyboardSpeed = 0.5;
inline constexpr double kKeyboardYawRate = 0.5;

/// Applies one key to the held setpoint: w/s -> vx, a/d -> vy, q/e -> yaw,
/// space -> all zero. Returns false for keys outside the map.
bool apply_key(std::string_view key, world::Twist& held);

class Keyboard final : public Plugin {
public:
    static constexpr std::string_view kId = "keyboard";

    explicit Keyboard(PluginEnv& env);
    ~Keyboard() override;

    std::string id() const override { return std::string(kId); }
    PluginDescriptor descriptor() const override;
    void activate(const bt::Blackboard& bb, std::int64_t now_ms) override;
    void deactivate() override;
    NodeStatus on_tick(bt::TickContext& ctx) override;

    const world::Twist& held() const { return held_; }

private:
    std::size_t sub_ = 0;
    std::deque<std::string> pending_;
    world::Twist held_;
};

// ---------------------------------------------------------------- manager

class DuplicatePlugin : public std::runtime_error {
public:
    explicit DuplicatePlugin(const std::string& id) : std::runtime_error("plugin '" + id + "' already registered") {}
};

/// Owns the plugins and follows `active_plugin` on the blackboard.
class PluginManager {
public:
    explicit PluginManager(PluginEnv& env) : env_(env) {}

    /// Registers the three shipped plugins.
    void add_defaults(TrackParams params = {});
    Plugin& add(std::unique_ptr<Plugin> plugin);
    Plugin* find(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }
    std::vector<std::string> ids() const;
    std::vector<PluginDescriptor> descriptors() const;

    /// Adds every plugin's leaves plus the halt_after_timeout action.
    void register_nodes(bt::Registry& reg);

    /// Activates / deactivates plugins to match `active_plugin`. Returns true on a change.
    bool sync(const bt::Blackboard& bb, std::int64_t now_ms);
    const std::string& active() const { return active_; }

    PersonTracking* tracking() const;

private:
    PluginEnv& env_;
    std::vector<std::unique_ptr<Plugin>> plugins_;
    std::string active_ = "none";
};

}  // namespace btp::plugins
