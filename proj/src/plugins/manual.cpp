#include <array>

#include "btpilot/plugins/plugins.hpp"

namespace btp::plugins {

namespace {

constexpr std::array<std::pair<Gesture, std::string_view>, 6> kGestureNames{{
    {Gesture::ThumbUp, "thumb_up"},
    {Gesture::ThumbDown, "thumb_down"},
    {Gesture::OpenPalm, "open_palm"},
    {Gesture::PointLeft, "point_left"},
    {Gesture::PointRight, "point_right"},
    {Gesture::PointUp, "point_up"},
}};

}  // namespace

std::string_view to_string(Gesture g) {
    for (const auto& [k, name] : kGestureNames) {
        if (k == g) return name;
    }
    return "open_palm";
}

Gesture parse_gesture(std::string_view text) {
    for (const auto& [k, name] : kGestureNames) {
        if (name == text) return k;
    }
    throw std::invalid_argument("unknown gesture '" + std::string(text) + "'");
}

nlohmann::json to_json(const GestureEvent& e) { return {{"gesture", to_string(e.gesture)}, {"t_ms", e.timestamp_ms}}; }

GestureEvent gesture_event_from_json(const nlohmann::json& j) {
    return {parse_gesture(j.at("gesture").get<std::string>()), j.value("t_ms", std::int64_t{0})};
}

drivers::RobotCommand gesture_command(Gesture g, std::int64_t issued_at) {
    namespace c = drivers::cmd;
    drivers::RobotCommand out;
    out.issued_at = issued_at;
    switch (g) {
        case Gesture::ThumbUp: out.verb = c::TakeOff{}; break;
        case Gesture::ThumbDown: out.verb = c::Land{}; break;
        case Gesture::OpenPalm: out.verb = c::Stop{}; break;
        case Gesture::PointLeft: out.verb = c::Rotate{world::kPi / 2}; break;
        case Gesture::PointRight: out.verb = c::Rotate{-world::kPi / 2}; break;
        case Gesture::PointUp: out.verb = c::Move{drivers::kDefaultSpeed, 0.0, 0.0, 1.0}; break;
    }
    return out;
}

HandGesture::HandGesture(PluginEnv& env) : Plugin(env) {
    sub_ = env_.bus.subscribe(std::string(bus::topics::kGestures), [this](const bus::Message& m) {
        try {
            pending_.push_back(gesture_event_from_json(m.payload));
        } catch (const std::exception&) {
            // Malformed events are rejected at the gateway; ignore stragglers.
        }
    });
}

HandGesture::~HandGesture() { env_.bus.unsubscribe(sub_); }

PluginDescriptor HandGesture::descriptor() const {
    return {id(), {std::string(bus::topics::kGestures)}, {std::string(bus::topics::kPluginEvents)},
            active_ ? PluginState::Active : PluginState::Idle};
}

void HandGesture::activate(const bt::Blackboard&, std::int64_t) {
    active_ = true;
    pending_.clear();
}

void HandGesture::deactivate() {
    active_ = false;
    pending_.clear();
}

NodeStatus HandGesture::on_tick(bt::TickContext& ctx) {
    if (!active_) activate(ctx.blackboard, ctx.now_ms);
    while (!pending_.empty()) {
        GestureEvent e = pending_.front();
        pending_.pop_front();
        auto cmd = gesture_command(e.gesture, ctx.now_ms);
        auto outcome = env_.drivers.interface(env_.robot, cmd, ctx.now_ms, id());
        env_.bus.publish(bus::topics::kPluginEvents, id(),
                         {{"plugin", id()},
                          {"gesture", to_string(e.gesture)},
                          {"verb", drivers::verb_name(cmd.verb)},
                          {"outcome", drivers::to_json(outcome)}});
    }
    return NodeStatus::Running;
}

bool apply_key(std::string_view key, world::Twist& held) {
    if (key == "w") held.vx = kKeyboardSpeed;
    else if (key == "s") held.vx = -kKeyboardSpeed;
    else if (key == "a") held.vy = kKeyboardSpeed;
    else if (key == "d") held.vy = -kKeyboardSpeed;
    else if (key == "q") held.yaw_rate = kKeyboardYawRate;
    else if (key == "e") held.yaw_rate = -kKeyboardYawRate;
    else if (key == " " || key == "space") held = {};
    else return false;
    return true;
}

Keyboard::Keyboard(PluginEnv& env) : Plugin(env) {
    sub_ = env_.bus.subscribe(std::string(bus::topics::kKeys), [this](const bus::Message& m) {
        if (m.payload.contains("key") && m.payload["key"].is_string()) pending_.push_back(m.payload["key"].get<std::string>());
    });
}

Keyboard::~Keyboard() { env_.bus.unsubscribe(sub_); }

PluginDescriptor Keyboard::descriptor() const {
    return {id(), {std::string(bus::topics::kKeys)}, {std::string(bus::topics::kCmdVel)},
            active_ ? PluginState::Active : PluginState::Idle};
}

void Keyboard::activate(const bt::Blackboard&, std::int64_t) {
    active_ = true;
    pending_.clear();
    held_ = {};
}

void Keyboard::deactivate() {
    active_ = false;
    pending_.clear();
    held_ = {};
}

NodeStatus Keyboard::on_tick(bt::TickContext& ctx) {
    if (!active_) activate(ctx.blackboard, ctx.now_ms);
    while (!pending_.empty()) {
        apply_key(pending_.front(), held_);
        pending_.pop_front();
    }
    publish_velocity(env_.bus, VelocityCommand{held_.vx, held_.vy, held_.yaw_rate, id()});
    return NodeStatus::Running;
}

}  // namespace btp::plugins
