#include <algorithm>
#include <cmath>

#include "btpilot/plugins/plugins.hpp"

namespace btp::plugins {

std::string_view to_string(Side s) { return s == Side::Left ? "left" : "right"; }

nlohmann::json to_json(const TrackedTarget& t) {
    return {{"person_id", t.person_id},
            {"descriptor", t.descriptor},
            {"last_bbox", world::to_json(t.last_bbox)},
            {"last_seen_tick", t.last_seen_tick},
            {"last_seen_ms", t.last_seen_ms},
            {"last_side", to_string(t.last_side)}};
}

Side side_of(const world::BBox& box, const world::CameraModel& camera) {
    return box.center_u() < 0.5 * camera.image_width ? Side::Left : Side::Right;
}

std::set<std::string> parse_descriptor(std::string_view text) {
    std::set<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        auto b = item.find_first_not_of(" \t");
        auto e = item.find_last_not_of(" \t");
        if (b != std::string_view::npos) out.emplace(item.substr(b, e - b + 1));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<Detection> select_target(const std::vector<Detection>& detections, const std::set<std::string>& descriptor) {
    if (descriptor.empty()) throw std::invalid_argument("target descriptor is empty");
    const Detection* best = nullptr;
    for (const auto& d : detections) {
        if (!std::includes(d.attributes.begin(), d.attributes.end(), descriptor.begin(), descriptor.end())) continue;
        if (!best || d.bbox.area() > best->bbox.area() ||
            (d.bbox.area() == best->bbox.area() && d.person_id < best->person_id)) {
            best = &d;
        }
    }
    if (!best) return std::nullopt;
    return *best;
}

VelocityCommand track_control(const world::BBox& box, const world::CameraModel& camera, const TrackParams& p) {
    if (!(box.width() > 0.0)) throw DegenerateBox();
    const double half = 0.5 * camera.image_width;
    VelocityCommand v;
    v.source_plugin = std::string(PersonTracking::kId);
    v.yaw_rate = -p.k_yaw * (box.center_u() - half) / half;
    v.vx = std::clamp(p.k_fwd * (p.w_ref - box.width()) / p.w_ref, -p.v_max, p.v_max);
    return v;
}

PersonTracking::PersonTracking(PluginEnv& env, TrackParams params) : Plugin(env), params_(params) {}

PluginDescriptor PersonTracking::descriptor() const {
    return {id(),
            {std::string(bus::topics::kDetections)},
            {std::string(bus::topics::kCmdVel), std::string(bus::topics::kPluginFailures)},
            active_ ? PluginState::Active : PluginState::Idle};
}

void PersonTracking::activate(const bt::Blackboard& bb, std::int64_t now_ms) {
    active_ = true;
    descriptor_text_ = bb.get_string(bt::kTrackDescriptor);
    descriptor_ = parse_descriptor(descriptor_text_);
    detections_.clear();
    target_.reset();
    current_.reset();
    last_seen_ms_ = now_ms;
}

void PersonTracking::deactivate() {
    active_ = false;
    detections_.clear();
    current_.reset();
}

void PersonTracking::ensure_active(bt::TickContext& ctx) {
    if (!active_) activate(ctx.blackboard, ctx.now_ms);
}

NodeStatus PersonTracking::detect(bt::TickContext& ctx) {
    ensure_active(ctx);
    detections_.clear();
    if (auto m = env_.bus.latest(bus::topics::kDetections)) {
        for (const auto& d : m->payload.value("detections", nlohmann::json::array())) {
            detections_.push_back(world::detection_from_json(d));
        }
    }
    return NodeStatus::Success;
}

NodeStatus PersonTracking::select(bt::TickContext& ctx) {
    ensure_active(ctx);
    current_.reset();
    if (descriptor_.empty()) return NodeStatus::Failure;
    if (selector_) {
        if (auto pid = selector_(detections_, descriptor_text_)) {
            for (const auto& d : detections_) {
                if (d.person_id == *pid) current_ = d;
            }
        }
    } else {
        current_ = select_target(detections_, descriptor_);
    }
    if (!current_) return NodeStatus::Failure;
    TrackedTarget t;
    t.person_id = current_->person_id;
    t.descriptor = descriptor_;
    t.last_bbox = current_->bbox;
    t.last_seen_tick = ctx.tick_index;
    t.last_seen_ms = ctx.now_ms;
    t.last_side = side_of(current_->bbox, env_.camera);
    target_ = std::move(t);
    last_seen_ms_ = ctx.now_ms;
    return NodeStatus::Success;
}

NodeStatus PersonTracking::follow(bt::TickContext& ctx) {
    ensure_active(ctx);
    if (!current_) return NodeStatus::Failure;
    publish_velocity(env_.bus, track_control(current_->bbox, env_.camera, params_));
    return NodeStatus::Running;
}

NodeStatus PersonTracking::search(bt::TickContext& ctx) {
    ensure_active(ctx);
    if (unseen_ms(ctx.now_ms) > params_.lost_timeout_ms) return NodeStatus::Success;
    const Side side = target_ ? target_->last_side : Side::Left;
    VelocityCommand v;
    v.source_plugin = id();
    v.yaw_rate = side == Side::Left ? params_.search_rate : -params_.search_rate;
    publish_velocity(env_.bus, v);
    return NodeStatus::Running;
}

NodeStatus PersonTracking::halt(bt::TickContext& ctx) {
    publish_velocity(env_.bus, VelocityCommand{0.0, 0.0, 0.0, id()});
    drivers::RobotCommand stop{drivers::cmd::Stop{}, ctx.now_ms};
    env_.drivers.interface(env_.robot, stop, ctx.now_ms, id());
    env_.bus.publish(bus::topics::kPluginFailures, id(),
                     {{"plugin", id()},
                      {"modes", {drivers::to_string(drivers::FailureMode::TargetNotFound)}},
                      {"descriptor", descriptor_text_},
                      {"unseen_ms", unseen_ms(ctx.now_ms)}});
    ctx.blackboard.write(bt::kActivePlugin, std::string(bt::kNoPlugin));
    deactivate();
    return NodeStatus::Failure;
}

NodeStatus PersonTracking::on_tick(bt::TickContext& ctx) {
    detect(ctx);
    if (select(ctx) == NodeStatus::Success) return follow(ctx);
    if (search(ctx) == NodeStatus::Running) return NodeStatus::Running;
    return halt(ctx);
}

void PersonTracking::register_nodes(bt::Registry& reg) {
    Plugin::register_nodes(reg);
    reg.add_plugin("detector", [this](bt::TickContext& c) { return detect(c); });
    reg.add_plugin("target_select", [this](bt::TickContext& c) { return select(c); });
    reg.add_plugin("track_follow", [this](bt::TickContext& c) { return follow(c); });
    reg.add_plugin("lost_search", [this](bt::TickContext& c) { return search(c); });
    reg.add_action("halt_after_timeout", [this](bt::TickContext& c, std::string_view) { return halt(c); });
}

}  // namespace btp::plugins
