#include "btpilot/plugins/plugins.hpp"

#include <algorithm>

namespace btp::plugins {

std::string_view to_string(PluginState s) { return s == PluginState::Active ? "active" : "idle"; }

nlohmann::json to_json(const PluginDescriptor& d) {
    return {{"id", d.id}, {"subscriptions", d.subscriptions}, {"publications", d.publications}, {"state", to_string(d.state)}};
}

nlohmann::json to_json(const VelocityCommand& v) {
    return {{"vx", v.vx}, {"vy", v.vy}, {"yaw_rate", v.yaw_rate}, {"source_plugin", v.source_plugin}};
}

VelocityCommand velocity_from_json(const nlohmann::json& j) {
    return {j.value("vx", 0.0), j.value("vy", 0.0), j.value("yaw_rate", 0.0), j.value("source_plugin", std::string())};
}

void publish_velocity(bus::Bus& bus, const VelocityCommand& v) {
    bus.publish(bus::topics::kCmdVel, v.source_plugin, to_json(v));
}

void publish_detections(bus::Bus& bus, const std::vector<Detection>& detections) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : detections) arr.push_back(world::to_json(d));
    bus.publish(bus::topics::kDetections, "camera", {{"detections", std::move(arr)}});
}

void Plugin::register_nodes(bt::Registry& reg) {
    reg.add_plugin(id(), [this](bt::TickContext& ctx) { return on_tick(ctx); });
}

void PluginManager::add_defaults(TrackParams params) {
    add(std::make_unique<HandGesture>(env_));
    add(std::make_unique<PersonTracking>(env_, params));
    add(std::make_unique<Keyboard>(env_));
}

Plugin& PluginManager::add(std::unique_ptr<Plugin> plugin) {
    if (!plugin) throw std::invalid_argument("null plugin");
    const std::string id = plugin->id();
    if (id == bt::kNoPlugin || find(id)) throw DuplicatePlugin(id);
    plugins_.push_back(std::move(plugin));
    return *plugins_.back();
}

Plugin* PluginManager::find(std::string_view id) const {
    for (const auto& p : plugins_) {
        if (p->id() == id) return p.get();
    }
    return nullptr;
}

std::vector<std::string> PluginManager::ids() const {
    std::vector<std::string> out;
    for (const auto& p : plugins_) out.push_back(p->id());
    return out;
}

std::vector<PluginDescriptor> PluginManager::descriptors() const {
    std::vector<PluginDescriptor> out;
    for (const auto& p : plugins_) out.push_back(p->descriptor());
    return out;
}

void PluginManager::register_nodes(bt::Registry& reg) {
    for (const auto& p : plugins_) p->register_nodes(reg);
}

bool PluginManager::sync(const bt::Blackboard& bb, std::int64_t now_ms) {
    const std::string want = bb.get_string(bt::kActivePlugin, bt::kNoPlugin);
    if (want == active_) return false;
    if (Plugin* old = find(active_)) old->deactivate();
    active_ = want;
    if (Plugin* now = find(active_)) now->activate(bb, now_ms);
    return true;
}

PersonTracking* PluginManager::tracking() const { return dynamic_cast<PersonTracking*>(find(PersonTracking::kId)); }

}  // namespace btp::plugins
