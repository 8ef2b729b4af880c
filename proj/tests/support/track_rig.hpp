#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "btpilot/plugins/plugins.hpp"

namespace btp::testing {

using plugins::NodeStatus;
using plugins::RobotKind;
using plugins::VelocityCommand;

/// Robot, world, bus and tracking plugin wired the way the tick loop wires them.
struct Rig {
    world::World w;
    bus::Bus bus;
    drivers::DriverRegistry drivers;
    plugins::PluginEnv env{bus, drivers, RobotKind::Drone, {}};
    plugins::PluginManager manager{env};
    bt::Blackboard bb;
    bt::Registry reg;
    std::int64_t tick = 0;
    std::int64_t now = 0;

    explicit Rig(std::vector<world::Person> persons = {}) {
        w.persons = std::move(persons);
        drivers.register_driver(drivers::make_sim_driver(RobotKind::Drone, w.robot, drivers::OpState::Flying));
        env.camera = w.camera;
        manager.add_defaults();
        manager.register_nodes(reg);
    }

    void enable(std::string plugin, std::string descriptor = {}) {
        if (!descriptor.empty()) bb.write(bt::kTrackDescriptor, descriptor);
        bb.write(bt::kActivePlugin, plugin);
        manager.sync(bb, now);
    }

    /// One loop iteration; returns the plugin status and the velocity published.
    std::pair<NodeStatus, std::optional<VelocityCommand>> step(std::string_view plugin) {
        ++tick;
        bus.set_clock(tick, now);
        plugins::publish_detections(bus, world::render_detections(w));
        manager.sync(bb, now);
        const auto before = bus.published();
        bt::TickContext ctx{bb, reg, tick, now};
        NodeStatus s = (*reg.find_plugin(plugin))(ctx);
        std::optional<VelocityCommand> v;
        for (const auto& m : bus.history(bus::topics::kCmdVel)) {
            if (m.seq > before) v = plugins::velocity_from_json(m.payload);
        }
        if (v) drivers.resolve(RobotKind::Drone).apply_velocity(v->twist());
        world::step(w, 0.1);
        now += 100;
        return {s, v};
    }
};

inline world::Person person(std::string id, double x, double y, std::set<std::string> attrs = {"phone"}) {
    world::Person p;
    p.id = std::move(id);
    p.position = {x, y};
    p.attributes = std::move(attrs);
    return p;
}

}  // namespace btp::testing
