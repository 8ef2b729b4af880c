#include <doctest.h>

#include <cmath>
#include <random>

#include "btpilot/plugins/plugins.hpp"
#include "support/track_rig.hpp"

using namespace btp;
using namespace btp::plugins;
using drivers::OpState;
using testing::Rig;
using testing::person;

namespace {

world::BBox box_at(double center_u, double width, double height = 100.0) {
    return {center_u - width / 2, 300.0, center_u + width / 2, 300.0 + height};
}

Detection det(std::string id, double center_u, double width, std::set<std::string> attrs) {
    return {box_at(center_u, width), "person", std::move(attrs), std::move(id)};
}


}  // namespace

TEST_CASE("track control law") {
    world::CameraModel cam;
    const double W = cam.image_width;

    auto eq = track_control(box_at(W / 2, 120), cam);
    CHECK(eq.vx == doctest::Approx(0.0));
    CHECK(eq.yaw_rate == doctest::Approx(0.0));
    CHECK(eq.source_plugin == "person_tracking");

    auto right = track_control(box_at(W - 60, 120), cam);
    CHECK(right.yaw_rate < 0.0);
    auto edge = track_control({W - 120, 300, W, 400}, cam);
    CHECK(edge.yaw_rate == doctest::Approx(-(W - 60 - W / 2) / (W / 2)));

    auto far = track_control(box_at(W / 2, 60), cam);
    CHECK(far.vx == doctest::Approx(0.5));
    auto close = track_control(box_at(W / 2, 600), cam);
    CHECK(close.vx == doctest::Approx(-1.0));

    CHECK_THROWS_AS(track_control(box_at(W / 2, 0), cam), DegenerateBox);
}

TEST_CASE("track control matches an independent evaluation on random boxes") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, 960), wd(4, 400), k(0.1, 3.0);
    world::CameraModel cam;
    for (int i = 0; i < 1000; ++i) {
        TrackParams p;
        p.k_yaw = k(rng);
        p.k_fwd = k(rng);
        const double c = u(rng), width = wd(rng);
        auto v = track_control(box_at(c, width), cam, p);
        const double err = (c - 480.0) / 480.0;
        double fwd = p.k_fwd * (120.0 - width) / 120.0;
        if (fwd > 1.0) fwd = 1.0;
        if (fwd < -1.0) fwd = -1.0;
        CHECK(v.yaw_rate == doctest::Approx(-p.k_yaw * err));
        CHECK(v.vx == doctest::Approx(fwd));
        CHECK(v.vy == 0.0);
        CHECK(std::abs(v.vx) <= p.v_max);
    }
}

TEST_CASE("target selection") {
    std::vector<Detection> dets{det("p1", 100, 50, {"phone"}), det("p2", 500, 80, {})};
    auto first = select_target(dets, {"phone"});
    REQUIRE(first);
    CHECK(first->person_id == "p1");

    CHECK_FALSE(select_target({det("p2", 500, 80, {})}, {"phone"}));
    CHECK_THROWS_AS(select_target(dets, {}), std::invalid_argument);

    std::vector<Detection> pair{det("a", 100, 50, {"phone"}), det("b", 700, 90, {"phone", "hat"})};
    CHECK(select_target(pair, {"phone"})->person_id == "b");
    std::vector<Detection> same{det("z", 100, 60, {"phone"}), det("m", 700, 60, {"phone"})};
    CHECK(select_target(same, {"phone"})->person_id == "m");
    CHECK(select_target(pair, {"phone", "hat"})->person_id == "b");

    CHECK(parse_descriptor(" phone, red shirt ,,") == std::set<std::string>{"phone", "red shirt"});
}

TEST_CASE("last side ties go right") {
    world::CameraModel cam;
    CHECK(side_of(box_at(479, 20), cam) == Side::Left);
    CHECK(side_of(box_at(480, 20), cam) == Side::Right);
    CHECK(side_of(box_at(481, 20), cam) == Side::Right);
}

TEST_CASE("tracking converges on a static target") {
    // Person 3 m ahead and about 0.4 rad to the left.
    Rig rig({person("p1", 3.0, 1.3)});
    rig.enable("person_tracking", "phone");
    const double W = rig.w.camera.image_width;
    int converged_at = -1;
    for (int i = 1; i <= 100 && converged_at < 0; ++i) {
        auto [s, v] = rig.step("person_tracking");
        CHECK(s == NodeStatus::Running);
        auto dets = world::render_detections(rig.w);
        REQUIRE(dets.size() == 1);
        if (std::abs(dets[0].bbox.center_u() - W / 2) < 0.05 * W) converged_at = i;
    }
    CHECK(converged_at > 0);
    CHECK(converged_at <= 100);
}

TEST_CASE("tracking convergence over random static placements") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> bearing(-0.7, 0.7), range(1.0, 7.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double b = bearing(rng), r = range(rng);
        Rig rig({person("p", r * std::cos(b), r * std::sin(b))});
        rig.enable("person_tracking", "phone");
        bool ok = false;
        for (int i = 0; i < 100 && !ok; ++i) {
            rig.step("person_tracking");
            auto d = world::render_detections(rig.w);
            ok = !d.empty() && std::abs(d[0].bbox.center_u() - 480.0) < 48.0;
        }
        CHECK_MESSAGE(ok, "bearing " << b << " range " << r);
    }
}

TEST_CASE("lost target rotates toward the last side") {
    for (double y : {1.0, -1.0}) {
        Rig rig({person("p1", 3.0, y)});
        rig.enable("person_tracking", "phone");
        rig.step("person_tracking");
        REQUIRE(rig.manager.tracking()->target());
        const Side side = rig.manager.tracking()->target()->last_side;
        CHECK(side == (y > 0 ? Side::Left : Side::Right));
        rig.w.persons.clear();
        auto [s, v] = rig.step("person_tracking");
        CHECK(s == NodeStatus::Running);
        REQUIRE(v);
        CHECK(v->vx == 0.0);
        CHECK(v->yaw_rate == doctest::Approx(y > 0 ? 0.5 : -0.5));
    }
}

TEST_CASE("never-seen target searches left by default") {
    Rig rig;
    rig.enable("person_tracking", "phone");
    auto [s, v] = rig.step("person_tracking");
    CHECK(s == NodeStatus::Running);
    REQUIRE(v);
    CHECK(v->yaw_rate == doctest::Approx(0.5));
}

TEST_CASE("lost timeout fires at the first tick past five seconds") {
    Rig rig({person("p1", 3.0, 0.0)});
    rig.enable("person_tracking", "phone");
    rig.step("person_tracking");
    const std::int64_t seen = rig.manager.tracking()->target()->last_seen_ms;
    rig.w.persons.clear();
    std::int64_t failed_at = -1;
    for (int i = 0; i < 80 && failed_at < 0; ++i) {
        const std::int64_t t = rig.now;
        auto [s, v] = rig.step("person_tracking");
        if (s == NodeStatus::Failure) {
            failed_at = t;
            REQUIRE(v);
            CHECK(v->twist().is_zero());
        } else {
            CHECK(t - seen <= 5000);
        }
    }
    CHECK(failed_at - seen == 5100);
    CHECK(rig.bb.get_string(bt::kActivePlugin) == "none");
    auto failures = rig.bus.history(bus::topics::kPluginFailures);
    REQUIRE(failures.size() == 1);
    CHECK(failures[0].payload["modes"] == nlohmann::json{"target_not_found"});
    CHECK(failures[0].payload["descriptor"] == "phone");
    const auto& inv = rig.drivers.invocations();
    REQUIRE_FALSE(inv.empty());
    CHECK(inv.back().source == "person_tracking");
    CHECK(inv.back().verb == "stop");
}

TEST_CASE("timeout exactness for random tick phases") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::int64_t> step_ms(1, 400), last(0, 10000);
    for (int trial = 0; trial < 200; ++trial) {
        Rig rig;
        rig.now = last(rng);
        rig.enable("person_tracking", "phone");
        auto* t = rig.manager.tracking();
        const std::int64_t start = rig.now;
        const std::int64_t dt = step_ms(rng);
        bt::Blackboard& bb = rig.bb;
        for (std::int64_t now = start;; now += dt) {
            bt::TickContext ctx{bb, rig.reg, 1, now};
            auto s = t->on_tick(ctx);
            if (now - start > 5000) {
                CHECK(s == NodeStatus::Failure);
                break;
            }
            CHECK(s == NodeStatus::Running);
        }
    }
}

TEST_CASE("llm selector chooses by person id") {
    Rig rig({person("p1", 3.0, 0.5), person("p2", 3.0, -0.5)});
    rig.manager.tracking()->set_selector([](const std::vector<Detection>&, const std::string& d) {
        return d == "phone" ? std::optional<std::string>("p2") : std::nullopt;
    });
    rig.enable("person_tracking", "phone");
    rig.step("person_tracking");
    REQUIRE(rig.manager.tracking()->target());
    CHECK(rig.manager.tracking()->target()->person_id == "p2");
}

TEST_CASE("hand gestures drive the robot through the driver interface") {
    world::World w;
    bus::Bus bus;
    drivers::DriverRegistry reg;
    reg.register_driver(drivers::make_sim_driver(RobotKind::Drone, w.robot, OpState::Landed));
    PluginEnv env{bus, reg, RobotKind::Drone, {}};
    HandGesture g(env);
    bt::Blackboard bb;
    bt::Registry r;

    bus.publish(bus::topics::kGestures, "gateway", {{"gesture", "thumb_up"}});
    CHECK(g.pending() == 1);
    g.activate(bb, 0);
    CHECK(g.pending() == 0);

    bus.publish(bus::topics::kGestures, "gateway", {{"gesture", "thumb_up"}});
    bt::TickContext ctx{bb, r, 1, 100};
    CHECK(g.on_tick(ctx) == NodeStatus::Running);
    REQUIRE(reg.invocations().size() == 1);
    CHECK(reg.invocations()[0].verb == "take_off");
    CHECK(reg.invocations()[0].source == "hand_gesture");
    CHECK(reg.resolve(RobotKind::Drone).op_state() == OpState::Flying);

    reg.resolve(RobotKind::Drone).apply_velocity({0.4, 0.0, 0.0});
    bus.publish(bus::topics::kGestures, "gateway", {{"gesture", "open_palm"}});
    ctx.now_ms = 200;
    g.on_tick(ctx);
    CHECK(reg.invocations().back().verb == "stop");
    CHECK(w.robot.commanded.is_zero());
    CHECK(g.on_tick(ctx) == NodeStatus::Running);

    CHECK(std::get<drivers::cmd::Rotate>(gesture_command(Gesture::PointLeft, 0).verb).angle == doctest::Approx(world::kPi / 2));
    CHECK(std::get<drivers::cmd::Rotate>(gesture_command(Gesture::PointRight, 0).verb).angle == doctest::Approx(-world::kPi / 2));
    auto up = std::get<drivers::cmd::Move>(gesture_command(Gesture::PointUp, 0).verb);
    CHECK(up.vx == doctest::Approx(0.5));
    CHECK(up.duration_s == doctest::Approx(1.0));
    CHECK(std::holds_alternative<drivers::cmd::Land>(gesture_command(Gesture::ThumbDown, 0).verb));
    CHECK_THROWS_AS(parse_gesture("wave"), std::invalid_argument);
    for (auto e : {Gesture::ThumbUp, Gesture::ThumbDown, Gesture::OpenPalm, Gesture::PointLeft, Gesture::PointRight,
                   Gesture::PointUp}) {
        CHECK(parse_gesture(to_string(e)) == e);
    }
}

TEST_CASE("keyboard holds its setpoint") {
    world::World w;
    bus::Bus bus;
    drivers::DriverRegistry reg;
    PluginEnv env{bus, reg, RobotKind::Drone, {}};
    Keyboard k(env);
    bt::Blackboard bb;
    bt::Registry r;
    k.activate(bb, 0);
    bt::TickContext ctx{bb, r, 1, 0};

    bus.publish(bus::topics::kKeys, "gateway", {{"key", "w"}});
    k.on_tick(ctx);
    auto v = velocity_from_json(bus.latest(bus::topics::kCmdVel)->payload);
    CHECK(v.vx == doctest::Approx(0.5));
    CHECK(v.source_plugin == "keyboard");

    k.on_tick(ctx);
    CHECK(velocity_from_json(bus.latest(bus::topics::kCmdVel)->payload).vx == doctest::Approx(0.5));

    bus.publish(bus::topics::kKeys, "gateway", {{"key", "q"}});
    bus.publish(bus::topics::kKeys, "gateway", {{"key", "a"}});
    k.on_tick(ctx);
    CHECK(k.held().vx == doctest::Approx(0.5));
    CHECK(k.held().vy == doctest::Approx(0.5));
    CHECK(k.held().yaw_rate == doctest::Approx(0.5));

    bus.publish(bus::topics::kKeys, "gateway", {{"key", " "}});
    k.on_tick(ctx);
    CHECK(velocity_from_json(bus.latest(bus::topics::kCmdVel)->payload).twist().is_zero());

    world::Twist t;
    CHECK(apply_key("s", t));
    CHECK(t.vx == -0.5);
    CHECK(apply_key("d", t));
    CHECK(t.vy == -0.5);
    CHECK(apply_key("e", t));
    CHECK(t.yaw_rate == -0.5);
    CHECK_FALSE(apply_key("x", t));
}

TEST_CASE("manager follows the blackboard") {
    bus::Bus bus;
    drivers::DriverRegistry reg;
    PluginEnv env{bus, reg, RobotKind::Drone, {}};
    PluginManager m(env);
    m.add_defaults();
    CHECK(m.ids() == std::vector<std::string>{"hand_gesture", "person_tracking", "keyboard"});
    CHECK_THROWS_AS(m.add(std::make_unique<Keyboard>(env)), DuplicatePlugin);

    bt::Blackboard bb;
    CHECK_FALSE(m.sync(bb, 0));
    bb.write(bt::kActivePlugin, std::string("keyboard"));
    CHECK(m.sync(bb, 0));
    CHECK(m.find("keyboard")->active());
    CHECK(m.find("keyboard")->descriptor().state == PluginState::Active);
    bb.write(bt::kActivePlugin, std::string("hand_gesture"));
    m.sync(bb, 100);
    CHECK_FALSE(m.find("keyboard")->active());
    CHECK(m.find("hand_gesture")->active());
    CHECK(to_json(m.find("person_tracking")->descriptor())["state"] == "idle");

    bt::Registry r;
    m.register_nodes(r);
    for (const char* n : {"hand_gesture", "person_tracking", "keyboard", "detector", "target_select", "track_follow",
                          "lost_search"}) {
        CHECK(r.find_plugin(n));
    }
    CHECK(r.find_action("halt_after_timeout"));
}

TEST_CASE("inactive plugins publish nothing") {
    Rig rig({person("p1", 3.0, 0.0)});
    rig.bus.publish(bus::topics::kKeys, "gateway", {{"key", "w"}});
    rig.bus.publish(bus::topics::kGestures, "gateway", {{"gesture", "thumb_down"}});
    const auto before = rig.bus.published();
    rig.manager.sync(rig.bb, 0);
    for (const auto& m : rig.bus.history()) {
        if (m.seq > before) {
            CHECK(m.source != "keyboard");
            CHECK(m.source != "hand_gesture");
            CHECK(m.source != "person_tracking");
        }
    }
    CHECK(rig.bus.published() == before);
    CHECK(rig.drivers.invocations().empty());
}
