#include <doctest.h>

#include <cmath>
#include <random>

#include "btpilot/drivers/driver.hpp"

using namespace btp::drivers;
using btp::world::World;

namespace {

RobotCommand c(Verb v, std::int64_t t = 0) { return {std::move(v), t}; }

std::vector<FailureMode> modes(const ExecutionOutcome& o) { return o.modes; }

}  // namespace

TEST_CASE("registry maps kinds to drivers") {
    World w;
    DriverRegistry reg;
    CHECK_THROWS_AS(reg.resolve(RobotKind::Legged), UnknownRobot);
    auto drone = std::make_unique<SimDrone>(w.robot);
    RobotDriver* raw = drone.get();
    reg.register_driver(std::move(drone));
    CHECK(&reg.resolve(RobotKind::Drone) == raw);
    World w2;
    CHECK_THROWS_AS(reg.register_driver(std::make_unique<SimDrone>(w2.robot)), DuplicateRegistration);
    CHECK_THROWS_AS(reg.interface(RobotKind::Legged, c(cmd::Stop{}), 0), UnknownRobot);
}

TEST_CASE("drone land while flying") {
    World w;
    SimDrone d(w.robot, OpState::Flying);
    CHECK(w.robot.altitude == 1.0);
    auto o = d.execute(c(cmd::Land{}), 100);
    CHECK(o.result == Result::Completed);
    CHECK(d.op_state() == OpState::Landed);
    CHECK(w.robot.altitude == 0.0);
}

TEST_CASE("drone flip gating") {
    World w;
    SUBCASE("landed, full battery") {
        SimDrone d(w.robot, OpState::Landed);
        auto o = d.execute(c(cmd::Flip{}), 0);
        CHECK(o.result == Result::Rejected);
        CHECK(modes(o) == std::vector{FailureMode::InvalidState});
        CHECK(d.status().last_error == FailureMode::InvalidState);
    }
    SUBCASE("landed, battery 10") {
        w.robot.battery = 10;
        SimDrone d(w.robot, OpState::Landed);
        auto o = d.execute(c(cmd::Flip{}), 0);
        CHECK(modes(o) == std::vector{FailureMode::LowBattery, FailureMode::InvalidState});
    }
    SUBCASE("flying, battery 26") {
        w.robot.battery = 26;
        SimDrone d(w.robot, OpState::Flying);
        auto o = d.execute(c(cmd::Flip{}), 1000);
        CHECK(o.result == Result::InProgress);
        CHECK(w.robot.battery == doctest::Approx(25.0));
        CHECK(d.busy());
        CHECK(d.update(1500).empty());
        auto done = d.update(1600);
        REQUIRE(done.size() == 1);
        CHECK(done[0].verb == "flip");
        CHECK(done[0].ticket == o.ticket);
        CHECK(done[0].outcome.result == Result::Completed);
        CHECK(done[0].outcome.finished_at - done[0].outcome.started_at == 600);
        CHECK_FALSE(d.busy());
    }
    SUBCASE("flying, battery 19.9") {
        w.robot.battery = 19.9;
        SimDrone d(w.robot, OpState::Flying);
        CHECK(modes(d.execute(c(cmd::Flip{}), 0)) == std::vector{FailureMode::LowBattery});
    }
}

TEST_CASE("drone takeoff") {
    World w;
    SimDrone d(w.robot);
    CHECK(d.status().op_state == OpState::Landed);
    CHECK(d.status().connectivity == Connectivity::Connected);
    CHECK(d.execute(c(cmd::TakeOff{}), 0).result == Result::Completed);
    CHECK(d.op_state() == OpState::Flying);
    CHECK(w.robot.altitude == 1.0);
    CHECK(w.robot.drain_rate == btp::world::drain::kDroneFlying);
    CHECK(modes(d.execute(c(cmd::TakeOff{}), 0)) == std::vector{FailureMode::InvalidState});
    CHECK(d.execute(c(cmd::Stand{}), 0).modes == std::vector{FailureMode::UnsupportedAction});
}

TEST_CASE("low battery takeoff refused, land always allowed") {
    World w;
    w.robot.battery = 5;
    SimDrone d(w.robot, OpState::Flying);
    CHECK(d.execute(c(cmd::Land{}), 0).result == Result::Completed);
    CHECK(modes(d.execute(c(cmd::TakeOff{}), 0)) == std::vector{FailureMode::LowBattery});
}

TEST_CASE("disconnection rejects everything and keeps op_state") {
    World w;
    SimDrone d(w.robot, OpState::Flying);
    d.set_connectivity(Connectivity::Disconnected);
    for (Verb v : {Verb{cmd::Land{}}, Verb{cmd::Stop{}}, Verb{cmd::Stand{}}, Verb{cmd::Flip{}}}) {
        CHECK(modes(d.execute(c(v), 0)) == std::vector{FailureMode::Disconnected});
    }
    auto s = d.status();
    CHECK(s.connectivity == Connectivity::Disconnected);
    CHECK(s.op_state == OpState::Flying);
    CHECK_FALSE(d.apply_velocity({1, 0, 0}));
}

TEST_CASE("legged state machine") {
    World w;
    SimLegged d(w.robot, OpState::Sitting);
    CHECK(modes(d.execute(c(cmd::TakeOff{}), 0)) == std::vector{FailureMode::UnsupportedAction});
    CHECK(modes(d.execute(c(cmd::Flip{}), 0)) == std::vector{FailureMode::UnsupportedAction});
    CHECK(modes(d.execute(c(cmd::Move{0.5, 0, 0, 1}), 0)) == std::vector{FailureMode::InvalidState});
    CHECK(d.execute(c(cmd::Stand{}), 0).result == Result::Completed);
    CHECK(d.op_state() == OpState::Standing);
    CHECK(modes(d.execute(c(cmd::Stand{}), 0)) == std::vector{FailureMode::InvalidState});
    CHECK(d.execute(c(cmd::Sit{}), 0).result == Result::Completed);
    CHECK(d.op_state() == OpState::Sitting);
}

TEST_CASE("legged move integrates to the expected displacement") {
    World w;
    SimLegged d(w.robot, OpState::Standing);
    auto o = d.execute(c(cmd::Move{0.5, 0, 0, 4.0}), 0);
    REQUIRE(o.result == Result::InProgress);
    std::int64_t now = 0;
    std::vector<Completion> done;
    while (done.empty()) {
        done = d.update(now);
        if (!done.empty()) break;
        btp::world::step(w, 0.1);
        now += 100;
    }
    CHECK(now == 4000);
    CHECK(done[0].outcome.finished_at == 4000);
    // Kinematic oracle: 40 steps of 0.1 s at 0.5 m/s.
    double x = 0;
    for (int i = 0; i < 40; ++i) x += 0.5 * 0.1;
    CHECK(w.robot.position.x == doctest::Approx(x));
    CHECK(w.robot.position.x == doctest::Approx(2.0));
    CHECK(w.robot.commanded.is_zero());
}

TEST_CASE("velocity limits") {
    World w;
    SimLegged legged(w.robot, OpState::Standing);
    legged.execute(c(cmd::Move{3.0, 0, 2.0, 1.0}), 0);
    CHECK(w.robot.commanded.vx == doctest::Approx(1.0));
    CHECK(w.robot.commanded.yaw_rate == doctest::Approx(1.0));
    World w2;
    SimDrone drone(w2.robot, OpState::Flying);
    CHECK(drone.apply_velocity({3.0, 4.0, 0}));
    CHECK(std::hypot(w2.robot.commanded.vx, w2.robot.commanded.vy) == doctest::Approx(2.0));
}

TEST_CASE("move duration validation") {
    World w;
    SimDrone d(w.robot, OpState::Flying);
    CHECK_THROWS_AS(d.execute(c(cmd::Move{0.5, 0, 0, 0.0}), 0), std::invalid_argument);
    CHECK_THROWS_AS(d.execute(c(cmd::Move{0.5, 0, 0, -1.0}), 0), std::invalid_argument);
}

TEST_CASE("busy exclusion and preemption") {
    World w;
    SimDrone d(w.robot, OpState::Flying);
    auto mv = d.execute(c(cmd::Move{0.5, 0, 0, 3.0}), 0);
    REQUIRE(mv.result == Result::InProgress);
    CHECK(modes(d.execute(c(cmd::Flip{}), 100)) == std::vector{FailureMode::Busy});
    CHECK(modes(d.execute(c(cmd::Rotate{1.0}), 100)) == std::vector{FailureMode::Busy});
    CHECK_FALSE(d.apply_velocity({1, 0, 0}));
    CHECK(d.status().busy);
    auto stop = d.execute(c(cmd::Stop{}), 200);
    CHECK(stop.result == Result::Completed);
    CHECK(w.robot.commanded.is_zero());
    auto done = d.update(300);
    REQUIRE(done.size() == 1);
    CHECK(done[0].ticket == mv.ticket);
    CHECK(done[0].outcome.finished_at == 200);
    CHECK_FALSE(d.busy());
}

TEST_CASE("rotate runs at the fixed rate") {
    World w;
    SimDrone d(w.robot, OpState::Flying);
    auto o = d.execute(c(cmd::Rotate{btp::world::kPi / 2}), 0);
    CHECK(o.result == Result::InProgress);
    CHECK(w.robot.commanded.yaw_rate == doctest::Approx(0.5));
    CHECK(d.update(3100).empty());
    CHECK(d.update(3142).size() == 1);
}

TEST_CASE("drain rates by state") {
    World w;
    SimDrone d(w.robot);
    CHECK(w.robot.drain_rate == btp::world::drain::kDroneLanded);
    World w2;
    SimLegged l(w2.robot);
    CHECK(w2.robot.drain_rate == btp::world::drain::kLegged);
}

TEST_CASE("interface routes to exactly D(robot)") {
    World wd, wl;
    DriverRegistry reg;
    reg.register_driver(std::make_unique<SimDrone>(wd.robot, OpState::Flying));
    reg.register_driver(std::make_unique<SimLegged>(wl.robot, OpState::Standing));

    std::mt19937_64 rng(1234);
    std::vector<Verb> verbs{cmd::TakeOff{}, cmd::Land{},  cmd::Flip{},  cmd::Move{0.3, 0, 0.1, 0.5},
                            cmd::Rotate{0.4}, cmd::Stand{}, cmd::Sit{}, cmd::Stop{}};
    std::int64_t now = 0;
    for (int i = 0; i < 1000; ++i) {
        RobotKind robot = (rng() & 1) ? RobotKind::Drone : RobotKind::Legged;
        const Verb& v = verbs[rng() % verbs.size()];
        const auto other = robot == RobotKind::Drone ? RobotKind::Legged : RobotKind::Drone;
        RobotStatus other_before = reg.resolve(other).status();
        reg.interface(robot, c(v, now), now, "test");
        CHECK(reg.resolve(other).status() == other_before);
        now += 100;
        reg.resolve(RobotKind::Drone).update(now);
        reg.resolve(RobotKind::Legged).update(now);
    }
    REQUIRE(reg.invocations().size() == 1000);
    for (const auto& inv : reg.invocations()) {
        CHECK(inv.driver_kind == inv.requested);
        CHECK(inv.driver_name == (inv.requested == RobotKind::Drone ? "sim_drone" : "sim_legged"));
    }
}

TEST_CASE("json round trips") {
    RobotCommand mv{cmd::Move{0.8, 0, 0, 3}, 1200};
    auto back = command_from_json(to_json(mv));
    CHECK(verb_name(back.verb) == "move");
    CHECK(std::get<cmd::Move>(back.verb).vx == 0.8);
    CHECK(back.issued_at == 1200);
    RobotCommand flip{cmd::Flip{FlipDirection::Left}, 0};
    CHECK(std::get<cmd::Flip>(command_from_json(to_json(flip)).verb).direction == FlipDirection::Left);
    CHECK_THROWS(command_from_json(nlohmann::json{{"verb", "jump"}}));

    ExecutionOutcome o{Result::Rejected, {FailureMode::LowBattery, FailureMode::InvalidState}, 5, 5, 9};
    CHECK(outcome_from_json(to_json(o)) == o);
    Invocation inv{RobotKind::Drone, RobotKind::Drone, "sim_drone", "flip", o, 5, "intent"};
    CHECK(invocation_from_json(to_json(inv)) == inv);
    CHECK(parse_op_state("flying") == OpState::Flying);
    CHECK_THROWS_AS(parse_robot_kind("wheeled"), std::invalid_argument);
}
