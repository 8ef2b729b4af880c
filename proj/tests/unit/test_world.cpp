#include <doctest.h>

#include <cmath>
#include <random>

#include "btpilot/world/world.hpp"

using namespace btp::world;

namespace {

World world_with(Vec2 person_at, double heading = 0.0) {
    World w;
    w.robot.heading = heading;
    w.persons.push_back({"p1", person_at, {"phone"}, {}});
    return w;
}

}  // namespace

TEST_CASE("zero motion drains battery only") {
    World w;
    w.robot.drain_rate = drain::kDroneLanded;
    step(w, 1.0);
    CHECK(w.robot.position == Vec2{0, 0});
    CHECK(w.robot.heading == 0.0);
    CHECK(w.robot.battery == doctest::Approx(100.0 - 0.005));
}

TEST_CASE("straight-line integration") {
    World w;
    w.robot.commanded = {1.0, 0.0, 0.0};
    step(w, 2.0);
    CHECK(w.robot.position.x == doctest::Approx(2.0));
    CHECK(w.robot.position.y == doctest::Approx(0.0));
}

TEST_CASE("body velocity is rotated by heading") {
    World w;
    w.robot.heading = kPi / 2;
    w.robot.commanded = {1.0, 0.5, 0.0};
    step(w, 1.0);
    CHECK(w.robot.position.x == doctest::Approx(-0.5));
    CHECK(w.robot.position.y == doctest::Approx(1.0));
}

TEST_CASE("yaw integration wraps") {
    World w;
    w.robot.commanded = {0, 0, kPi / 2};
    step(w, 1.0);
    CHECK(w.robot.heading == doctest::Approx(kPi / 2));
    step(w, 1.0);
    CHECK(w.robot.heading == doctest::Approx(kPi));
    step(w, 1.0);
    CHECK(w.robot.heading == doctest::Approx(-kPi / 2));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi));
}

TEST_CASE("step rejects non-positive dt") {
    World w;
    CHECK_THROWS_AS(step(w, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(step(w, -0.1), std::invalid_argument);
}

TEST_CASE("battery never goes negative") {
    World w;
    w.robot.battery = 0.01;
    w.robot.drain_rate = 1.0;
    step(w, 1.0);
    CHECK(w.robot.battery == 0.0);
}

TEST_CASE("persons integrate their velocities") {
    World w;
    w.persons.push_back({"p", {1, 1}, {}, {0.5, -1.0}});
    step(w, 2.0);
    CHECK(w.persons[0].position == Vec2{2.0, -1.0});
}

TEST_CASE("person dead ahead projects to the image centre") {
    auto w = world_with({4, 0});
    auto d = render_detections(w);
    REQUIRE(d.size() == 1);
    CHECK(d[0].bbox.center_u() == doctest::Approx(480.0));
    CHECK(d[0].person_id == "p1");
    CHECK(d[0].label == "person");
    CHECK(d[0].attributes.count("phone") == 1);
}

TEST_CASE("bearing convention: right of heading is positive") {
    RobotBody r;
    CHECK(bearing_to(r, {1, -1}) == doctest::Approx(kPi / 4));
    CHECK(bearing_to(r, {1, 1}) == doctest::Approx(-kPi / 4));
}

TEST_CASE("person on the fov edge is detected at the image border") {
    CameraModel cam;
    const double half = cam.fov / 2;
    // Right edge: bearing +fov/2.
    auto w = world_with({3 * std::cos(-half), 3 * std::sin(-half)});
    auto d = render_detections(w);
    REQUIRE(d.size() == 1);
    CHECK(project_bearing(half, cam) == doctest::Approx(960.0));
    CHECK(d[0].bbox.u_max == doctest::Approx(960.0));
    // Left edge.
    auto wl = world_with({3 * std::cos(half), 3 * std::sin(half)});
    auto dl = render_detections(wl);
    REQUIRE(dl.size() == 1);
    CHECK(dl[0].bbox.u_min == doctest::Approx(0.0));
}

TEST_CASE("persons outside the frustum are not detected") {
    CHECK(render_detections(world_with({-3, 0})).empty());
    CHECK(render_detections(world_with({9, 0})).empty());
    CHECK(render_detections(world_with({1, 5})).empty());
    CHECK(render_detections(world_with({0, 0})).empty());
}

TEST_CASE("box size follows the projection model") {
    CameraModel cam;
    // Width oracle computed independently: 960 * 0.5 / (2 * 2 * tan(0.75)).
    const double expected = 960.0 * 0.5 / (4.0 * std::tan(0.75));
    CHECK(box_width(2.0, cam) == doctest::Approx(expected));
    CHECK(box_width(1000.0, cam) == doctest::Approx(4.0));
    CHECK(box_width(0.01, cam) == doctest::Approx(960.0));

    auto d = render_detections(world_with({2, 0}));
    REQUIRE(d.size() == 1);
    CHECK(d[0].bbox.width() == doctest::Approx(expected));
    CHECK(d[0].bbox.height() == doctest::Approx(2 * expected));
    CHECK(d[0].bbox.v_min + d[0].bbox.v_max == doctest::Approx(720.0));
}

TEST_CASE("projection and range monotonicity") {
    CameraModel cam;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> b(-cam.fov / 2, cam.fov / 2);
    std::uniform_real_distribution<double> rr(0.05, 20.0);
    for (int i = 0; i < 1000; ++i) {
        double b1 = b(rng), b2 = b(rng);
        if (b1 == b2) continue;
        if (b1 > b2) std::swap(b1, b2);
        CHECK(project_bearing(b1, cam) < project_bearing(b2, cam));
        double r1 = rr(rng), r2 = rr(rng);
        if (r1 > r2) std::swap(r1, r2);
        CHECK(box_width(r1, cam) >= box_width(r2, cam));
    }
}

TEST_CASE("detections stay inside the image") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pos(-8, 8);
    std::uniform_real_distribution<double> hd(-kPi, kPi);
    for (int i = 0; i < 1000; ++i) {
        World w;
        w.robot.heading = hd(rng);
        for (int p = 0; p < 3; ++p) w.persons.push_back({"p" + std::to_string(p), {pos(rng), pos(rng)}, {}, {}});
        for (const auto& d : render_detections(w)) {
            CHECK(d.bbox.u_min >= 0.0);
            CHECK(d.bbox.u_min < d.bbox.u_max);
            CHECK(d.bbox.u_max <= 960.0);
            CHECK(d.bbox.v_min >= 0.0);
            CHECK(d.bbox.v_min < d.bbox.v_max);
            CHECK(d.bbox.v_max <= 720.0);
        }
    }
}

TEST_CASE("battery is non-increasing and trajectories deterministic") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> v(-2, 2);
    std::uniform_real_distribution<double> dt(0.01, 0.5);
    World a;
    a.robot.drain_rate = drain::kDroneFlying;
    World b = a;
    for (int i = 0; i < 500; ++i) {
        Twist cmd{v(rng), v(rng), v(rng)};
        double h = dt(rng);
        double before = a.robot.battery;
        a.robot.commanded = cmd;
        b.robot.commanded = cmd;
        step(a, h);
        step(b, h);
        CHECK(a.robot.battery <= before);
        CHECK(a.robot.heading > -kPi);
        CHECK(a.robot.heading <= kPi);
    }
    CHECK(a == b);
}

TEST_CASE("noise is seed controlled") {
    auto w = world_with({3, 0});
    w.noise = {0.5, 10.0};
    std::mt19937_64 r1(42), r2(42);
    for (int i = 0; i < 50; ++i) {
        CHECK(render_detections(w, &r1) == render_detections(w, &r2));
    }
    CHECK(render_detections(w).size() == 1);
}

TEST_CASE("camera validation") {
    CameraModel c;
    c.fov = 3.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.image_width = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("world json round trip") {
    auto doc = nlohmann::json::parse(R"({
        "robot": {"position": [1, 2], "heading": 0.5, "battery": 26, "kind": "drone"},
        "camera": {"fov": 1.2},
        "persons": [{"id": "alice", "position": [3, 0], "attributes": ["phone"]}]
    })");
    World w = world_from_json(doc);
    CHECK(w.robot.position == Vec2{1, 2});
    CHECK(w.robot.battery == 26.0);
    CHECK(w.camera.fov == 1.2);
    CHECK(w.camera.image_width == 960);
    REQUIRE(w.persons.size() == 1);
    CHECK(w.persons[0].attributes == std::set<std::string>{"phone"});
    CHECK(world_from_json(to_json(w)) == w);
    CHECK_THROWS(world_from_json(nlohmann::json::parse(R"({"robot": {"battery": 120}})")));
}
