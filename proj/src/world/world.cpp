#include "btpilot/world/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace btp::world {

double wrap_angle(double radians) {
    double a = std::remainder(radians, 2.0 * kPi);  // [-pi, pi]
    if (a <= -kPi) {
        a += 2.0 * kPi;
    }
    return a;
}

void CameraModel::validate() const {
    if (!(fov > 0.0 && fov < kPi)) {
        throw std::invalid_argument("camera fov must lie in (0, pi)");
    }
    if (image_width <= 0 || image_height <= 0) {
        throw std::invalid_argument("camera image size must be positive");
    }
    if (!(max_range > 0.0)) {
        throw std::invalid_argument("camera max_range must be positive");
    }
}

void step(World& world, double dt_s) {
    if (!(dt_s > 0.0)) {
        throw std::invalid_argument("step needs dt > 0");
    }
    RobotBody& r = world.robot;
    const double c = std::cos(r.heading);
    const double s = std::sin(r.heading);
    r.position.x += (c * r.commanded.vx - s * r.commanded.vy) * dt_s;
    r.position.y += (s * r.commanded.vx + c * r.commanded.vy) * dt_s;
    r.heading = wrap_angle(r.heading + r.commanded.yaw_rate * dt_s);
    r.battery = std::max(0.0, r.battery - r.drain_rate * dt_s);

    for (Person& p : world.persons) {
        p.position.x += p.velocity.x * dt_s;
        p.position.y += p.velocity.y * dt_s;
    }
}

double bearing_to(const RobotBody& robot, Vec2 target) {
    const double world_angle = std::atan2(target.y - robot.position.y, target.x - robot.position.x);
    return wrap_angle(robot.heading - world_angle);
}

double range_to(const RobotBody& robot, Vec2 target) {
    return std::hypot(target.x - robot.position.x, target.y - robot.position.y);
}

double project_bearing(double bearing, const CameraModel& camera) {
    return 0.5 * camera.image_width * (1.0 + bearing / (0.5 * camera.fov));
}

double box_width(double range, const CameraModel& camera) {
    const double w = static_cast<double>(camera.image_width);
    if (range <= 0.0) {
        return w;
    }
    const double raw = w * kPersonWidth / (2.0 * range * std::tan(0.5 * camera.fov));
    return std::clamp(raw, kMinBoxWidth, w);
}

namespace {

// Tolerance on the field-of-view edge so that a person placed exactly on the
// boundary is not lost to atan2 rounding.
constexpr double kFovEdgeEps = 1e-9;

}  // namespace

std::vector<Detection> render_detections(const World& world, std::mt19937_64* noise_rng) {
    const CameraModel& cam = world.camera;
    cam.validate();
    const double w_img = cam.image_width;
    const double h_img = cam.image_height;

    std::vector<Detection> out;
    for (const Person& p : world.persons) {
        const double range = range_to(world.robot, p.position);
        if (range <= 1e-9 || range > cam.max_range) {
            continue;
        }
        const double bearing = bearing_to(world.robot, p.position);
        if (std::abs(bearing) > 0.5 * cam.fov + kFovEdgeEps) {
            continue;
        }
        if (noise_rng && world.noise.miss_probability > 0.0) {
            std::bernoulli_distribution miss(world.noise.miss_probability);
            if (miss(*noise_rng)) {
                continue;
            }
        }

        double u = std::clamp(project_bearing(bearing, cam), 0.0, w_img);
        if (noise_rng && world.noise.jitter_px > 0.0) {
            std::uniform_real_distribution<double> jitter(-world.noise.jitter_px, world.noise.jitter_px);
            u = std::clamp(u + jitter(*noise_rng), 0.0, w_img);
        }
        const double bw = box_width(range, cam);
        const double bh = std::min(2.0 * bw, h_img);

        Detection d;
        d.bbox.u_min = std::max(0.0, u - 0.5 * bw);
        d.bbox.u_max = std::min(w_img, u + 0.5 * bw);
        d.bbox.v_min = 0.5 * (h_img - bh);
        d.bbox.v_max = 0.5 * (h_img + bh);
        if (d.bbox.u_max <= d.bbox.u_min) {
            // Box squeezed against an image edge; keep it minimally wide and inside.
            if (d.bbox.u_min >= w_img) {
                d.bbox.u_min = w_img - kMinBoxWidth;
                d.bbox.u_max = w_img;
            } else {
                d.bbox.u_max = std::min(w_img, d.bbox.u_min + kMinBoxWidth);
            }
        }
        d.attributes = p.attributes;
        d.person_id = p.id;
        out.push_back(std::move(d));
    }
    return out;
}

nlohmann::json to_json(const Vec2& v) { return nlohmann::json::array({v.x, v.y}); }

nlohmann::json to_json(const Twist& t) { return {{"vx", t.vx}, {"vy", t.vy}, {"yaw_rate", t.yaw_rate}}; }

nlohmann::json to_json(const Person& p) {
    return {{"id", p.id}, {"position", to_json(p.position)}, {"velocity", to_json(p.velocity)}, {"attributes", p.attributes}};
}

nlohmann::json to_json(const RobotBody& r) {
    return {{"position", to_json(r.position)}, {"heading", r.heading},       {"altitude", r.altitude},
            {"battery", r.battery},            {"commanded", to_json(r.commanded)}, {"drain_rate", r.drain_rate}};
}

nlohmann::json to_json(const CameraModel& c) {
    return {{"fov", c.fov}, {"image_width", c.image_width}, {"image_height", c.image_height}, {"max_range", c.max_range}};
}

nlohmann::json to_json(const BBox& b) { return nlohmann::json::array({b.u_min, b.v_min, b.u_max, b.v_max}); }

nlohmann::json to_json(const Detection& d) {
    return {{"bbox", to_json(d.bbox)}, {"label", d.label}, {"attributes", d.attributes}, {"person_id", d.person_id}};
}

nlohmann::json to_json(const World& w) {
    nlohmann::json persons = nlohmann::json::array();
    for (const auto& p : w.persons) persons.push_back(to_json(p));
    return {{"robot", to_json(w.robot)},
            {"camera", to_json(w.camera)},
            {"noise", {{"miss_probability", w.noise.miss_probability}, {"jitter_px", w.noise.jitter_px}}},
            {"persons", std::move(persons)}};
}

Vec2 vec2_from_json(const nlohmann::json& j) {
    if (j.is_array()) {
        return {j.at(0).get<double>(), j.at(1).get<double>()};
    }
    return {j.at("x").get<double>(), j.at("y").get<double>()};
}

Twist twist_from_json(const nlohmann::json& j) {
    return {j.value("vx", 0.0), j.value("vy", 0.0), j.value("yaw_rate", 0.0)};
}

Person person_from_json(const nlohmann::json& j) {
    Person p;
    p.id = j.at("id").get<std::string>();
    p.position = vec2_from_json(j.at("position"));
    if (j.contains("velocity")) p.velocity = vec2_from_json(j.at("velocity"));
    if (j.contains("attributes")) p.attributes = j.at("attributes").get<std::set<std::string>>();
    return p;
}

BBox bbox_from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

Detection detection_from_json(const nlohmann::json& j) {
    Detection d;
    d.bbox = bbox_from_json(j.at("bbox"));
    d.label = j.value("label", std::string("person"));
    d.attributes = j.value("attributes", std::set<std::string>{});
    d.person_id = j.at("person_id").get<std::string>();
    return d;
}

World world_from_json(const nlohmann::json& doc) {
    World w;
    if (doc.contains("robot")) {
        const auto& r = doc.at("robot");
        if (r.contains("position")) w.robot.position = vec2_from_json(r.at("position"));
        w.robot.heading = wrap_angle(r.value("heading", 0.0));
        w.robot.altitude = r.value("altitude", 0.0);
        w.robot.battery = r.value("battery", 100.0);
        if (r.contains("commanded")) w.robot.commanded = twist_from_json(r.at("commanded"));
        w.robot.drain_rate = r.value("drain_rate", 0.0);
        if (w.robot.battery < 0.0 || w.robot.battery > 100.0) {
            throw std::invalid_argument("robot battery must lie in [0, 100]");
        }
        if (w.robot.altitude < 0.0) {
            throw std::invalid_argument("robot altitude must be >= 0");
        }
    }
    if (doc.contains("camera")) {
        const auto& c = doc.at("camera");
        w.camera.fov = c.value("fov", w.camera.fov);
        w.camera.image_width = c.value("image_width", w.camera.image_width);
        w.camera.image_height = c.value("image_height", w.camera.image_height);
        w.camera.max_range = c.value("max_range", w.camera.max_range);
    }
    w.camera.validate();
    if (doc.contains("noise")) {
        const auto& n = doc.at("noise");
        w.noise.miss_probability = n.value("miss_probability", 0.0);
        w.noise.jitter_px = n.value("jitter_px", 0.0);
    }
    if (doc.contains("persons")) {
        for (const auto& p : doc.at("persons")) {
            w.persons.push_back(person_from_json(p));
        }
    }
    return w;
}

}  // namespace btp::world
