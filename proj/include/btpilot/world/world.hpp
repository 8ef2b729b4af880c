#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace btp::world {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double radians);

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Body-frame velocity: vx forward, vy left, yaw_rate counter-clockwise.
struct Twist {
    double vx = 0.0;
    double vy = 0.0;
    double yaw_rate = 0.0;

    bool is_zero() const { return vx == 0.0 && vy == 0.0 && yaw_rate == 0.0; }
    friend bool operator==(const Twist&, const Twist&) = default;
};

struct Person {
    std::string id;
    Vec2 position;
    std::set<std::string> attributes;
    Vec2 velocity;

    friend bool operator==(const Person&, const Person&) = default;
};

struct RobotBody {
    Vec2 position;
    double heading = 0.0;   // (-pi, pi]
    double altitude = 0.0;  // metres, >= 0
    double battery = 100.0; // percent
    Twist commanded;
    double drain_rate = 0.0;  // percent per second, set by the owning driver

    friend bool operator==(const RobotBody&, const RobotBody&) = default;
};

/// Battery drain rates in percent per second.
namespace drain {
inline constexpr double kDroneFlying = 0.05;
inline constexpr double kDroneLanded = 0.005;
inline constexpr double kLegged = 0.02;
}  // namespace drain

struct CameraModel {
    double fov = 1.5;  // radians
    int image_width = 960;
    int image_height = 720;
    double max_range = 8.0;  // metres

    /// Throws std::invalid_argument unless 0 < fov < pi and the image is non-empty.
    void validate() const;
    friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

struct BBox {
    double u_min = 0.0;
    double v_min = 0.0;
    double u_max = 0.0;
    double v_max = 0.0;

    double width() const { return u_max - u_min; }
    double height() const { return v_max - v_min; }
    double center_u() const { return 0.5 * (u_min + u_max); }
    double area() const { return width() * height(); }
    friend bool operator==(const BBox&, const BBox&) = default;
};

struct Detection {
    BBox bbox;
    std::string label = "person";
    std::set<std::string> attributes;
    std::string person_id;

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// Optional per-frame perception noise, drawn from a caller-owned seeded engine.
struct DetectionNoise {
    double miss_probability = 0.0;
    double jitter_px = 0.0;

    friend bool operator==(const DetectionNoise&, const DetectionNoise&) = default;
};

struct World {
    RobotBody robot;
    std::vector<Person> persons;
    CameraModel camera;
    DetectionNoise noise;

    friend bool operator==(const World&, const World&) = default;
};

/// Physical width of a person used by the projection model.
inline constexpr double kPersonWidth = 0.5;
inline constexpr double kMinBoxWidth = 4.0;

/// Advances the world by `dt_s` seconds (explicit Euler, heading taken at the
/// start of the step). Throws std::invalid_argument when dt_s <= 0.
void step(World& world, double dt_s);

/// Bearing of `target` seen from `robot`, clockwise-positive (a person to the
/// robot's right has a positive bearing), wrapped into (-pi, pi].
double bearing_to(const RobotBody& robot, Vec2 target);
double range_to(const RobotBody& robot, Vec2 target);

/// Horizontal image coordinate of a point at `bearing`: W/2 * (1 + bearing / (fov/2)).
double project_bearing(double bearing, const CameraModel& camera);
/// Apparent box width at `range`, clamped to [4 px, W].
double box_width(double range, const CameraModel& camera);

/// Geometric person detector. Persons with |bearing| <= fov/2 and range <= max_range
/// are reported in world order. With a noise engine, each detection may be dropped
/// (Bernoulli miss) and its box shifted by uniform jitter.
std::vector<Detection> render_detections(const World& world, std::mt19937_64* noise_rng = nullptr);

nlohmann::json to_json(const Vec2& v);
nlohmann::json to_json(const Twist& t);
nlohmann::json to_json(const Person& p);
nlohmann::json to_json(const RobotBody& r);
nlohmann::json to_json(const CameraModel& c);
nlohmann::json to_json(const BBox& b);
nlohmann::json to_json(const Detection& d);
nlohmann::json to_json(const World& w);

Vec2 vec2_from_json(const nlohmann::json& j);
Twist twist_from_json(const nlohmann::json& j);
Person person_from_json(const nlohmann::json& j);
BBox bbox_from_json(const nlohmann::json& j);
Detection detection_from_json(const nlohmann::json& j);

/// World description document. Unknown keys are ignored so that the robot block
/// can also carry driver-level fields (kind, op_state, connectivity).
///   {"robot": {"position": [x, y], "heading", "altitude", "battery"},
///    "camera": {"fov", "image_width", "image_height", "max_range"},
///    "noise": {"miss_probability", "jitter_px"},
///    "persons": [{"id", "position", "velocity", "attributes"}]}
World world_from_json(const nlohmann::json& doc);

}  // namespace btp::world
