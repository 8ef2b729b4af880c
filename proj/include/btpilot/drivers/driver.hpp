#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "btpilot/world/world.hpp"

namespace btp::drivers {

enum class RobotKind : std::uint8_t { Drone, Legged };
enum class FailureMode : std::uint8_t { LowBattery, InvalidState, Disconnected, UnsupportedAction, TargetNotFound, Busy, Timeout };
enum class OpState : std::uint8_t { Landed, Flying, Sitting, Standing };
enum class Connectivity : std::uint8_t { Connected, Disconnected };
enum class FlipDirection : std::uint8_t { Forward, Backward, Left, Right };

std::string_view to_string(RobotKind k);
std::string_view to_string(FailureMode m);
std::string_view to_string(OpState s);
std::string_view to_string(Connectivity c);
std::string_view to_string(FlipDirection d);

/// Parsers accept the lowercase wire names ("drone", "low_battery", "flying", ...).
RobotKind parse_robot_kind(std::string_view text);
FailureMode parse_failure_mode(std::string_view text);
OpState parse_op_state(std::string_view text);
Connectivity parse_connectivity(std::string_view text);
FlipDirection parse_flip_direction(std::string_view text);

/// Battery level below which TakeOff and Flip are refused.
inline constexpr double kBatteryThreshold = 20.0;
inline constexpr double kDroneMaxSpeed = 2.0;
inline constexpr double kLeggedMaxSpeed = 1.0;
inline constexpr double kMaxYawRate = 1.0;
inline constexpr double kRotateRate = 0.5;
inline constexpr double kDefaultSpeed = 0.5;
inline constexpr double kTakeOffAltitude = 1.0;
inline constexpr double kFlipBatteryCost = 1.0;
inline constexpr std::int64_t kFlipBusyMs = 600;

namespace cmd {
struct TakeOff {};
struct Land {};
struct Flip {
    FlipDirection direction = FlipDirection::Forward;
};
struct Move {
    double vx = 0.0;
    double vy = 0.0;
    double yaw_rate = 0.0;
    double duration_s = 1.0;
};
struct Rotate {
    double angle = 0.0;  // radians, positive = counter-clockwise (left)
};
struct Stand {};
struct Sit {};
struct Stop {};
}  // namespace cmd

using Verb = std::variant<cmd::TakeOff, cmd::Land, cmd::Flip, cmd::Move, cmd::Rotate, cmd::Stand, cmd::Sit, cmd::Stop>;

struct RobotCommand {
    Verb verb;
    std::int64_t issued_at = 0;
};

/// "take_off", "land", "flip", "move", "rotate", "stand", "sit", "stop".
std::string_view verb_name(const Verb& v);

enum class Result : std::uint8_t { Completed, Rejected, InProgress };
std::string_view to_string(Result r);

struct ExecutionOutcome {
    Result result = Result::Completed;
    std::vector<FailureMode> modes;  // non-empty iff Rejected
    std::int64_t started_at = 0;
    std::int64_t finished_at = 0;  // equals started_at while InProgress
    std::uint64_t ticket = 0;      // identifies the command for later completion

    friend bool operator==(const ExecutionOutcome&, const ExecutionOutcome&) = default;
};

struct RobotStatus {
    RobotKind kind = RobotKind::Drone;
    Connectivity connectivity = Connectivity::Connected;
    double battery = 100.0;
    OpState op_state = OpState::Landed;
    bool busy = false;
    std::optional<FailureMode> last_error;
    world::Vec2 position;
    double heading = 0.0;
    double altitude = 0.0;
    world::Twist velocity;

    friend bool operator==(const RobotStatus&, const RobotStatus&) = default;
};

/// A command that finished (or was preempted) after having been InProgress.
struct Completion {
    std::uint64_t ticket = 0;
    std::string verb;
    ExecutionOutcome outcome;
};

/// Simulated robot driver. Commands and velocity setpoints act on a RobotBody
/// owned by the caller's World; the driver must not outlive it.
class RobotDriver {
public:
    RobotDriver(world::RobotBody& body, OpState initial);
    virtual ~RobotDriver() = default;
    RobotDriver(const RobotDriver&) = delete;
    RobotDriver& operator=(const RobotDriver&) = delete;

    virtual RobotKind kind() const = 0;
    virtual std::string_view name() const = 0;

    /// Runs the driver state machine. Throws std::invalid_argument for a Move
    /// with non-positive or non-finite duration.
    ExecutionOutcome execute(const RobotCommand& command, std::int64_t now_ms);

    /// Finishes in-flight commands whose time is up; returns those completed.
    std::vector<Completion> update(std::int64_t now_ms);

    /// Continuous velocity setpoint from a plugin. Ignored (returns false) while
    /// disconnected, busy, or in a state that does not allow motion.
    bool apply_velocity(const world::Twist& twist);

    RobotStatus status() const;
    void set_connectivity(Connectivity c);
    OpState op_state() const { return state_; }
    bool busy() const { return inflight_.has_value(); }
    double max_speed() const;

protected:
    struct Plan {
        std::vector<FailureMode> modes;  // empty = accepted
        std::int64_t busy_ms = 0;        // 0 = completes immediately
    };
    virtual bool supports(const Verb& verb) const = 0;
    /// Kind-specific precondition check and effect. Only called for supported
    /// verbs while connected and not busy (or for preempting verbs).
    virtual Plan plan(const Verb& verb) = 0;
    virtual void refresh_drain() = 0;

    void set_state(OpState s);
    void set_velocity(const world::Twist& t);

    world::RobotBody& body_;
    OpState state_;

private:
    struct InFlight {
        std::uint64_t ticket;
        std::string verb;
        std::int64_t started_at;
        std::int64_t ends_at;
    };

    Connectivity connectivity_ = Connectivity::Connected;
    std::optional<FailureMode> last_error_;
    std::optional<InFlight> inflight_;
    std::vector<Completion> finished_;
    std::uint64_t next_ticket_ = 1;
};

class SimDrone final : public RobotDriver {
public:
    explicit SimDrone(world::RobotBody& body, OpState initial = OpState::Landed);
    RobotKind kind() const override { return RobotKind::Drone; }
    std::string_view name() const override { return "sim_drone"; }

protected:
    bool supports(const Verb& verb) const override;
    Plan plan(const Verb& verb) override;
    void refresh_drain() override;
};

class SimLegged final : public RobotDriver {
public:
    explicit SimLegged(world::RobotBody& body, OpState initial = OpState::Standing);
    RobotKind kind() const override { return RobotKind::Legged; }
    std::string_view name() const override { return "sim_legged"; }

protected:
    bool supports(const Verb& verb) const override;
    Plan plan(const Verb& verb) override;
    void refresh_drain() override;
};

std::unique_ptr<RobotDriver> make_sim_driver(RobotKind kind, world::RobotBody& body, std::optional<OpState> initial = {});

class DuplicateRegistration : public std::runtime_error {
public:
    explicit DuplicateRegistration(RobotKind k);
};

class UnknownRobot : public std::runtime_error {
public:
    explicit UnknownRobot(RobotKind k);
};

/// One call of the interface function, as recorded for routing checks.
struct Invocation {
    RobotKind requested;
    RobotKind driver_kind;
    std::string driver_name;
    std::string verb;
    ExecutionOutcome outcome;
    std::int64_t t_ms = 0;
    std::string source;  // "intent", "hand_gesture", "safety", ...

    friend bool operator==(const Invocation&, const Invocation&) = default;
};

/// The robot-to-driver mapping D and the interface function I(r, c) = D(r)(c).
class DriverRegistry {
public:
    void register_driver(std::unique_ptr<RobotDriver> driver);
    RobotDriver& resolve(RobotKind kind) const;
    bool contains(RobotKind kind) const { return drivers_.count(kind) > 0; }

    ExecutionOutcome interface(RobotKind robot, const RobotCommand& command, std::int64_t now_ms,
                               std::string_view source = "intent");

    const std::vector<Invocation>& invocations() const { return log_; }
    /// Moves recorded invocations out, leaving the log empty.
    std::vector<Invocation> take_invocations();

private:
    std::map<RobotKind, std::unique_ptr<RobotDriver>> drivers_;
    std::vector<Invocation> log_;
};

nlohmann::json to_json(const RobotCommand& c);
RobotCommand command_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExecutionOutcome& o);
ExecutionOutcome outcome_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RobotStatus& s);
nlohmann::json to_json(const Invocation& inv);
Invocation invocation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Completion& c);
Completion completion_from_json(const nlohmann::json& j);

}  // namespace btp::drivers
