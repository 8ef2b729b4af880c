#include "btpilot/drivers/driver.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace btp::drivers {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view text, const std::array<E, N>& values, const char* what) {
    for (E v : values) {
        if (to_string(v) == text) {
            return v;
        }
    }
    throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(text) + "'");
}

}  // namespace

std::string_view to_string(RobotKind k) { return k == RobotKind::Drone ? "drone" : "legged"; }

std::string_view to_string(FailureMode m) {
    switch (m) {
        case FailureMode::LowBattery: return "low_battery";
        case FailureMode::InvalidState: return "invalid_state";
        case FailureMode::Disconnected: return "disconnected";
        case FailureMode::UnsupportedAction: return "unsupported_action";
        case FailureMode::TargetNotFound: return "target_not_found";
        case FailureMode::Busy: return "busy";
        case FailureMode::Timeout: return "timeout";
    }
    return "timeout";
}

std::string_view to_string(OpState s) {
    switch (s) {
        case OpState::Landed: return "landed";
        case OpState::Flying: return "flying";
        case OpState::Sitting: return "sitting";
        case OpState::Standing: return "standing";
    }
    return "landed";
}

std::string_view to_string(Connectivity c) { return c == Connectivity::Connected ? "connected" : "disconnected"; }

std::string_view to_string(FlipDirection d) {
    switch (d) {
        case FlipDirection::Forward: return "forward";
        case FlipDirection::Backward: return "backward";
        case FlipDirection::Left: return "left";
        case FlipDirection::Right: return "right";
    }
    return "forward";
}

std::string_view to_string(Result r) {
    switch (r) {
        case Result::Completed: return "completed";
        case Result::Rejected: return "rejected";
        case Result::InProgress: return "in_progress";
    }
    return "rejected";
}

RobotKind parse_robot_kind(std::string_view t) {
    return parse_enum(t, std::array{RobotKind::Drone, RobotKind::Legged}, "robot kind");
}
FailureMode parse_failure_mode(std::string_view t) {
    return parse_enum(t,
                      std::array{FailureMode::LowBattery, FailureMode::InvalidState, FailureMode::Disconnected,
                                 FailureMode::UnsupportedAction, FailureMode::TargetNotFound, FailureMode::Busy,
                                 FailureMode::Timeout},
                      "failure mode");
}
OpState parse_op_state(std::string_view t) {
    return parse_enum(t, std::array{OpState::Landed, OpState::Flying, OpState::Sitting, OpState::Standing}, "op state");
}
Connectivity parse_connectivity(std::string_view t) {
    return parse_enum(t, std::array{Connectivity::Connected, Connectivity::Disconnected}, "connectivity");
}
FlipDirection parse_flip_direction(std::string_view t) {
    return parse_enum(t, std::array{FlipDirection::Forward, FlipDirection::Backward, FlipDirection::Left, FlipDirection::Right},
                      "flip direction");
}

namespace {

Result parse_result(std::string_view t) {
    return parse_enum(t, std::array{Result::Completed, Result::Rejected, Result::InProgress}, "result");
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool preempts(const Verb& v) { return std::holds_alternative<cmd::Stop>(v) || std::holds_alternative<cmd::Land>(v); }

std::int64_t to_ms(double seconds) { return static_cast<std::int64_t>(std::llround(seconds * 1000.0)); }

}  // namespace

std::string_view verb_name(const Verb& v) {
    return std::visit(overloaded{[](const cmd::TakeOff&) { return std::string_view("take_off"); },
                                 [](const cmd::Land&) { return std::string_view("land"); },
                                 [](const cmd::Flip&) { return std::string_view("flip"); },
                                 [](const cmd::Move&) { return std::string_view("move"); },
                                 [](const cmd::Rotate&) { return std::string_view("rotate"); },
                                 [](const cmd::Stand&) { return std::string_view("stand"); },
                                 [](const cmd::Sit&) { return std::string_view("sit"); },
                                 [](const cmd::Stop&) { return std::string_view("stop"); }},
                      v);
}

// ---------------------------------------------------------------------------

RobotDriver::RobotDriver(world::RobotBody& body, OpState initial) : body_(body), state_(initial) {}

double RobotDriver::max_speed() const { return kind() == RobotKind::Drone ? kDroneMaxSpeed : kLeggedMaxSpeed; }

void RobotDriver::set_state(OpState s) {
    state_ = s;
    refresh_drain();
}

void RobotDriver::set_velocity(const world::Twist& t) {
    world::Twist c = t;
    const double planar = std::hypot(c.vx, c.vy);
    if (planar > max_speed()) {
        const double scale = max_speed() / planar;
        c.vx *= scale;
        c.vy *= scale;
    }
    c.yaw_rate = std::clamp(c.yaw_rate, -kMaxYawRate, kMaxYawRate);
    body_.commanded = c;
}

ExecutionOutcome RobotDriver::execute(const RobotCommand& command, std::int64_t now_ms) {
    if (const auto* mv = std::get_if<cmd::Move>(&command.verb)) {
        if (!std::isfinite(mv->duration_s) || mv->duration_s <= 0.0) {
            throw std::invalid_argument("move duration must be positive");
        }
    }

    ExecutionOutcome out;
    out.started_at = now_ms;
    out.finished_at = now_ms;
    out.ticket = next_ticket_++;

    auto reject = [&](std::vector<FailureMode> modes) {
        out.result = Result::Rejected;
        out.modes = std::move(modes);
        last_error_ = out.modes.front();
        return out;
    };

    if (connectivity_ == Connectivity::Disconnected) {
        return reject({FailureMode::Disconnected});
    }
    if (!supports(command.verb)) {
        return reject({FailureMode::UnsupportedAction});
    }
    if (inflight_ && !preempts(command.verb)) {
        return reject({FailureMode::Busy});
    }

    Plan p = plan(command.verb);
    if (!p.modes.empty()) {
        return reject(std::move(p.modes));
    }

    if (inflight_) {
        // Preempted by Stop/Land: the earlier command ends here.
        ExecutionOutcome done;
        done.result = Result::Completed;
        done.started_at = inflight_->started_at;
        done.finished_at = now_ms;
        done.ticket = inflight_->ticket;
        finished_.push_back({inflight_->ticket, inflight_->verb, done});
        inflight_.reset();
    }

    last_error_.reset();
    if (p.busy_ms > 0) {
        inflight_ = InFlight{out.ticket, std::string(verb_name(command.verb)), now_ms, now_ms + p.busy_ms};
        out.result = Result::InProgress;
    } else {
        out.result = Result::Completed;
    }
    return out;
}

std::vector<Completion> RobotDriver::update(std::int64_t now_ms) {
    if (inflight_ && now_ms >= inflight_->ends_at) {
        set_velocity({});
        ExecutionOutcome done;
        done.result = Result::Completed;
        done.started_at = inflight_->started_at;
        done.finished_at = now_ms;
        done.ticket = inflight_->ticket;
        finished_.push_back({inflight_->ticket, inflight_->verb, done});
        inflight_.reset();
    }
    std::vector<Completion> out;
    out.swap(finished_);
    return out;
}

bool RobotDriver::apply_velocity(const world::Twist& twist) {
    if (connectivity_ == Connectivity::Disconnected || inflight_) {
        return false;
    }
    if (state_ != OpState::Flying && state_ != OpState::Standing) {
        return false;
    }
    set_velocity(twist);
    return true;
}

RobotStatus RobotDriver::status() const {
    RobotStatus s;
    s.kind = kind();
    s.connectivity = connectivity_;
    s.battery = body_.battery;
    s.op_state = state_;
    s.busy = inflight_.has_value();
    s.last_error = last_error_;
    s.position = body_.position;
    s.heading = body_.heading;
    s.altitude = body_.altitude;
    s.velocity = body_.commanded;
    return s;
}

void RobotDriver::set_connectivity(Connectivity c) { connectivity_ = c; }

// ---------------------------------------------------------------------------

SimDrone::SimDrone(world::RobotBody& body, OpState initial) : RobotDriver(body, initial) {
    if (initial != OpState::Landed && initial != OpState::Flying) {
        throw std::invalid_argument("drone op_state must be landed or flying");
    }
    if (initial == OpState::Landed) {
        body_.altitude = 0.0;
        body_.commanded = {};
    } else if (body_.altitude <= 0.0) {
        body_.altitude = kTakeOffAltitude;
    }
    refresh_drain();
}

void SimDrone::refresh_drain() {
    body_.drain_rate = state_ == OpState::Flying ? world::drain::kDroneFlying : world::drain::kDroneLanded;
}

bool SimDrone::supports(const Verb& verb) const {
    return !std::holds_alternative<cmd::Stand>(verb) && !std::holds_alternative<cmd::Sit>(verb);
}

RobotDriver::Plan SimDrone::plan(const Verb& verb) {
    const bool flying = state_ == OpState::Flying;
    const bool low = body_.battery < kBatteryThreshold;
    Plan p;
    std::visit(overloaded{
                   [&](const cmd::TakeOff&) {
                       if (low) p.modes.push_back(FailureMode::LowBattery);
                       if (flying) p.modes.push_back(FailureMode::InvalidState);
                       if (p.modes.empty()) {
                           set_state(OpState::Flying);
                           body_.altitude = kTakeOffAltitude;
                       }
                   },
                   [&](const cmd::Land&) {
                       if (!flying) {
                           p.modes.push_back(FailureMode::InvalidState);
                           return;
                       }
                       set_velocity({});
                       set_state(OpState::Landed);
                       body_.altitude = 0.0;
                   },
                   [&](const cmd::Flip&) {
                       if (low) p.modes.push_back(FailureMode::LowBattery);
                       if (!flying) p.modes.push_back(FailureMode::InvalidState);
                       if (p.modes.empty()) {
                           body_.battery = std::max(0.0, body_.battery - kFlipBatteryCost);
                           p.busy_ms = kFlipBusyMs;
                       }
                   },
                   [&](const cmd::Move& m) {
                       if (!flying) {
                           p.modes.push_back(FailureMode::InvalidState);
                           return;
                       }
                       set_velocity({m.vx, m.vy, m.yaw_rate});
                       p.busy_ms = to_ms(m.duration_s);
                   },
                   [&](const cmd::Rotate& r) {
                       if (!flying) {
                           p.modes.push_back(FailureMode::InvalidState);
                           return;
                       }
                       p.busy_ms = to_ms(std::abs(r.angle) / kRotateRate);
                       if (p.busy_ms > 0) set_velocity({0, 0, r.angle > 0 ? kRotateRate : -kRotateRate});
                   },
                   [&](const cmd::Stand&) {}, [&](const cmd::Sit&) {},
                   [&](const cmd::Stop&) { set_velocity({}); },
               },
               verb);
    return p;
}

SimLegged::SimLegged(world::RobotBody& body, OpState initial) : RobotDriver(body, initial) {
    if (initial != OpState::Sitting && initial != OpState::Standing) {
        throw std::invalid_argument("legged op_state must be sitting or standing");
    }
    body_.altitude = 0.0;
    if (initial == OpState::Sitting) body_.commanded = {};
    refresh_drain();
}

void SimLegged::refresh_drain() { body_.drain_rate = world::drain::kLegged; }

bool SimLegged::supports(const Verb& verb) const {
    return !std::holds_alternative<cmd::TakeOff>(verb) && !std::holds_alternative<cmd::Land>(verb) &&
           !std::holds_alternative<cmd::Flip>(verb);
}

RobotDriver::Plan SimLegged::plan(const Verb& verb) {
    const bool standing = state_ == OpState::Standing;
    Plan p;
    std::visit(overloaded{
                   [&](const cmd::Stand&) {
                       if (standing) {
                           p.modes.push_back(FailureMode::InvalidState);
                           return;
                       }
                       set_state(OpState::Standing);
                   },
                   [&](const cmd::Sit&) {
                       if (!standing) {
                           p.modes.push_back(FailureMode::InvalidState);
                           return;
                       }
                       set_velocity({});
                       set_state(OpState::Sitting);
                   },
                   [&](const cmd::Move& m) {
                       if (!standing) {
                           p.modes.push_back(FailureMode::InvalidState);
                           return;
                       }
                       set_velocity({m.vx, m.vy, m.yaw_rate});
                       p.busy_ms = to_ms(m.duration_s);
                   },
                   [&](const cmd::Rotate& r) {
                       if (!standing) {
                           p.modes.push_back(FailureMode::InvalidState);
                           return;
                       }
                       p.busy_ms = to_ms(std::abs(r.angle) / kRotateRate);
                       if (p.busy_ms > 0) set_velocity({0, 0, r.angle > 0 ? kRotateRate : -kRotateRate});
                   },
                   [&](const cmd::Stop&) { set_velocity({}); },
                   [&](const auto&) {},
               },
               verb);
    return p;
}

std::unique_ptr<RobotDriver> make_sim_driver(RobotKind kind, world::RobotBody& body, std::optional<OpState> initial) {
    if (kind == RobotKind::Drone) {
        return std::make_unique<SimDrone>(body, initial.value_or(OpState::Landed));
    }
    return std::make_unique<SimLegged>(body, initial.value_or(OpState::Standing));
}

// ---------------------------------------------------------------------------

DuplicateRegistration::DuplicateRegistration(RobotKind k)
    : std::runtime_error("a driver for '" + std::string(to_string(k)) + "' is already registered") {}

UnknownRobot::UnknownRobot(RobotKind k)
    : std::runtime_error("no driver registered for '" + std::string(to_string(k)) + "'") {}

void DriverRegistry::register_driver(std::unique_ptr<RobotDriver> driver) {
    if (!driver) {
        throw std::invalid_argument("null driver");
    }
    RobotKind k = driver->kind();
    if (drivers_.count(k)) {
        throw DuplicateRegistration(k);
    }
    drivers_.emplace(k, std::move(driver));
}

RobotDriver& DriverRegistry::resolve(RobotKind kind) const {
    auto it = drivers_.find(kind);
    if (it == drivers_.end()) {
        throw UnknownRobot(kind);
    }
    return *it->second;
}

ExecutionOutcome DriverRegistry::interface(RobotKind robot, const RobotCommand& command, std::int64_t now_ms,
                                           std::string_view source) {
    RobotDriver& d = resolve(robot);
    ExecutionOutcome out = d.execute(command, now_ms);
    log_.push_back({robot, d.kind(), std::string(d.name()), std::string(verb_name(command.verb)), out, now_ms,
                    std::string(source)});
    return out;
}

std::vector<Invocation> DriverRegistry::take_invocations() {
    std::vector<Invocation> out;
    out.swap(log_);
    return out;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const RobotCommand& c) {
    nlohmann::json j{{"verb", verb_name(c.verb)}, {"issued_at", c.issued_at}};
    std::visit(overloaded{[&](const cmd::Flip& f) { j["direction"] = to_string(f.direction); },
                          [&](const cmd::Move& m) {
                              j["vx"] = m.vx;
                              j["vy"] = m.vy;
                              j["yaw_rate"] = m.yaw_rate;
                              j["duration"] = m.duration_s;
                          },
                          [&](const cmd::Rotate& r) { j["angle"] = r.angle; }, [](const auto&) {}},
               c.verb);
    return j;
}

RobotCommand command_from_json(const nlohmann::json& j) {
    RobotCommand c;
    c.issued_at = j.value("issued_at", std::int64_t{0});
    const std::string verb = j.at("verb").get<std::string>();
    if (verb == "take_off") c.verb = cmd::TakeOff{};
    else if (verb == "land") c.verb = cmd::Land{};
    else if (verb == "flip") c.verb = cmd::Flip{parse_flip_direction(j.value("direction", std::string("forward")))};
    else if (verb == "move")
        c.verb = cmd::Move{j.value("vx", 0.0), j.value("vy", 0.0), j.value("yaw_rate", 0.0), j.value("duration", 1.0)};
    else if (verb == "rotate") c.verb = cmd::Rotate{j.value("angle", 0.0)};
    else if (verb == "stand") c.verb = cmd::Stand{};
    else if (verb == "sit") c.verb = cmd::Sit{};
    else if (verb == "stop") c.verb = cmd::Stop{};
    else throw std::invalid_argument("unknown verb '" + verb + "'");
    return c;
}

nlohmann::json to_json(const ExecutionOutcome& o) {
    nlohmann::json modes = nlohmann::json::array();
    for (auto m : o.modes) modes.push_back(to_string(m));
    return {{"result", to_string(o.result)},
            {"modes", std::move(modes)},
            {"started_at", o.started_at},
            {"finished_at", o.finished_at},
            {"ticket", o.ticket}};
}

ExecutionOutcome outcome_from_json(const nlohmann::json& j) {
    ExecutionOutcome o;
    o.result = parse_result(j.at("result").get<std::string>());
    for (const auto& m : j.at("modes")) o.modes.push_back(parse_failure_mode(m.get<std::string>()));
    o.started_at = j.at("started_at").get<std::int64_t>();
    o.finished_at = j.at("finished_at").get<std::int64_t>();
    o.ticket = j.value("ticket", std::uint64_t{0});
    return o;
}

nlohmann::json to_json(const RobotStatus& s) {
    nlohmann::json j{{"kind", to_string(s.kind)},
                     {"connectivity", to_string(s.connectivity)},
                     {"battery", s.battery},
                     {"op_state", to_string(s.op_state)},
                     {"busy", s.busy},
                     {"last_error", nullptr},
                     {"position", world::to_json(s.position)},
                     {"heading", s.heading},
                     {"altitude", s.altitude},
                     {"velocity", world::to_json(s.velocity)}};
    if (s.last_error) j["last_error"] = to_string(*s.last_error);
    return j;
}

nlohmann::json to_json(const Invocation& inv) {
    return {{"requested", to_string(inv.requested)},
            {"driver_kind", to_string(inv.driver_kind)},
            {"driver", inv.driver_name},
            {"verb", inv.verb},
            {"outcome", to_json(inv.outcome)},
            {"t_ms", inv.t_ms},
            {"source", inv.source}};
}

Invocation invocation_from_json(const nlohmann::json& j) {
    Invocation inv;
    inv.requested = parse_robot_kind(j.at("requested").get<std::string>());
    inv.driver_kind = parse_robot_kind(j.at("driver_kind").get<std::string>());
    inv.driver_name = j.at("driver").get<std::string>();
    inv.verb = j.at("verb").get<std::string>();
    inv.outcome = outcome_from_json(j.at("outcome"));
    inv.t_ms = j.at("t_ms").get<std::int64_t>();
    inv.source = j.at("source").get<std::string>();
    return inv;
}

nlohmann::json to_json(const Completion& c) {
    return {{"ticket", c.ticket}, {"verb", c.verb}, {"outcome", to_json(c.outcome)}};
}

Completion completion_from_json(const nlohmann::json& j) {
    return {j.at("ticket").get<std::uint64_t>(), j.at("verb").get<std::string>(), outcome_from_json(j.at("outcome"))};
}

}  // namespace btp::drivers
