#include "btpilot/runtime/runtime.hpp"

#include <algorithm>
#include <chrono>

namespace btp::runtime {

namespace {

std::int64_t count_ticks(const ExecutionLog& log) { return static_cast<std::int64_t>(log.tick_count()); }

bool is_open_tracking(const CommandEnvelope& e) { return e.pathway == "plugin:person_tracking" && !e.done(); }

}  // namespace

Runtime::Runtime(RuntimeConfig config)
    : config_(std::move(config)),
      world_(config_.world),
      plugin_env_{bus_, drivers_, config_.robot, config_.world.camera},
      plugins_(plugin_env_),
      noise_rng_(config_.seed) {
    if (config_.tick_ms <= 0) throw std::invalid_argument("tick_ms must be positive");
    if (config_.queue_capacity == 0) throw std::invalid_argument("queue capacity must be positive");

    drivers_.register_driver(drivers::make_sim_driver(config_.robot, world_.robot, config_.initial_state));
    driver().set_connectivity(config_.connectivity);

    plugins_.add_defaults(config_.track);
    if (config_.backend == intent::Backend::Llm) {
        transport_ = config_.llm_transport;
        if (!transport_) {
            if (!config_.llm_fixtures.empty()) {
                transport_ = std::make_shared<intent::FixtureTransport>(config_.llm_fixtures);
            } else {
                transport_ = intent::HttpTransport::from_env();
            }
        }
        interpreter_ = std::make_unique<intent::LlmInterpreter>(transport_, config_.llm_model);
        auto transport = transport_;
        auto model = config_.llm_model;
        plugins_.tracking()->set_selector([transport, model](const std::vector<world::Detection>& dets, const std::string& d) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& x : dets) arr.push_back(world::to_json(x));
            return intent::llm_select_person(*transport, model, arr, d);
        });
    } else {
        interpreter_ = std::make_unique<intent::ReferenceInterpreter>();
    }

    build_registry();
    tree_ = bt::build_tree(config_.tree.nodes.empty() ? reference_tree() : config_.tree, registry_);

    bb_.write(bt::kActivePlugin, config_.active_plugin);
    bb_.write(bt::kTrackDescriptor, std::string());
    plugins_.sync(bb_, 0);

    record({{"type", "header"}, {"v", 1}, {"config", to_json(config_)}});
    bus_.set_clock(0, 0);
    publish_telemetry();
    flush_bus();
    refresh_snapshot();
}

Runtime::~Runtime() {
    for (auto& i : interpreting_) {
        if (i.future.valid()) i.future.wait();
    }
}

void Runtime::build_registry() {
    registry_.add_predicate("connected", [this](const bt::TickContext&, std::string_view) {
        return driver().status().connectivity == Connectivity::Connected;
    });
    registry_.add_predicate("battery_at_least", [this](const bt::TickContext&, std::string_view arg) {
        const double min = arg.empty() ? drivers::kBatteryThreshold : std::stod(std::string(arg));
        return driver().status().battery >= min;
    });
    registry_.add_predicate("active_plugin_is", [](const bt::TickContext& ctx, std::string_view arg) {
        return ctx.blackboard.get_string(bt::kActivePlugin, bt::kNoPlugin) == arg;
    });
    registry_.add_predicate("state_is", [this](const bt::TickContext&, std::string_view arg) {
        return driver().op_state() == drivers::parse_op_state(arg);
    });
    registry_.add_predicate("robot_is", [this](const bt::TickContext&, std::string_view arg) {
        return config_.robot == drivers::parse_robot_kind(arg);
    });
    registry_.add_action("safe_land_or_stop", [this](bt::TickContext& ctx, std::string_view) {
        const auto st = driver().status();
        if (st.connectivity == Connectivity::Disconnected) return bt::NodeStatus::Failure;
        if (st.battery < drivers::kBatteryThreshold && st.op_state == OpState::Flying) {
            drivers::RobotCommand land{drivers::cmd::Land{}, ctx.now_ms};
            drivers_.interface(config_.robot, land, ctx.now_ms, "safety");
        }
        return bt::NodeStatus::Success;
    });
    plugins_.register_nodes(registry_);
}

// ---------------------------------------------------------------- submission

std::string Runtime::submit_command(const std::string& text) {
    std::string t = intent::trim(text);
    if (t.empty()) throw EmptyCommand();
    std::lock_guard lock(queue_mu_);
    if (commands_.size() >= config_.queue_capacity) throw QueueFull(config_.queue_capacity);
    std::string id = "c" + std::to_string(next_command_++);
    commands_.push_back({id, std::move(t)});
    return id;
}

void Runtime::inject_gesture(const std::string& gesture) {
    try {
        plugins::parse_gesture(gesture);
    } catch (const std::invalid_argument& e) {
        throw InvalidInput(e.what());
    }
    std::lock_guard lock(queue_mu_);
    if (inputs_.size() >= config_.queue_capacity) throw QueueFull(config_.queue_capacity);
    inputs_.push_back({std::string(bus::topics::kGestures), {{"gesture", gesture}}});
}

void Runtime::inject_key(const std::string& key) {
    world::Twist probe;
    if (!plugins::apply_key(key, probe)) throw InvalidInput("unknown key '" + key + "'");
    std::lock_guard lock(queue_mu_);
    if (inputs_.size() >= config_.queue_capacity) throw QueueFull(config_.queue_capacity);
    inputs_.push_back({std::string(bus::topics::kKeys), {{"key", key}}});
}

// ---------------------------------------------------------------- tick

bt::TickTrace Runtime::tick() {
    if (finished_) throw std::logic_error("runtime already finished");
    const std::int64_t now = tick_index_ * config_.tick_ms;
    const std::int64_t k = ++tick_index_;
    bus_.set_clock(k, now);

    const auto before = driver().status();
    const std::string plugin_before = plugins_.active();

    // (1) completions, inputs, commands, decisions
    handle_completions(now);
    std::deque<Input> inputs;
    {
        std::lock_guard lock(queue_mu_);
        inputs.swap(inputs_);
    }
    for (auto& in : inputs) {
        record({{"type", "input"}, {"tick", k - 1}, {"t_ms", now}, {"topic", in.topic}, {"payload", in.payload}});
        bus_.publish(in.topic, "gateway", in.payload);
    }
    start_interpretations(now);
    apply_ready(now);
    plugins_.sync(bb_, now);
    flush_bus();

    // (2) tree
    const auto seq_before = bus_.published();
    bt::TickContext ctx{bb_, registry_, k, now};
    bt::TickTrace trace = bt::tick(tree_, ctx);
    after_tree(now);
    plugins_.sync(bb_, now);

    // (3) velocity topic
    std::optional<plugins::VelocityCommand> vel;
    for (const auto& m : bus_.history(bus::topics::kCmdVel)) {
        if (m.seq > seq_before) vel = plugins::velocity_from_json(m.payload);
    }
    if (vel) driver().apply_velocity(vel->twist());
    flush_bus();

    // (4) world
    world::step(world_, static_cast<double>(config_.tick_ms) / 1000.0);

    // (5) telemetry
    bus_.set_clock(k, now + config_.tick_ms);
    publish_telemetry();
    bus_.publish(bus::topics::kTrace, "bt", {{"tick", k}, {"root_status", bt::to_string(trace.root_status)}});
    flush_bus();
    record({{"type", "tick"}, {"tick", k}, {"t_ms", now}, {"trace", bt::to_json(trace)}});
    last_trace_ = trace;

    const auto after = driver().status();
    if (after.op_state != before.op_state || after.connectivity != before.connectivity || plugins_.active() != plugin_before) {
        emit("status_change", {{"tick_index", k},
                               {"op_state", drivers::to_string(after.op_state)},
                               {"connectivity", drivers::to_string(after.connectivity)},
                               {"active_plugin", plugins_.active()},
                               {"battery", after.battery}});
    }
    refresh_snapshot();
    emit("tick", {{"tick_index", k}, {"t_ms", now}, {"trace", bt::to_json(trace)}});
    return trace;
}

bt::TickTrace Runtime::run_ticks(std::int64_t n) {
    if (n < 1) throw std::invalid_argument("run_ticks needs n >= 1");
    bt::TickTrace t;
    for (std::int64_t i = 0; i < n; ++i) t = tick();
    return t;
}

bt::TickTrace Runtime::run_until(const std::function<bool(const Runtime&)>& pred, std::int64_t max_ticks) {
    for (std::int64_t i = 0; i < max_ticks; ++i) {
        auto t = tick();
        if (pred(*this)) return t;
    }
    throw MaxTicksExceeded(max_ticks);
}

bool Runtime::idle() const {
    {
        std::lock_guard lock(queue_mu_);
        if (!commands_.empty() || !inputs_.empty()) return false;
    }
    if (!interpreting_.empty()) return false;
    return std::all_of(envelopes_.begin(), envelopes_.end(), [](const auto& kv) { return kv.second.done(); });
}

// ---------------------------------------------------------------- pipeline

intent::InterpretedCommand Runtime::run_interpreter(const std::string& text, const intent::RuntimeContext& ctx) {
    try {
        return intent::interpret(text, ctx, *interpreter_);
    } catch (const std::exception& e) {
        return {text, intent::Refusal{drivers::FailureMode::UnsupportedAction, std::string(intent::kCannotPerform), e.what()},
                interpreter_->backend(), {}};
    }
}

void Runtime::start_interpretations(std::int64_t now) {
    for (;;) {
        Pending p;
        {
            std::lock_guard lock(queue_mu_);
            if (commands_.empty()) break;
            p = std::move(commands_.front());
            commands_.pop_front();
        }
        CommandEnvelope env;
        env.id = p.id;
        env.text = p.text;
        env.submitted_at = now;
        env.submitted_tick = tick_index_ - 1;
        env.cog = StageMark{now, now};
        record({{"type", "submit"}, {"tick", tick_index_ - 1}, {"t_ms", now}, {"id", p.id}, {"text", p.text}});
        envelopes_.emplace(p.id, env);
        order_.push_back(p.id);

        Interpreting job;
        job.id = p.id;
        job.ctx = context();
        if (config_.realtime) {
            job.future = std::async(std::launch::async, [this, text = p.text, ctx = job.ctx]() {
                const auto t0 = std::chrono::steady_clock::now();
                auto cmd = run_interpreter(text, ctx);
                const auto ms =
                    std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
                return std::make_pair(std::move(cmd), static_cast<std::int64_t>(ms));
            });
        } else {
            job.result = run_interpreter(p.text, job.ctx);
            job.ready_at = now + config_.cog_cost_ms;
        }
        interpreting_.push_back(std::move(job));
        // Commands drained in the same tick see the effects of earlier ones.
        if (!config_.realtime) apply_ready(now);
    }
}

void Runtime::apply_ready(std::int64_t now) {
    for (auto it = interpreting_.begin(); it != interpreting_.end();) {
        CommandEnvelope& env = env_ref(it->id);
        if (it->future.valid()) {
            if (it->future.wait_for(std::chrono::seconds(0)) != std::future_status::ready) {
                ++it;
                continue;
            }
            auto [cmd, ms] = it->future.get();
            it->result = std::move(cmd);
            env.cog->end = env.cog->start + ms;
        } else {
            if (it->ready_at > now) {
                ++it;
                continue;
            }
            env.cog->end = it->ready_at;
        }
        env.interpreted = *it->result;
        record({{"type", "interpreted"}, {"tick", tick_index_}, {"t_ms", now}, {"id", env.id}, {"command", intent::to_json(*env.interpreted)}});
        auto ctx = std::move(it->ctx);
        it = interpreting_.erase(it);
        apply_decision(env, ctx, now);
    }
}

void Runtime::apply_decision(CommandEnvelope& env, const intent::RuntimeContext& ctx, std::int64_t now) {
    const intent::InterpretedCommand& cmd = *env.interpreted;
    const std::int64_t cog_end = env.cog->end;

    if (const auto* r = cmd.refusal()) {
        env.pathway = "none";
        env.failure_modes = {r->reason};
        reply(env, "response", r->text, cog_end);
        close(env, Terminal::Refused, cog_end);
        return;
    }

    intent::DispatchDecision d;
    try {
        d = intent::select_behavior(cmd, ctx);
    } catch (const std::exception& e) {
        env.pathway = "none";
        env.failure_modes = {drivers::FailureMode::UnsupportedAction};
        reply(env, "response", std::string(intent::kCannotPerform), cog_end);
        close(env, Terminal::Refused, cog_end);
        return;
    }
    env.pathway = d.pathway();
    record({{"type", "decision"}, {"tick", tick_index_}, {"t_ms", now}, {"id", env.id}, {"decision", intent::to_json(d)}});
    const std::int64_t at = std::max(now, cog_end);
    env.disp = StageMark{cog_end, at};

    if (const auto* noop = std::get_if<intent::NoOp>(&d.target)) {
        if (noop->report) {
            env.failure_modes = noop->report->modes;
            reply(env, "explanation", intent::explain_failure(*noop->report).text, at);
        } else {
            env.failure_modes = {drivers::FailureMode::UnsupportedAction};
            reply(env, "response", std::string(intent::kCannotPerform), at);
        }
        close(env, Terminal::Refused, at);
        return;
    }
    if (const auto* sq = std::get_if<intent::StatusQuery>(&d.target)) {
        std::string text = sq->text;
        if (cmd.backend == intent::Backend::Llm && !cmd.say.empty()) text = cmd.say;
        reply(env, "response", text, at);
        close(env, Terminal::Completed, at);
        return;
    }
    if (const auto* pa = std::get_if<intent::PluginActivation>(&d.target)) {
        driver().apply_velocity({});
        if (tracking_command_ && *tracking_command_ != env.id) {
            CommandEnvelope& old = env_ref(*tracking_command_);
            if (tracking_acquired_) {
                old.exec->end = at;
                close(old, Terminal::Completed, at);
            } else {
                old.disp->end = at;
                old.failure_modes = {drivers::FailureMode::TargetNotFound};
                close(old, Terminal::Failed, at);
            }
            tracking_command_.reset();
        }
        if (!pa->descriptor.empty()) bb_.write(bt::kTrackDescriptor, pa->descriptor);
        bb_.write(bt::kActivePlugin, pa->plugin_id);
        // Re-activate even when tracking was already selected so the new descriptor applies.
        if (plugins::Plugin* p = plugins_.find(pa->plugin_id); p && p->active()) p->activate(bb_, at);
        plugins_.sync(bb_, at);
        if (pa->plugin_id == plugins::PersonTracking::kId && !pa->descriptor.empty()) {
            tracking_command_ = env.id;
            tracking_acquired_ = false;
            return;  // disp closes when the target is first acquired
        }
        reply(env, "response", plugin_ack(pa->plugin_id), at);
        close(env, Terminal::Completed, at);
        return;
    }
    const auto& dc = std::get<intent::DriverCommand>(d.target);
    drivers::RobotCommand rc = dc.command;
    rc.issued_at = at;
    drivers::ExecutionOutcome out;
    try {
        out = drivers_.interface(dc.robot, rc, at, "intent");
    } catch (const std::exception& e) {
        env.exec = StageMark{at, at};
        env.failure_modes = {drivers::FailureMode::UnsupportedAction};
        reply(env, "explanation", std::string(intent::kCannotPerform), at);
        close(env, Terminal::Failed, at);
        return;
    }
    env.exec = StageMark{at, at};
    switch (out.result) {
        case drivers::Result::Completed:
            reply(env, "response", driver_ack(drivers::verb_name(rc.verb), config_.robot), at);
            close(env, Terminal::Completed, at);
            break;
        case drivers::Result::InProgress:
            tickets_[out.ticket] = env.id;
            break;
        case drivers::Result::Rejected: {
            env.failure_modes = out.modes;
            intent::FailureReport rep{out.modes, intent::FailureSource::Driver, context(), {}};
            reply(env, "explanation", intent::explain_failure(rep).text, at);
            close(env, Terminal::Failed, at);
            break;
        }
    }
}

void Runtime::handle_completions(std::int64_t now) {
    for (const auto& c : driver().update(now)) {
        auto it = tickets_.find(c.ticket);
        if (it == tickets_.end()) continue;
        CommandEnvelope& env = env_ref(it->second);
        tickets_.erase(it);
        if (env.done()) continue;
        const std::int64_t end = std::max(env.exec->start, c.outcome.finished_at);
        env.exec->end = end;
        reply(env, "response", driver_ack(c.verb, config_.robot), end);
        close(env, Terminal::Completed, end);
    }
}

void Runtime::after_tree(std::int64_t now) {
    const std::int64_t k = tick_index_;
    const auto failures = bus_.history(bus::topics::kPluginFailures);
    bool failed = false;
    for (const auto& m : failures) {
        if (m.tick == k && m.payload.value("plugin", std::string()) == plugins::PersonTracking::kId) failed = true;
    }
    if (!tracking_command_) return;
    CommandEnvelope& env = env_ref(*tracking_command_);
    auto* tracker = plugins_.tracking();
    if (!failed && !tracking_acquired_ && tracker->target() && tracker->target()->last_seen_tick == k) {
        tracking_acquired_ = true;
        env.disp->end = now;
        env.exec = StageMark{now, now};
        reply(env, "response", tracking_ack(bb_.get_string(bt::kTrackDescriptor)), now);
    }
    if (failed) {
        intent::FailureReport rep{{drivers::FailureMode::TargetNotFound}, intent::FailureSource::Plugin, context(),
                                  bb_.get_string(bt::kTrackDescriptor)};
        env.failure_modes = rep.modes;
        if (tracking_acquired_) env.exec->end = now;
        else env.disp->end = now;
        reply(env, "explanation", intent::explain_failure(rep).text, now);
        close(env, Terminal::Failed, now);
        tracking_command_.reset();
    }
}

void Runtime::publish_telemetry() {
    plugins::publish_detections(bus_, world::render_detections(world_, &noise_rng_));
    bus_.publish(bus::topics::kRobotStatus, "driver", drivers::to_json(driver().status()));
}

// ---------------------------------------------------------------- bookkeeping

void Runtime::reply(CommandEnvelope& env, std::string kind, std::string text, std::int64_t t) {
    env.replies.push_back({kind, text, t});
    record({{"type", "reply"}, {"tick", tick_index_}, {"t_ms", t}, {"id", env.id}, {"kind", kind}, {"text", text}});
    emit(kind, {{"command_id", env.id}, {"text", text}, {"t_ms", t}});
}

void Runtime::close(CommandEnvelope& env, Terminal t, std::int64_t at) {
    env.terminal = t;
    flush_bus();
    record({{"type", "command"}, {"tick", tick_index_}, {"t_ms", at}, {"envelope", to_json(env)}});
}

void Runtime::emit(const std::string& kind, const nlohmann::json& payload) {
    std::lock_guard lock(sink_mu_);
    if (sink_) sink_(kind, payload);
}

void Runtime::set_event_sink(EventSink sink) {
    std::lock_guard lock(sink_mu_);
    sink_ = std::move(sink);
}

void Runtime::record(nlohmann::json rec) {
    if (config_.keep_log || rec["type"] == "header" || rec["type"] == "final") log_.append(std::move(rec));
}

void Runtime::flush_bus() {
    for (auto& inv : drivers_.take_invocations()) {
        auto j = drivers::to_json(inv);
        j["type"] = "invocation";
        j["tick"] = tick_index_;
        record(std::move(j));
    }
    for (auto& m : bus_.take_history()) {
        auto j = bus::to_json(m);
        j["type"] = "message";
        record(std::move(j));
    }
}

CommandEnvelope& Runtime::env_ref(const std::string& id) {
    auto it = envelopes_.find(id);
    if (it == envelopes_.end()) throw UnknownCommand(id);
    return it->second;
}

const CommandEnvelope& Runtime::envelope(const std::string& id) const {
    auto it = envelopes_.find(id);
    if (it == envelopes_.end()) throw UnknownCommand(id);
    return it->second;
}

std::vector<CommandEnvelope> Runtime::envelopes() const {
    std::vector<CommandEnvelope> out;
    for (const auto& id : order_) out.push_back(envelopes_.at(id));
    return out;
}

StageTimings Runtime::stage_timings(const std::string& id) const {
    const CommandEnvelope& e = envelope(id);
    if (!e.done()) throw std::logic_error("command '" + id + "' has not finished");
    return timings_of(e);
}

drivers::RobotStatus Runtime::status() const { return driver().status(); }

intent::RuntimeContext Runtime::context() const {
    intent::RuntimeContext ctx;
    ctx.robot = config_.robot;
    ctx.status = driver().status();
    ctx.active_plugin = bb_.get_string(bt::kActivePlugin, bt::kNoPlugin);
    return ctx;
}

void Runtime::finish() {
    if (finished_) return;
    const std::int64_t now = now_ms();
    for (auto& i : interpreting_) {
        if (i.future.valid()) i.future.wait();
        CommandEnvelope& env = env_ref(i.id);
        env.failure_modes = {drivers::FailureMode::Timeout};
        close(env, Terminal::Failed, now);
    }
    interpreting_.clear();
    for (const auto& id : order_) {
        CommandEnvelope& env = envelopes_.at(id);
        if (env.done()) continue;
        if (is_open_tracking(env) && tracking_acquired_) {
            env.exec->end = now;
            close(env, Terminal::Completed, now);
            continue;
        }
        if (env.exec) env.exec->end = now;
        else if (env.disp) env.disp->end = now;
        env.failure_modes = {drivers::FailureMode::Timeout};
        close(env, Terminal::Failed, now);
    }
    tracking_command_.reset();
    flush_bus();
    finished_ = true;
    log_.append({{"type", "final"},
                 {"tick", tick_index_},
                 {"t_ms", now},
                 {"world", world::to_json(world_)},
                 {"status", drivers::to_json(driver().status())},
                 {"active_plugin", bb_.get_string(bt::kActivePlugin, bt::kNoPlugin)}});
    refresh_snapshot();
}

const ExecutionLog& Runtime::collect_trace() {
    finish();
    return log_;
}

// ---------------------------------------------------------------- snapshot

void Runtime::refresh_snapshot() {
    const auto st = driver().status();
    nlohmann::json robot = drivers::to_json(st);
    robot["kind"] = drivers::to_string(config_.robot);
    nlohmann::json persons = nlohmann::json::array();
    for (const auto& p : world_.persons) persons.push_back(world::to_json(p));
    nlohmann::json cmds = nlohmann::json::array();
    std::size_t recent = 0;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        const auto& e = envelopes_.at(*it);
        if (!e.done() || recent < 20) cmds.push_back(to_json(e));
        if (e.done()) ++recent;
    }
    std::reverse(cmds.begin(), cmds.end());
    nlohmann::json plugins = nlohmann::json::array();
    for (const auto& d : plugins_.descriptors()) plugins.push_back(plugins::to_json(d));
    nlohmann::json tree = nlohmann::json::array();
    for (const auto& n : tree_.nodes()) {
        nlohmann::json children = nlohmann::json::array();
        for (auto c : n.children) children.push_back(tree_.node(c).id);
        tree.push_back({{"id", n.id}, {"kind", bt::to_string(n.kind)}, {"label", n.label}, {"ref", n.ref}, {"children", children}});
    }
    nlohmann::json snap{{"v", 1},
                        {"tick_index", tick_index_},
                        {"t_ms", now_ms()},
                        {"robot", std::move(robot)},
                        {"blackboard", bt::to_json(bb_)},
                        {"trace", last_trace_ ? bt::to_json(*last_trace_) : nlohmann::json(nullptr)},
                        {"tree", {{"root", tree_.node(tree_.root()).id}, {"nodes", std::move(tree)}}},
                        {"world", {{"robot", world::to_json(world_.robot)}, {"persons", std::move(persons)}}},
                        {"plugins", std::move(plugins)},
                        {"commands", std::move(cmds)}};
    std::lock_guard lock(snap_mu_);
    snapshot_ = std::move(snap);
}

nlohmann::json Runtime::snapshot() const {
    std::lock_guard lock(snap_mu_);
    return snapshot_;
}

// ---------------------------------------------------------------- replay

std::unique_ptr<Runtime> Runtime::replay(const ExecutionLog& log) {
    const nlohmann::json* h = log.header();
    if (!h) throw std::invalid_argument("log has no header record");
    RuntimeConfig cfg = config_from_json(h->at("config"));
    cfg.realtime = false;
    auto rt = std::make_unique<Runtime>(std::move(cfg));
    const std::int64_t ticks = count_ticks(log);
    std::map<std::int64_t, std::vector<const nlohmann::json*>> events;
    for (const auto& r : log.records()) {
        if (r["type"] == "submit" || r["type"] == "input") events[r.at("tick").get<std::int64_t>()].push_back(&r);
    }
    for (std::int64_t t = 0; t < ticks; ++t) {
        for (const auto* r : events[t]) {
            if ((*r)["type"] == "submit") {
                rt->submit_command(r->at("text").get<std::string>());
            } else {
                std::lock_guard lock(rt->queue_mu_);
                rt->inputs_.push_back({r->at("topic").get<std::string>(), r->at("payload")});
            }
        }
        rt->tick();
    }
    if (log.final_record()) rt->finish();
    return rt;
}

}  // namespace btp::runtime
