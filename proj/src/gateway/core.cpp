#include <iostream>
#include <regex>

#include "btpilot/gateway/gateway.hpp"

namespace btp::gateway {

// ---------------------------------------------------------------- events

void Subscriber::push(const std::string& kind, const nlohmann::json& payload) {
    {
        std::lock_guard lock(mu_);
        if (kind == "tick" && !queue_.empty() && queue_.back().kind == "tick") {
            queue_.back().payload = payload;
            ++coalesced_;
        } else {
            queue_.push_back({kind, payload});
        }
    }
    cv_.notify_all();
    if (notify_) notify_();
}

std::optional<nlohmann::json> Subscriber::pop() {
    std::lock_guard lock(mu_);
    if (queue_.empty()) return std::nullopt;
    Item item = std::move(queue_.front());
    queue_.pop_front();
    return nlohmann::json{{"v", kSchemaVersion}, {"seq", next_seq_++}, {"kind", item.kind}, {"payload", std::move(item.payload)}};
}

std::optional<nlohmann::json> Subscriber::wait_pop(std::chrono::milliseconds timeout) {
    {
        std::unique_lock lock(mu_);
        if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) return std::nullopt;
    }
    return pop();
}

std::size_t Subscriber::pending() const {
    std::lock_guard lock(mu_);
    return queue_.size();
}

std::uint64_t Subscriber::coalesced() const {
    std::lock_guard lock(mu_);
    return coalesced_;
}

std::shared_ptr<Subscriber> EventHub::subscribe(std::function<void()> notify) {
    auto s = std::make_shared<Subscriber>(std::move(notify));
    std::lock_guard lock(mu_);
    subs_.push_back(s);
    return s;
}

void EventHub::unsubscribe(const std::shared_ptr<Subscriber>& s) {
    std::lock_guard lock(mu_);
    subs_.erase(std::remove(subs_.begin(), subs_.end(), s), subs_.end());
}

void EventHub::publish(const std::string& kind, const nlohmann::json& payload) {
    std::vector<std::shared_ptr<Subscriber>> subs;
    {
        std::lock_guard lock(mu_);
        subs = subs_;
    }
    for (auto& s : subs) s->push(kind, payload);
}

std::size_t EventHub::subscribers() const {
    std::lock_guard lock(mu_);
    return subs_.size();
}

// ---------------------------------------------------------------- core

namespace {

HttpReply error(int status, const std::string& message) { return {status, {{"error", message}}}; }

std::optional<nlohmann::json> parse_body(const std::string& body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

std::string query_param(const std::string& query, const std::string& name) {
    std::size_t pos = 0;
    while (pos <= query.size()) {
        auto amp = query.find('&', pos);
        auto part = query.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
        auto eq = part.find('=');
        if (eq != std::string::npos && part.substr(0, eq) == name) return part.substr(eq + 1);
        if (amp == std::string::npos) break;
        pos = amp + 1;
    }
    return std::string();
}

}  // namespace

GatewayCore::GatewayCore(GatewayConfig config) : config_(std::move(config)) {
    if (!config_.scenario_dir.empty()) scenarios_ = eval::load_scenarios(config_.scenario_dir);
    config_.runtime.keep_log = false;
    rt_ = std::make_unique<runtime::Runtime>(config_.runtime);
    install_sink();
}

GatewayCore::~GatewayCore() { stop(); }

void GatewayCore::install_sink() {
    rt_->set_event_sink([this](const std::string& kind, const nlohmann::json& payload) { hub_.publish(kind, payload); });
}

void GatewayCore::start() {
    if (running_) return;
    running_ = true;
    if (!config_.autotick) return;
    stop_loop_ = false;
    loop_ = std::thread([this] { tick_loop(); });
}

void GatewayCore::stop() {
    running_ = false;
    stop_loop_ = true;
    if (loop_.joinable()) loop_.join();
}

void GatewayCore::step(std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) tick_once();
}

void GatewayCore::tick_once() {
    std::lock_guard tick_lock(tick_mu_);
    std::shared_lock lock(rt_mu_);
    rt_->tick();
    if (scenario_command_ && !scenario_reported_) {
        const auto& env = rt_->envelope(*scenario_command_);
        if (env.done()) {
            scenario_reported_ = true;
            hub_.publish("scenario_event", {{"scenario", *scenario_},
                                            {"event", "finished"},
                                            {"command_id", env.id},
                                            {"terminal", runtime::to_string(*env.terminal)},
                                            {"reply", env.last_reply()},
                                            {"tick_index", rt_->tick_index()}});
        }
    }
}

void GatewayCore::tick_loop() {
    auto next = std::chrono::steady_clock::now();
    while (!stop_loop_) {
        try {
            tick_once();
        } catch (const std::exception& e) {
            std::cerr << "tick failed: " << e.what() << "\n";
        }
        if (config_.tick_period_ms > 0) {
            next += std::chrono::milliseconds(config_.tick_period_ms);
            std::this_thread::sleep_until(next);
        } else {
            std::this_thread::yield();
        }
    }
}

void GatewayCore::reset(runtime::RuntimeConfig cfg, const eval::ScenarioSpec* scenario) {
    const bool looping = loop_.joinable();
    if (looping) {
        stop_loop_ = true;
        loop_.join();
    }
    {
        std::lock_guard tick_lock(tick_mu_);
        std::unique_lock lock(rt_mu_);
        cfg.keep_log = false;
        rt_ = std::make_unique<runtime::Runtime>(std::move(cfg));
        install_sink();
        scenario_.reset();
        scenario_command_.reset();
        scenario_reported_ = false;
        if (scenario) {
            scenario_ = scenario->key();
            hub_.publish("scenario_event", {{"scenario", scenario->key()},
                                            {"event", "started"},
                                            {"instruction", scenario->instruction},
                                            {"tick_index", 0}});
            scenario_command_ = rt_->submit_command(scenario->instruction);
        }
    }
    if (looping) {
        stop_loop_ = false;
        loop_ = std::thread([this] { tick_loop(); });
    }
}

nlohmann::json GatewayCore::state() const {
    std::shared_lock lock(rt_mu_);
    auto s = rt_->snapshot();
    s["running"] = running_.load();
    s["scenario"] = scenario_ ? nlohmann::json(*scenario_) : nlohmann::json(nullptr);
    return s;
}

std::vector<std::string> GatewayCore::scenario_ids() const {
    std::vector<std::string> out;
    for (const auto& s : scenarios_) out.push_back(s.key());
    return out;
}

HttpReply GatewayCore::post_command(const nlohmann::json& body) {
    if (!body.contains("text") || !body.at("text").is_string()) return error(400, "body needs a string field 'text'");
    std::shared_lock lock(rt_mu_);
    try {
        return {200, {{"command_id", rt_->submit_command(body.at("text").get<std::string>())}}};
    } catch (const runtime::EmptyCommand& e) {
        return error(400, e.what());
    } catch (const runtime::QueueFull& e) {
        return error(429, e.what());
    }
}

HttpReply GatewayCore::post_input(const std::string& kind, const nlohmann::json& body) {
    if (!body.contains(kind) || !body.at(kind).is_string()) return error(400, "body needs a string field '" + kind + "'");
    std::shared_lock lock(rt_mu_);
    try {
        const auto value = body.at(kind).get<std::string>();
        if (kind == "gesture") rt_->inject_gesture(value);
        else rt_->inject_key(value);
        return {200, {{"accepted", true}}};
    } catch (const runtime::InvalidInput& e) {
        return error(400, e.what());
    } catch (const runtime::QueueFull& e) {
        return error(429, e.what());
    }
}

HttpReply GatewayCore::start_scenario(const std::string& id, const std::string& robot) {
    const eval::ScenarioSpec* found = nullptr;
    for (const auto& s : scenarios_) {
        const bool id_match = s.id == id || s.key() == id;
        const bool robot_match = robot.empty() || drivers::to_string(s.robot) == robot;
        if (id_match && robot_match) {
            found = &s;
            break;
        }
    }
    if (!found) return error(404, "unknown scenario '" + id + "'");
    auto cfg = eval::scenario_config(*found);
    cfg.backend = config_.runtime.backend;
    cfg.llm_model = config_.runtime.llm_model;
    cfg.llm_fixtures = config_.runtime.llm_fixtures;
    cfg.llm_transport = config_.runtime.llm_transport;
    cfg.realtime = config_.runtime.realtime;
    cfg.tick_ms = config_.runtime.tick_ms;
    cfg.cog_cost_ms = config_.runtime.cog_cost_ms;
    reset(std::move(cfg), found);
    std::shared_lock lock(rt_mu_);
    return {200, {{"scenario", found->key()}, {"command_id", *scenario_command_}, {"instruction", found->instruction}}};
}

HttpReply GatewayCore::get_command(const std::string& id) const {
    auto snap = state();
    for (const auto& c : snap["commands"]) {
        if (c["id"] == id) return {200, c};
    }
    return error(404, "unknown command '" + id + "'");
}

HttpReply GatewayCore::handle(const std::string& method, const std::string& target, const std::string& body) {
    const auto qpos = target.find('?');
    const std::string path = target.substr(0, qpos);
    const std::string query = qpos == std::string::npos ? std::string() : target.substr(qpos + 1);
    static const std::regex scenario_re(R"(^/api/scenario/([^/]+)/start$)");
    static const std::regex command_re(R"(^/api/commands/([^/]+)$)");
    std::smatch m;

    if (method == "OPTIONS") return {204, nullptr};

    auto post_json = [&](auto&& fn) -> HttpReply {
        if (method != "POST") return error(405, "use POST");
        if (!running_) return error(503, "runtime is stopped");
        auto j = parse_body(body.empty() ? "{}" : body);
        if (!j) return error(400, "body must be a JSON object");
        return fn(*j);
    };

    if (path == "/api/health") {
        if (method != "GET") return error(405, "use GET");
        return {200, {{"ok", true}, {"running", running_.load()}, {"v", kSchemaVersion}}};
    }
    if (path == "/api/state") {
        if (method != "GET") return error(405, "use GET");
        if (!running_) return error(503, "runtime is stopped");
        return {200, state()};
    }
    if (path == "/api/scenarios") {
        if (method != "GET") return error(405, "use GET");
        nlohmann::json list = nlohmann::json::array();
        for (const auto& s : scenarios_) {
            list.push_back({{"key", s.key()}, {"id", s.id}, {"robot", drivers::to_string(s.robot)}, {"instruction", s.instruction}});
        }
        return {200, {{"scenarios", list}}};
    }
    if (path == "/api/command") return post_json([&](const nlohmann::json& j) { return post_command(j); });
    if (path == "/api/input/gesture") return post_json([&](const nlohmann::json& j) { return post_input("gesture", j); });
    if (path == "/api/input/key") return post_json([&](const nlohmann::json& j) { return post_input("key", j); });
    if (std::regex_match(path, m, scenario_re)) {
        const std::string id = m[1].str();
        return post_json([&](const nlohmann::json& j) {
            std::string robot = query_param(query, "robot");
            if (robot.empty() && j.contains("robot") && j.at("robot").is_string()) robot = j.at("robot").get<std::string>();
            return start_scenario(id, robot);
        });
    }
    if (std::regex_match(path, m, command_re)) {
        if (method != "GET") return error(405, "use GET");
        return get_command(m[1].str());
    }
    return error(404, "no route for " + path);
}

}  // namespace btp::gateway
