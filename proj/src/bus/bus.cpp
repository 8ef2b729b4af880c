#include "btpilot/bus/bus.hpp"

#include <algorithm>

namespace btp::bus {

nlohmann::json to_json(const Message& m) {
    return {{"seq", m.seq}, {"topic", m.topic}, {"source", m.source}, {"tick", m.tick}, {"t_ms", m.t_ms}, {"payload", m.payload}};
}

Message message_from_json(const nlohmann::json& j) {
    return {j.at("seq").get<std::uint64_t>(), j.at("topic").get<std::string>(), j.at("source").get<std::string>(),
            j.at("tick").get<std::int64_t>(),  j.at("t_ms").get<std::int64_t>(),   j.at("payload")};
}

std::size_t Bus::subscribe(std::string topic, Handler handler) {
    std::size_t id = next_sub_++;
    subs_.push_back({id, std::move(topic), std::move(handler)});
    return id;
}

void Bus::unsubscribe(std::size_t id) {
    subs_.erase(std::remove_if(subs_.begin(), subs_.end(), [id](const Sub& s) { return s.id == id; }), subs_.end());
}

const Message& Bus::publish(std::string_view topic, std::string_view source, nlohmann::json payload) {
    Message m{next_seq_++, std::string(topic), std::string(source), tick_, t_ms_, std::move(payload)};
    latest_[m.topic] = m;
    history_.push_back(m);
    pending_.push_back(m);
    if (!dispatching_) {
        drain();
    }
    return latest_.find(topic)->second;
}

void Bus::drain() {
    dispatching_ = true;
    try {
        while (!pending_.empty()) {
            Message m = std::move(pending_.front());
            pending_.pop_front();
            // Copy: a handler may subscribe or unsubscribe.
            auto subs = subs_;
            for (const Sub& s : subs) {
                if (s.topic == "*" || s.topic == m.topic) {
                    s.handler(m);
                }
            }
        }
    } catch (...) {
        dispatching_ = false;
        pending_.clear();
        throw;
    }
    dispatching_ = false;
}

void Bus::set_clock(std::int64_t tick, std::int64_t t_ms) {
    tick_ = tick;
    t_ms_ = t_ms;
}

std::optional<Message> Bus::latest(std::string_view topic) const {
    auto it = latest_.find(topic);
    if (it == latest_.end()) return std::nullopt;
    return it->second;
}

std::vector<Message> Bus::history(std::string_view topic) const {
    std::vector<Message> out;
    for (const auto& m : history_) {
        if (m.topic == topic) out.push_back(m);
    }
    return out;
}

std::vector<Message> Bus::take_history() {
    std::vector<Message> out;
    out.swap(history_);
    return out;
}

}  // namespace btp::bus
