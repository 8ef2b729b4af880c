#include "btpilot/bt/blackboard.hpp"

#include <string>

namespace btp::bt {

TypeConflict::TypeConflict(std::string key, std::string_view existing, std::string_view attempted)
    : std::runtime_error("blackboard key '" + key + "' holds " + std::string(existing) + ", cannot write " +
                         std::string(attempted)),
      key_(std::move(key)) {}

std::string_view type_name(const Value& value) {
    switch (value.index()) {
        case 0:
            return "string";
        case 1:
            return "number";
        default:
            return "boolean";
    }
}

std::uint64_t Blackboard::write(std::string_view key, Value value) {
    if (key.empty()) {
        throw std::invalid_argument("blackboard key must not be empty");
    }
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        entries_.emplace(std::string(key), std::move(value));
    } else {
        if (it->second.index() != value.index()) {
            throw TypeConflict(std::string(key), type_name(it->second), type_name(value));
        }
        it->second = std::move(value);
    }
    return ++version_;
}

std::optional<Value> Blackboard::read(std::string_view key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string Blackboard::get_string(std::string_view key, std::string_view fallback) const {
    if (auto v = get<std::string>(key)) {
        return *v;
    }
    return std::string(fallback);
}

nlohmann::json to_json(const Value& value) {
    return std::visit([](const auto& v) { return nlohmann::json(v); }, value);
}

nlohmann::json to_json(const Blackboard& bb) {
    nlohmann::json entries = nlohmann::json::object();
    for (const auto& [key, value] : bb.entries()) {
        entries[key] = to_json(value);
    }
    return {{"version", bb.version()}, {"entries", std::move(entries)}};
}

}  // namespace btp::bt
