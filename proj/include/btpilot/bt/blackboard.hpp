#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

namespace btp::bt {

/// Blackboard values are strings, numbers or booleans. A key keeps its type for life.
using Value = std::variant<std::string, double, bool>;

/// Key holding the plugin id currently enabled by the operator.
inline constexpr std::string_view kActivePlugin = "active_plugin";
/// Attribute descriptor for the person-tracking plugin (comma separated).
inline constexpr std::string_view kTrackDescriptor = "track_descriptor";
/// Value of `active_plugin` when no plugin is enabled.
inline constexpr std::string_view kNoPlugin = "none";

class TypeConflict : public std::runtime_error {
public:
    TypeConflict(std::string key, std::string_view existing, std::string_view attempted);
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

std::string_view type_name(const Value& value);

class Blackboard {
public:
    using Entries = std::map<std::string, Value, std::less<>>;

    /// Writes `value` under `key` and returns the new version number.
    /// Throws std::invalid_argument for an empty key, TypeConflict when the key
    /// already holds a value of another type.
    std::uint64_t write(std::string_view key, Value value);

    std::optional<Value> read(std::string_view key) const;

    template <typename T>
    std::optional<T> get(std::string_view key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            return std::nullopt;
        }
        if (const T* v = std::get_if<T>(&it->second)) {
            return *v;
        }
        return std::nullopt;
    }

    std::string get_string(std::string_view key, std::string_view fallback = {}) const;

    std::uint64_t version() const noexcept { return version_; }
    const Entries& entries() const noexcept { return entries_; }

    /// Immutable copy safe to hand to other threads.
    Blackboard snapshot() const { return *this; }

    friend bool operator==(const Blackboard&, const Blackboard&) = default;

private:
    Entries entries_;
    std::uint64_t version_ = 0;
};

nlohmann::json to_json(const Value& value);
nlohmann::json to_json(const Blackboard& bb);

}  // namespace btp::bt
