#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace btp::runtime {

/// Newline-delimited JSON execution log. Every record is an object with a
/// "type" field:
///   header      {"v":1, "config":{...}}                        first record
///   submit      {"tick", "t_ms", "id", "text"}                 command accepted into the queue
///   input       {"tick", "t_ms", "topic", "payload"}           gesture / key event
///   interpreted {"tick", "t_ms", "id", "command":{...}}
///   decision    {"tick", "t_ms", "id", "decision":{...}}
///   invocation  {"tick", ...driver invocation}
///   message     {...bus message}
///   reply       {"tick", "t_ms", "id", "kind", "text"}
///   command     {"tick", "t_ms", "envelope":{...}}           terminal envelope
///   tick        {"tick", "t_ms", "trace":{...}}                one per tick
///   final       {"tick", "t_ms", "world":{...}, "status":{...}, "active_plugin"}
/// Records appear in the order the events happened.
class ExecutionLog {
public:
    void append(nlohmann::json record);
    const std::vector<nlohmann::json>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    /// Records of one type, in order.
    std::vector<nlohmann::json> of_type(std::string_view type) const;
    std::size_t tick_count() const;
    const nlohmann::json* header() const;
    const nlohmann::json* final_record() const;

    std::string to_ndjson() const;
    static ExecutionLog from_ndjson(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static ExecutionLog load(const std::filesystem::path& path);

    /// 64-bit FNV-1a over the NDJSON text, rendered as 16 hex digits.
    std::string digest() const;

    friend bool operator==(const ExecutionLog&, const ExecutionLog&) = default;

private:
    std::vector<nlohmann::json> records_;
};

std::string fnv1a_hex(std::string_view bytes);

}  // namespace btp::runtime
