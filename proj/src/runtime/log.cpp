#include "btpilot/runtime/log.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace btp::runtime {

void ExecutionLog::append(nlohmann::json record) {
    if (!record.is_object() || !record.contains("type")) {
        throw std::invalid_argument("log records must be objects with a type");
    }
    records_.push_back(std::move(record));
}

std::vector<nlohmann::json> ExecutionLog::of_type(std::string_view type) const {
    std::vector<nlohmann::json> out;
    for (const auto& r : records_) {
        if (r["type"] == type) out.push_back(r);
    }
    return out;
}

std::size_t ExecutionLog::tick_count() const {
    std::size_t n = 0;
    for (const auto& r : records_) {
        if (r["type"] == "tick") ++n;
    }
    return n;
}

const nlohmann::json* ExecutionLog::header() const {
    if (records_.empty() || records_.front()["type"] != "header") return nullptr;
    return &records_.front();
}

const nlohmann::json* ExecutionLog::final_record() const {
    if (records_.empty() || records_.back()["type"] != "final") return nullptr;
    return &records_.back();
}

std::string ExecutionLog::to_ndjson() const {
    std::string out;
    for (const auto& r : records_) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

ExecutionLog ExecutionLog::from_ndjson(std::string_view text) {
    ExecutionLog log;
    std::size_t start = 0;
    std::size_t line = 1;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        auto piece = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        if (!piece.empty()) {
            try {
                log.append(nlohmann::json::parse(piece));
            } catch (const std::exception& e) {
                throw std::invalid_argument("log line " + std::to_string(line) + ": " + e.what());
            }
        }
        if (nl == std::string_view::npos) break;
        start = nl + 1;
        ++line;
    }
    return log;
}

void ExecutionLog::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << to_ndjson();
}

ExecutionLog ExecutionLog::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_ndjson(ss.str());
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string ExecutionLog::digest() const { return fnv1a_hex(to_ndjson()); }

}  // namespace btp::runtime
