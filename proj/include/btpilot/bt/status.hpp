#pragma once

#include <cstdint>
#include <string_view>

namespace btp::bt {

/// Result of ticking a node. The set is closed: every node reports exactly one of these.
enum class NodeStatus : std::uint8_t { Success, Failure, Running };

std::string_view to_string(NodeStatus status);

/// Parses "Success" / "Failure" / "Running"; throws std::invalid_argument otherwise.
NodeStatus parse_status(std::string_view text);

}  // namespace btp::bt
