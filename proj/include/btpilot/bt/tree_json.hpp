#pragma once

#include <filesystem>

#include <json.hpp>

#include "btpilot/bt/tree.hpp"

namespace btp::bt {

/// Tree description document:
///   {"v": 1, "root": "<id>", "nodes": [{"id", "kind", "children", "ref", "label"}, ...]}
/// Throws std::invalid_argument on structural JSON problems (missing "nodes", wrong field types).
TreeSpec parse_tree_spec(const nlohmann::json& doc);
TreeSpec load_tree_spec(const std::filesystem::path& path);
nlohmann::json to_json(const TreeSpec& spec);

}  // namespace btp::bt
