#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "btpilot/bt/blackboard.hpp"
#include "btpilot/bt/status.hpp"

namespace btp::bt {

enum class NodeKind : std::uint8_t { Sequence, Selector, Condition, Action, PluginClient };

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> parse_kind(std::string_view text);
bool is_composite(NodeKind kind);

/// One entry of a declarative tree description. `kind` stays textual so that
/// build_tree can report unknown kinds against the node that carries them.
/// `ref` names a predicate / action / plugin; predicates and actions accept an
/// argument after a colon, e.g. "battery_at_least:20".
struct NodeSpec {
    std::string id;
    std::string kind;
    std::vector<std::string> children;
    std::string ref;
    std::string label;

    friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct TreeSpec {
    std::string root;  // optional; inferred as the only parentless node when empty
    std::vector<NodeSpec> nodes;

    friend bool operator==(const TreeSpec&, const TreeSpec&) = default;
};

enum class BuildErrorKind : std::uint8_t {
    DuplicateNodeId,
    UnknownKind,
    DanglingReference,
    CycleDetected,
    InvalidStructure,
};

std::string_view to_string(BuildErrorKind kind);

class BuildError : public std::runtime_error {
public:
    BuildError(BuildErrorKind kind, std::string node_id, const std::string& detail);

    BuildErrorKind kind() const noexcept { return kind_; }
    const std::string& node_id() const noexcept { return node_id_; }

private:
    BuildErrorKind kind_;
    std::string node_id_;
};

class Registry;

/// Everything a leaf can see while the tree is being ticked.
struct TickContext {
    Blackboard& blackboard;
    const Registry& registry;
    std::int64_t tick_index = 0;
    std::int64_t now_ms = 0;
};

using Predicate = std::function<bool(const TickContext&, std::string_view arg)>;
using ActionFn = std::function<NodeStatus(TickContext&, std::string_view arg)>;
using PluginFn = std::function<NodeStatus(TickContext&)>;

/// Splits "name:arg" into its two halves; arg is empty when there is no colon.
std::pair<std::string_view, std::string_view> split_ref(std::string_view ref);

class Registry {
public:
    void add_predicate(std::string name, Predicate fn);
    void add_action(std::string name, ActionFn fn);
    void add_plugin(std::string name, PluginFn fn);

    const Predicate* find_predicate(std::string_view name) const;
    const ActionFn* find_action(std::string_view name) const;
    const PluginFn* find_plugin(std::string_view name) const;

    /// True when the leaf's ref resolves for the given kind.
    bool resolves(NodeKind kind, std::string_view ref) const;

private:
    std::map<std::string, Predicate, std::less<>> predicates_;
    std::map<std::string, ActionFn, std::less<>> actions_;
    std::map<std::string, PluginFn, std::less<>> plugins_;
};

struct TickTrace {
    std::int64_t tick_index = 0;
    std::int64_t timestamp_ms = 0;
    /// Visited nodes in pre-order. Nodes not visited this tick are absent.
    std::vector<std::pair<std::string, NodeStatus>> statuses;
    NodeStatus root_status = NodeStatus::Failure;
    /// Leaf exceptions converted to Failure: (node id, message).
    std::vector<std::pair<std::string, std::string>> errors;

    std::optional<NodeStatus> status_of(std::string_view id) const;
    bool visited(std::string_view id) const { return status_of(id).has_value(); }

    friend bool operator==(const TickTrace&, const TickTrace&) = default;
};

nlohmann::json to_json(const TickTrace& trace);
TickTrace trace_from_json(const nlohmann::json& j);

/// Immutable, validated tree. Nodes are stored flat; children refer to indices.
class BehaviorTree {
public:
    struct Node {
        std::string id;
        NodeKind kind;
        std::vector<std::size_t> children;
        std::string ref;
        std::string label;
        std::optional<std::size_t> parent;

        friend bool operator==(const Node&, const Node&) = default;
    };

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t root() const noexcept { return root_; }
    const Node& node(std::size_t index) const { return nodes_.at(index); }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    std::optional<std::size_t> find(std::string_view id) const;
    const TreeSpec& spec() const noexcept { return spec_; }

    friend bool operator==(const BehaviorTree& a, const BehaviorTree& b) {
        return a.root_ == b.root_ && a.nodes_ == b.nodes_;
    }

private:
    friend BehaviorTree build_tree(const TreeSpec& spec, const Registry& registry);

    std::vector<Node> nodes_;
    std::size_t root_ = 0;
    TreeSpec spec_;
};

/// Validates `spec` against `registry` and returns the immutable tree.
/// Throws BuildError naming the offending node id.
BehaviorTree build_tree(const TreeSpec& spec, const Registry& registry);

/// One root-down traversal. Leaf exceptions become Failure and are recorded.
TickTrace tick(const BehaviorTree& tree, TickContext& ctx);

}  // namespace btp::bt
