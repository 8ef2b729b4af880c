#include "btpilot/bt/tree.hpp"

#include <exception>
#include <unordered_map>

namespace btp::bt {

std::string_view to_string(NodeStatus status) {
    switch (status) {
        case NodeStatus::Success:
            return "Success";
        case NodeStatus::Failure:
            return "Failure";
        case NodeStatus::Running:
            return "Running";
    }
    return "Failure";
}

NodeStatus parse_status(std::string_view text) {
    if (text == "Success") return NodeStatus::Success;
    if (text == "Failure") return NodeStatus::Failure;
    if (text == "Running") return NodeStatus::Running;
    throw std::invalid_argument("unknown node status '" + std::string(text) + "'");
}

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Sequence:
            return "Sequence";
        case NodeKind::Selector:
            return "Selector";
        case NodeKind::Condition:
            return "Condition";
        case NodeKind::Action:
            return "Action";
        case NodeKind::PluginClient:
            return "PluginClient";
    }
    return "Action";
}

std::optional<NodeKind> parse_kind(std::string_view text) {
    for (NodeKind k : {NodeKind::Sequence, NodeKind::Selector, NodeKind::Condition, NodeKind::Action,
                       NodeKind::PluginClient}) {
        if (to_string(k) == text) {
            return k;
        }
    }
    return std::nullopt;
}

bool is_composite(NodeKind kind) { return kind == NodeKind::Sequence || kind == NodeKind::Selector; }

std::string_view to_string(BuildErrorKind kind) {
    switch (kind) {
        case BuildErrorKind::DuplicateNodeId:
            return "DuplicateNodeId";
        case BuildErrorKind::UnknownKind:
            return "UnknownKind";
        case BuildErrorKind::DanglingReference:
            return "DanglingReference";
        case BuildErrorKind::CycleDetected:
            return "CycleDetected";
        case BuildErrorKind::InvalidStructure:
            return "InvalidStructure";
    }
    return "InvalidStructure";
}

BuildError::BuildError(BuildErrorKind kind, std::string node_id, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + " at '" + node_id + "': " + detail),
      kind_(kind),
      node_id_(std::move(node_id)) {}

std::pair<std::string_view, std::string_view> split_ref(std::string_view ref) {
    auto colon = ref.find(':');
    if (colon == std::string_view::npos) {
        return {ref, {}};
    }
    return {ref.substr(0, colon), ref.substr(colon + 1)};
}

void Registry::add_predicate(std::string name, Predicate fn) { predicates_[std::move(name)] = std::move(fn); }
void Registry::add_action(std::string name, ActionFn fn) { actions_[std::move(name)] = std::move(fn); }
void Registry::add_plugin(std::string name, PluginFn fn) { plugins_[std::move(name)] = std::move(fn); }

namespace {

template <typename Map>
auto find_in(const Map& map, std::string_view name) -> const typename Map::mapped_type* {
    auto it = map.find(name);
    return it == map.end() ? nullptr : &it->second;
}

}  // namespace

const Predicate* Registry::find_predicate(std::string_view name) const { return find_in(predicates_, name); }
const ActionFn* Registry::find_action(std::string_view name) const { return find_in(actions_, name); }
const PluginFn* Registry::find_plugin(std::string_view name) const { return find_in(plugins_, name); }

bool Registry::resolves(NodeKind kind, std::string_view ref) const {
    auto [name, arg] = split_ref(ref);
    switch (kind) {
        case NodeKind::Condition:
            return find_predicate(name) != nullptr;
        case NodeKind::Action:
            return find_action(name) != nullptr;
        case NodeKind::PluginClient:
            return arg.empty() && find_plugin(name) != nullptr;
        default:
            return true;
    }
}

std::optional<NodeStatus> TickTrace::status_of(std::string_view id) const {
    for (const auto& [node_id, status] : statuses) {
        if (node_id == id) {
            return status;
        }
    }
    return std::nullopt;
}

nlohmann::json to_json(const TickTrace& trace) {
    nlohmann::json statuses = nlohmann::json::array();
    for (const auto& [id, status] : trace.statuses) {
        statuses.push_back({id, to_string(status)});
    }
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& [id, msg] : trace.errors) {
        errors.push_back({id, msg});
    }
    return {{"tick_index", trace.tick_index},
            {"timestamp_ms", trace.timestamp_ms},
            {"root_status", to_string(trace.root_status)},
            {"statuses", std::move(statuses)},
            {"errors", std::move(errors)}};
}

TickTrace trace_from_json(const nlohmann::json& j) {
    TickTrace t;
    t.tick_index = j.at("tick_index").get<std::int64_t>();
    t.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    t.root_status = parse_status(j.at("root_status").get<std::string>());
    for (const auto& entry : j.at("statuses")) {
        t.statuses.emplace_back(entry.at(0).get<std::string>(), parse_status(entry.at(1).get<std::string>()));
    }
    if (j.contains("errors")) {
        for (const auto& entry : j.at("errors")) {
            t.errors.emplace_back(entry.at(0).get<std::string>(), entry.at(1).get<std::string>());
        }
    }
    return t;
}

std::optional<std::size_t> BehaviorTree::find(std::string_view id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].id == id) {
            return i;
        }
    }
    return std::nullopt;
}

BehaviorTree build_tree(const TreeSpec& spec, const Registry& registry) {
    if (spec.nodes.empty()) {
        throw BuildError(BuildErrorKind::InvalidStructure, spec.root, "tree has no nodes");
    }

    BehaviorTree tree;
    std::unordered_map<std::string, std::size_t> index;
    for (const NodeSpec& ns : spec.nodes) {
        if (ns.id.empty()) {
            throw BuildError(BuildErrorKind::InvalidStructure, ns.id, "node id must not be empty");
        }
        if (!index.emplace(ns.id, tree.nodes_.size()).second) {
            throw BuildError(BuildErrorKind::DuplicateNodeId, ns.id, "id used more than once");
        }
        auto kind = parse_kind(ns.kind);
        if (!kind) {
            throw BuildError(BuildErrorKind::UnknownKind, ns.id, "kind '" + ns.kind + "'");
        }
        tree.nodes_.push_back({ns.id, *kind, {}, ns.ref, ns.label, std::nullopt});
    }

    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        const NodeSpec& ns = spec.nodes[i];
        auto& node = tree.nodes_[i];
        for (const std::string& child : ns.children) {
            auto it = index.find(child);
            if (it == index.end()) {
                throw BuildError(BuildErrorKind::DanglingReference, ns.id, "child '" + child + "' does not exist");
            }
            node.children.push_back(it->second);
        }
        if (!is_composite(node.kind) && !registry.resolves(node.kind, node.ref)) {
            throw BuildError(BuildErrorKind::DanglingReference, ns.id,
                             std::string(to_string(node.kind)) + " ref '" + ns.ref + "' is not registered");
        }
    }

    // Cycle detection: iterative DFS with white/grey/black colouring from every node.
    enum class Mark : std::uint8_t { White, Grey, Black };
    std::vector<Mark> mark(tree.nodes_.size(), Mark::White);
    for (std::size_t start = 0; start < tree.nodes_.size(); ++start) {
        if (mark[start] != Mark::White) {
            continue;
        }
        std::vector<std::pair<std::size_t, std::size_t>> stack{{start, 0}};
        mark[start] = Mark::Grey;
        while (!stack.empty()) {
            auto& [n, next] = stack.back();
            const auto& children = tree.nodes_[n].children;
            if (next < children.size()) {
                std::size_t c = children[next++];
                if (mark[c] == Mark::Grey) {
                    throw BuildError(BuildErrorKind::CycleDetected, tree.nodes_[c].id,
                                     "reachable from its own descendant '" + tree.nodes_[n].id + "'");
                }
                if (mark[c] == Mark::White) {
                    mark[c] = Mark::Grey;
                    stack.emplace_back(c, 0);
                }
            } else {
                mark[n] = Mark::Black;
                stack.pop_back();
            }
        }
    }

    for (std::size_t i = 0; i < tree.nodes_.size(); ++i) {
        for (std::size_t c : tree.nodes_[i].children) {
            auto& child = tree.nodes_[c];
            if (child.parent) {
                throw BuildError(BuildErrorKind::InvalidStructure, child.id,
                                 "has two parents ('" + tree.nodes_[*child.parent].id + "' and '" +
                                     tree.nodes_[i].id + "')");
            }
            child.parent = i;
        }
    }

    for (const auto& node : tree.nodes_) {
        if (is_composite(node.kind) && node.children.empty()) {
            throw BuildError(BuildErrorKind::InvalidStructure, node.id, "composite without children");
        }
        if (!is_composite(node.kind) && !node.children.empty()) {
            throw BuildError(BuildErrorKind::InvalidStructure, node.id, "leaf with children");
        }
    }

    if (!spec.root.empty()) {
        auto it = index.find(spec.root);
        if (it == index.end()) {
            throw BuildError(BuildErrorKind::DanglingReference, spec.root, "root does not exist");
        }
        if (tree.nodes_[it->second].parent) {
            throw BuildError(BuildErrorKind::InvalidStructure, spec.root, "root has a parent");
        }
        tree.root_ = it->second;
    } else {
        std::optional<std::size_t> root;
        for (std::size_t i = 0; i < tree.nodes_.size(); ++i) {
            if (!tree.nodes_[i].parent) {
                if (root) {
                    throw BuildError(BuildErrorKind::InvalidStructure, tree.nodes_[i].id,
                                     "second parentless node (first: '" + tree.nodes_[*root].id + "')");
                }
                root = i;
            }
        }
        tree.root_ = *root;  // acyclic and non-empty, so at least one parentless node exists
    }

    for (std::size_t i = 0; i < tree.nodes_.size(); ++i) {
        if (i != tree.root_ && !tree.nodes_[i].parent) {
            throw BuildError(BuildErrorKind::InvalidStructure, tree.nodes_[i].id, "not reachable from the root");
        }
    }

    tree.spec_ = spec;
    return tree;
}

namespace {

NodeStatus run_leaf(const BehaviorTree::Node& node, TickContext& ctx) {
    auto [name, arg] = split_ref(node.ref);
    switch (node.kind) {
        case NodeKind::Condition: {
            const Predicate* p = ctx.registry.find_predicate(name);
            if (!p) throw std::runtime_error("predicate '" + std::string(name) + "' not registered");
            return (*p)(ctx, arg) ? NodeStatus::Success : NodeStatus::Failure;
        }
        case NodeKind::Action: {
            const ActionFn* a = ctx.registry.find_action(name);
            if (!a) throw std::runtime_error("action '" + std::string(name) + "' not registered");
            return (*a)(ctx, arg);
        }
        case NodeKind::PluginClient: {
            const PluginFn* p = ctx.registry.find_plugin(name);
            if (!p) throw std::runtime_error("plugin '" + std::string(name) + "' not registered");
            return (*p)(ctx);
        }
        default:
            break;
    }
    return NodeStatus::Failure;
}

NodeStatus tick_node(const BehaviorTree& tree, std::size_t index, TickContext& ctx, TickTrace& trace) {
    const auto& node = tree.node(index);
    std::size_t slot = trace.statuses.size();
    trace.statuses.emplace_back(node.id, NodeStatus::Failure);

    NodeStatus result = NodeStatus::Failure;
    switch (node.kind) {
        case NodeKind::Sequence:
            result = NodeStatus::Success;
            for (std::size_t child : node.children) {
                NodeStatus s = tick_node(tree, child, ctx, trace);
                if (s != NodeStatus::Success) {
                    result = s;
                    break;
                }
            }
            break;
        case NodeKind::Selector:
            result = NodeStatus::Failure;
            for (std::size_t child : node.children) {
                NodeStatus s = tick_node(tree, child, ctx, trace);
                if (s != NodeStatus::Failure) {
                    result = s;
                    break;
                }
            }
            break;
        default:
            try {
                result = run_leaf(node, ctx);
            } catch (const std::exception& e) {
                result = NodeStatus::Failure;
                trace.errors.emplace_back(node.id, e.what());
            } catch (...) {
                result = NodeStatus::Failure;
                trace.errors.emplace_back(node.id, "unknown exception");
            }
            break;
    }
    trace.statuses[slot].second = result;
    return result;
}

}  // namespace

TickTrace tick(const BehaviorTree& tree, TickContext& ctx) {
    TickTrace trace;
    trace.tick_index = ctx.tick_index;
    trace.timestamp_ms = ctx.now_ms;
    trace.statuses.reserve(tree.size());
    trace.root_status = tick_node(tree, tree.root(), ctx, trace);
    return trace;
}

}  // namespace btp::bt
