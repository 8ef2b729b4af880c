// Random tree generator and an independent evaluator that walks the
// declarative spec directly, shared by the unit and acceptance suites.
#pragma once

#include <chrono>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "btpilot/bt/tree.hpp"

namespace btp::testing {

using namespace btp::bt;

struct Outcomes {
    std::map<std::string, NodeStatus> leaf;  // keyed by node id
};

struct Generated {
    TreeSpec spec;
    std::vector<std::string> leaves;
    std::vector<std::string> conditions;
    std::map<std::string, std::string> guard_of_plugin;  // plugin node id -> plugin name guarded by its branch
    std::vector<std::string> plugin_names;
};

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    Generated tree(int max_depth) {
        Generated g;
        g_ = &g;
        counter_ = 0;
        std::string root = node(0, max_depth, true);
        g.spec.root = root;
        g_ = nullptr;
        return g;
    }

    NodeStatus status() { return static_cast<NodeStatus>(pick(3)); }
    std::mt19937_64& rng() { return rng_; }

private:
    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

    std::string fresh(const char* prefix) { return prefix + std::to_string(counter_++); }

    std::string node(int depth, int max_depth, bool allow_guard) {
        const bool leaf_only = depth >= max_depth - 1;
        int choice = leaf_only ? 2 + pick(3) : pick(6);
        if (choice == 5 && allow_guard && depth <= max_depth - 3) {
            return guarded_selector(depth, max_depth);
        }
        if (choice >= 5) choice = pick(2);
        if (choice <= 1) {
            std::string id = fresh(choice == 0 ? "seq" : "sel");
            NodeSpec ns{id, choice == 0 ? "Sequence" : "Selector", {}, "", ""};
            int n = 1 + pick(4);
            for (int i = 0; i < n; ++i) ns.children.push_back(node(depth + 1, max_depth, allow_guard));
            g_->spec.nodes.push_back(std::move(ns));
            return id;
        }
        if (choice == 2) {
            std::string id = fresh("cond");
            g_->spec.nodes.push_back({id, "Condition", {}, "flag:" + id, ""});
            g_->conditions.push_back(id);
            return id;
        }
        if (choice == 3) {
            std::string id = fresh("act");
            g_->spec.nodes.push_back({id, "Action", {}, "scripted:" + id, ""});
            g_->leaves.push_back(id);
            return id;
        }
        std::string id = fresh("plug");
        std::string name = "p_" + id;
        g_->spec.nodes.push_back({id, "PluginClient", {}, name, ""});
        g_->plugin_names.push_back(name);
        g_->leaves.push_back(id);
        return id;
    }

    // Selector over branches Sequence[Condition active_plugin_is:<k>, PluginClient, <subtree>...].
    std::string guarded_selector(int depth, int max_depth) {
        std::string sel = fresh("gsel");
        NodeSpec ns{sel, "Selector", {}, "", ""};
        int branches = 1 + pick(3);
        for (int b = 0; b < branches; ++b) {
            std::string key = "mode" + std::to_string(b);
            std::string seq = fresh("gseq");
            std::string guard = fresh("guard");
            std::string plug = fresh("gplug");
            std::string name = "p_" + plug;
            NodeSpec s{seq, "Sequence", {guard, plug}, "", ""};
            g_->spec.nodes.push_back({guard, "Condition", {}, "active_plugin_is:" + key, ""});
            g_->spec.nodes.push_back({plug, "PluginClient", {}, name, ""});
            g_->plugin_names.push_back(name);
            g_->leaves.push_back(plug);
            g_->guard_of_plugin[plug] = key;
            if (depth + 2 < max_depth && pick(2) == 0) {
                s.children.push_back(node(depth + 2, max_depth, false));
            }
            g_->spec.nodes.push_back(std::move(s));
            ns.children.push_back(seq);
        }
        g_->spec.nodes.push_back(std::move(ns));
        return sel;
    }

    std::mt19937_64 rng_;
    Generated* g_ = nullptr;
    int counter_ = 0;
};

inline Registry registry_for(const Generated& g, const Outcomes& out, std::set<std::string>* flags) {
    Registry r;
    r.add_predicate("flag", [flags](const TickContext&, std::string_view id) { return flags->count(std::string(id)) > 0; });
    r.add_predicate("active_plugin_is", [](const TickContext& c, std::string_view arg) {
        return c.blackboard.get_string(kActivePlugin) == arg;
    });
    r.add_action("scripted", [&out](TickContext&, std::string_view id) { return out.leaf.at(std::string(id)); });
    for (const auto& ns : g.spec.nodes) {
        if (ns.kind == "PluginClient") {
            std::string id = ns.id;
            r.add_plugin(ns.ref, [&out, id](TickContext&) { return out.leaf.at(id); });
        }
    }
    return r;
}

// Oracle: evaluates the spec by id lookup, no shared code with tick().
struct Oracle {
    const TreeSpec& spec;
    const Outcomes& out;
    const std::set<std::string>& flags;
    std::string active;
    std::vector<std::pair<std::string, NodeStatus>> visited;

    const NodeSpec& get(const std::string& id) const {
        for (const auto& n : spec.nodes)
            if (n.id == id) return n;
        throw std::logic_error("oracle: missing " + id);
    }

    NodeStatus eval(const std::string& id) {
        const NodeSpec& n = get(id);
        std::size_t slot = visited.size();
        visited.emplace_back(id, NodeStatus::Failure);
        NodeStatus s;
        if (n.kind == "Sequence") {
            s = NodeStatus::Success;
            for (const auto& c : n.children) {
                NodeStatus cs = eval(c);
                if (cs == NodeStatus::Failure || cs == NodeStatus::Running) {
                    s = cs;
                    break;
                }
            }
        } else if (n.kind == "Selector") {
            s = NodeStatus::Failure;
            for (const auto& c : n.children) {
                NodeStatus cs = eval(c);
                if (cs == NodeStatus::Success || cs == NodeStatus::Running) {
                    s = cs;
                    break;
                }
            }
        } else if (n.kind == "Condition") {
            bool ok;
            if (n.ref.rfind("active_plugin_is:", 0) == 0) {
                ok = active == n.ref.substr(17);
            } else {
                ok = flags.count(id) > 0;
            }
            s = ok ? NodeStatus::Success : NodeStatus::Failure;
        } else {
            s = out.leaf.at(id);
        }
        visited[slot].second = s;
        return s;
    }
};

struct PropertyStats {
    int trees = 0;
    int ticks = 0;
    int guarded_ticks = 0;
    double seconds = 0.0;
    std::string violation;  // first failed invariant; empty when all hold
};

/// Ticks `trees` random trees (depth 1..6) five times each and checks oracle
/// agreement, status closure, short-circuit, single plugin activation and
/// determinism. Stops at the first violation.
inline PropertyStats run_tree_properties(std::uint64_t seed, int trees) {
    PropertyStats st;
    const auto start = std::chrono::steady_clock::now();
    Gen gen(seed);
    auto fail = [&](int t, int k, const std::string& what) {
        std::ostringstream os;
        os << "tree " << t << " tick " << k << ": " << what;
        st.violation = os.str();
    };
    for (int t = 0; t < trees && st.violation.empty(); ++t) {
        int depth = 1 + t % 6;
        Generated g = gen.tree(depth);
        Outcomes out;
        std::set<std::string> flags;
        Registry reg = registry_for(g, out, &flags);
        BehaviorTree tree = build_tree(g.spec, reg);
        if (!(build_tree(g.spec, reg) == tree)) {
            fail(t, 0, "build is not deterministic");
            break;
        }
        ++st.trees;

        for (int k = 0; k < 5; ++k) {
            for (const auto& id : g.leaves) out.leaf[id] = gen.status();
            flags.clear();
            for (const auto& id : g.conditions)
                if (gen.rng()() & 1) flags.insert(id);
            std::string active = "mode" + std::to_string(gen.rng()() % 4);  // mode3 never matches a 3-branch guard set

            Blackboard bb;
            bb.write(kActivePlugin, active);
            TickContext ctx{bb, reg, k + 1, 100 * k};
            TickTrace trace = tick(tree, ctx);
            ++st.ticks;

            Oracle oracle{g.spec, out, flags, active, {}};
            NodeStatus expected_root = oracle.eval(g.spec.root);
            if (trace.root_status != expected_root) return fail(t, k, "root status differs from the oracle"), st;
            if (trace.statuses != oracle.visited) return fail(t, k, "visit order differs from the oracle"), st;
            if (trace.statuses.empty() || trace.statuses.front().first != g.spec.root) return fail(t, k, "root not visited first"), st;

            // Status closure.
            for (const auto& [id, s] : trace.statuses) {
                auto raw = static_cast<int>(s);
                if (raw < 0 || raw > 2) return fail(t, k, "status outside {Success, Failure, Running}"), st;
            }

            // Short-circuit: no visited sibling to the right of a terminating child.
            std::map<std::string, NodeStatus> seen(trace.statuses.begin(), trace.statuses.end());
            for (const auto& n : tree.nodes()) {
                if (!is_composite(n.kind) || !seen.count(n.id)) continue;
                NodeStatus stop = n.kind == NodeKind::Sequence ? NodeStatus::Failure : NodeStatus::Success;
                bool halted = false;
                for (auto c : n.children) {
                    const auto& cid = tree.node(c).id;
                    if (halted) {
                        if (seen.count(cid)) return fail(t, k, "child " + cid + " ticked after short-circuit"), st;
                        continue;
                    }
                    if (!seen.count(cid)) return fail(t, k, "child " + cid + " skipped before short-circuit"), st;
                    if (seen[cid] == stop || seen[cid] == NodeStatus::Running) halted = true;
                }
            }

            // Single activation: guarded plugins past their guard all share one key, and it is the active one.
            std::set<std::string> keys;
            std::set<std::string> plugin_ids;
            for (const auto& [id, s] : trace.statuses) {
                if (tree.node(*tree.find(id)).kind == NodeKind::PluginClient && !plugin_ids.insert(id).second) {
                    return fail(t, k, "plugin " + id + " ticked twice"), st;
                }
                auto it = g.guard_of_plugin.find(id);
                if (it != g.guard_of_plugin.end()) keys.insert(it->second);
            }
            if (keys.size() > 1) return fail(t, k, "plugins of two modes ticked"), st;
            if (!keys.empty()) {
                if (*keys.begin() != active) return fail(t, k, "plugin of an inactive mode ticked"), st;
                ++st.guarded_ticks;
            }

            // Determinism: same snapshot, same outcomes, same trace.
            Blackboard again = bb.snapshot();
            TickContext ctx2{again, reg, k + 1, 100 * k};
            if (!(tick(tree, ctx2) == trace)) return fail(t, k, "second tick on the same snapshot differs"), st;
        }
    }
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return st;
}

}  // namespace btp::testing
