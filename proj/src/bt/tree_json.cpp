#include "btpilot/bt/tree_json.hpp"

#include <fstream>

namespace btp::bt {

namespace {

std::string string_field(const nlohmann::json& node, const char* key, bool required) {
    if (!node.contains(key)) {
        if (required) {
            throw std::invalid_argument(std::string("tree node is missing '") + key + "'");
        }
        return {};
    }
    const auto& v = node.at(key);
    if (!v.is_string()) {
        throw std::invalid_argument(std::string("tree node field '") + key + "' must be a string");
    }
    return v.get<std::string>();
}

}  // namespace

TreeSpec parse_tree_spec(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("nodes") || !doc.at("nodes").is_array()) {
        throw std::invalid_argument("tree document needs a 'nodes' array");
    }
    TreeSpec spec;
    if (doc.contains("root")) {
        spec.root = doc.at("root").get<std::string>();
    }
    for (const auto& n : doc.at("nodes")) {
        NodeSpec ns;
        ns.id = string_field(n, "id", true);
        ns.kind = string_field(n, "kind", true);
        ns.ref = string_field(n, "ref", false);
        ns.label = string_field(n, "label", false);
        if (n.contains("children")) {
            if (!n.at("children").is_array()) {
                throw std::invalid_argument("children of '" + ns.id + "' must be an array");
            }
            for (const auto& c : n.at("children")) {
                ns.children.push_back(c.get<std::string>());
            }
        }
        spec.nodes.push_back(std::move(ns));
    }
    return spec;
}

TreeSpec load_tree_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open tree file " + path.string());
    }
    return parse_tree_spec(nlohmann::json::parse(in));
}

nlohmann::json to_json(const TreeSpec& spec) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : spec.nodes) {
        nlohmann::json j{{"id", n.id}, {"kind", n.kind}, {"children", n.children}};
        if (!n.ref.empty()) j["ref"] = n.ref;
        if (!n.label.empty()) j["label"] = n.label;
        nodes.push_back(std::move(j));
    }
    nlohmann::json doc{{"v", 1}, {"nodes", std::move(nodes)}};
    if (!spec.root.empty()) doc["root"] = spec.root;
    return doc;
}

}  // namespace btp::bt
