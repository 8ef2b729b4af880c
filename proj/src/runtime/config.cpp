#include "btpilot/bt/tree_json.hpp"
#include "btpilot/runtime/runtime.hpp"

namespace btp::runtime {

extern const char* const kReferenceTreeJson;

bt::TreeSpec reference_tree() {
    static const bt::TreeSpec spec = bt::parse_tree_spec(nlohmann::json::parse(kReferenceTreeJson));
    return spec;
}

nlohmann::json to_json(const RuntimeConfig& c) {
    const auto& t = c.track;
    return {{"robot", drivers::to_string(c.robot)},
            {"world", world::to_json(c.world)},
            {"initial_state", c.initial_state ? nlohmann::json(drivers::to_string(*c.initial_state)) : nlohmann::json(nullptr)},
            {"connectivity", drivers::to_string(c.connectivity)},
            {"active_plugin", c.active_plugin},
            {"tree", c.tree.nodes.empty() ? nlohmann::json(nullptr) : bt::to_json(c.tree)},
            {"backend", intent::to_string(c.backend)},
            {"llm_model", c.llm_model},
            {"llm_fixtures", c.llm_fixtures},
            {"seed", c.seed},
            {"tick_ms", c.tick_ms},
            {"cog_cost_ms", c.cog_cost_ms},
            {"realtime", c.realtime},
            {"queue_capacity", c.queue_capacity},
            {"track",
             {{"k_yaw", t.k_yaw},
              {"k_fwd", t.k_fwd},
              {"w_ref", t.w_ref},
              {"v_max", t.v_max},
              {"search_rate", t.search_rate},
              {"lost_timeout_ms", t.lost_timeout_ms}}}};
}

RuntimeConfig config_from_json(const nlohmann::json& j) {
    RuntimeConfig c;
    c.robot = drivers::parse_robot_kind(j.value("robot", std::string("drone")));
    if (j.contains("world")) c.world = world::world_from_json(j.at("world"));
    if (j.contains("initial_state") && !j.at("initial_state").is_null()) {
        c.initial_state = drivers::parse_op_state(j.at("initial_state").get<std::string>());
    }
    c.connectivity = drivers::parse_connectivity(j.value("connectivity", std::string("connected")));
    c.active_plugin = j.value("active_plugin", std::string("none"));
    if (j.contains("tree") && !j.at("tree").is_null()) c.tree = bt::parse_tree_spec(j.at("tree"));
    c.backend = intent::parse_backend(j.value("backend", std::string("reference")));
    c.llm_model = j.value("llm_model", c.llm_model);
    c.llm_fixtures = j.value("llm_fixtures", std::string());
    c.seed = j.value("seed", std::uint64_t{0});
    c.tick_ms = j.value("tick_ms", c.tick_ms);
    c.cog_cost_ms = j.value("cog_cost_ms", c.cog_cost_ms);
    c.realtime = j.value("realtime", false);
    c.queue_capacity = j.value("queue_capacity", c.queue_capacity);
    if (j.contains("track")) {
        const auto& t = j.at("track");
        c.track.k_yaw = t.value("k_yaw", c.track.k_yaw);
        c.track.k_fwd = t.value("k_fwd", c.track.k_fwd);
        c.track.w_ref = t.value("w_ref", c.track.w_ref);
        c.track.v_max = t.value("v_max", c.track.v_max);
        c.track.search_rate = t.value("search_rate", c.track.search_rate);
        c.track.lost_timeout_ms = t.value("lost_timeout_ms", c.track.lost_timeout_ms);
    }
    return c;
}

RuntimeConfig config_from_world(const nlohmann::json& doc) {
    RuntimeConfig c;
    c.world = world::world_from_json(doc);
    if (doc.contains("robot")) {
        const auto& r = doc.at("robot");
        if (r.contains("kind")) c.robot = drivers::parse_robot_kind(r.at("kind").get<std::string>());
        if (r.contains("op_state")) c.initial_state = drivers::parse_op_state(r.at("op_state").get<std::string>());
        if (r.contains("connectivity")) c.connectivity = drivers::parse_connectivity(r.at("connectivity").get<std::string>());
        if (r.contains("active_plugin")) c.active_plugin = r.at("active_plugin").get<std::string>();
    }
    return c;
}

}  // namespace btp::runtime
