#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "btpilot/intent/dispatch.hpp"
#include "btpilot/intent/interpret.hpp"
#include "btpilot/intent/llm.hpp"

using namespace btp;
using namespace btp::intent;
using drivers::Connectivity;

namespace {

const std::string kFixtures = std::string(BTPILOT_DATA_DIR) + "/fixtures/llm";

RuntimeContext drone(OpState s, double battery) {
    RuntimeContext c;
    c.robot = RobotKind::Drone;
    c.status.kind = RobotKind::Drone;
    c.status.op_state = s;
    c.status.battery = battery;
    return c;
}

RuntimeContext legged(OpState s, double battery) {
    RuntimeContext c = drone(s, battery);
    c.robot = RobotKind::Legged;
    c.status.kind = RobotKind::Legged;
    return c;
}

InterpretedCommand ref(std::string_view q, const RuntimeContext& ctx = drone(OpState::Flying, 90)) {
    ReferenceInterpreter r;
    return interpret(q, ctx, r);
}

std::string tool_of(std::string_view q) { return reference_interpret(q).tool_name(); }

}  // namespace

TEST_CASE("reference grammar covers the scenario utterances") {
    CHECK(tool_of("Jump") == "none");
    CHECK(tool_of("Do a Flip") == "flip");
    CHECK(tool_of("What is the battery level?") == "get_status");
    CHECK(tool_of("Can I do a flip with the drone?") == "get_status");
    CHECK(tool_of("Which actions can I perform with the drone?") == "list_capabilities");
    CHECK(tool_of("What is the status of the drone?") == "get_status");
    CHECK(tool_of("What are the common causes that I get unknown status?") == "get_status");
    CHECK(tool_of("Turn left for 5 sec.") == "move");
    CHECK(tool_of("Turn right for 3 sec.") == "move");
    CHECK(tool_of("Move forward for 2 sec.") == "move");
    CHECK(tool_of("Move backward for 2 sec with velocity 0.3.") == "move");
    CHECK(tool_of("Change the control to hand gesture.") == "switch_plugin");
    CHECK(tool_of("Change the control to keyboard.") == "switch_plugin");
    CHECK(tool_of("Track the person with a phone") == "track_person");
}

TEST_CASE("reference grammar arguments") {
    SUBCASE("flip defaults forward") {
        auto c = reference_interpret("Do a Flip");
        REQUIRE(c.tool_call());
        CHECK(c.tool_call()->args == nlohmann::json{{"direction", "forward"}});
        CHECK(reference_interpret("flip backwards").tool_call()->args["direction"] == "backward");
    }
    SUBCASE("timed turn") {
        auto c = reference_interpret("Turn left for 5 sec");
        REQUIRE(c.tool_call());
        CHECK(c.tool_call()->args["yaw_rate"].get<double>() == doctest::Approx(0.5));
        CHECK(c.tool_call()->args["duration"].get<double>() == doctest::Approx(5.0));
        auto r = reference_interpret("turn right for five seconds");
        CHECK(r.tool_call()->args["yaw_rate"].get<double>() == doctest::Approx(-0.5));
        CHECK(r.tool_call()->args["duration"].get<double>() == doctest::Approx(5.0));
    }
    SUBCASE("rotation by angle") {
        auto c = reference_interpret("rotate right by 45 degrees");
        REQUIRE(c.tool_call());
        CHECK(c.tool_call()->name == "rotate");
        CHECK(c.tool_call()->args["angle"].get<double>() == doctest::Approx(-std::atan(1.0)));
        CHECK(reference_interpret("turn around").tool_call()->args["angle"].get<double>() ==
              doctest::Approx(std::acos(-1.0)));
    }
    SUBCASE("move with and without velocity") {
        auto a = reference_interpret("Move forward for 2 sec");
        CHECK(a.tool_call()->args == nlohmann::json{{"duration", 2.0}, {"vx", 0.5}});
        auto b = reference_interpret("Move backward for 4 sec with velocity 0.3");
        CHECK(b.tool_call()->args == nlohmann::json{{"duration", 4.0}, {"vx", -0.3}});
        auto c = reference_interpret("go left");
        CHECK(c.tool_call()->args == nlohmann::json{{"duration", 1.0}, {"vy", 0.5}});
    }
    SUBCASE("plugin names") {
        CHECK(reference_interpret("Change the control to hand gesture.").tool_call()->args["plugin"] == "hand_gesture");
        CHECK(reference_interpret("switch the mode to keyboard").tool_call()->args["plugin"] == "keyboard");
        CHECK(reference_interpret("use keyboard control.").tool_call()->args["plugin"] == "keyboard");
        CHECK(reference_interpret("set control mode to manual").tool_call()->args["plugin"] == "none");
        CHECK(reference_interpret("change the control to telepathy").refusal());
    }
    SUBCASE("descriptor normalisation") {
        CHECK(reference_interpret("Track the person with a phone").tool_call()->args["descriptor"] == "phone");
        CHECK(reference_interpret("follow the man holding a smartphone!").tool_call()->args["descriptor"] == "phone");
        CHECK(reference_interpret("track the person").refusal());
    }
    SUBCASE("stand, sit, stop, take off, land") {
        CHECK(tool_of("Stand up") == "stand");
        CHECK(tool_of("sit down") == "sit");
        CHECK(tool_of("HOVER") == "stop");
        CHECK(tool_of("take off") == "take_off");
        CHECK(tool_of("Takeoff now") == "take_off");
        CHECK(tool_of("land the drone") == "land");
    }
    SUBCASE("out of grammar") {
        CHECK(tool_of("please make me a sandwich") == "none");
        CHECK(tool_of("can I make a sandwich") == "none");
    }
}

TEST_CASE("interpret trims, validates and answers info questions") {
    CHECK_THROWS_AS(ref("   \t\n"), EmptyQuery);

    auto jump = ref("  Jump  ");
    CHECK(jump.query == "Jump");
    REQUIRE(jump.refusal());
    CHECK(jump.refusal()->text == "I cannot perform this action.");
    CHECK(jump.refusal()->reason == FailureMode::UnsupportedAction);

    auto battery = ref("What is the battery level?", drone(OpState::Flying, 26));
    REQUIRE(battery.info());
    CHECK(battery.info()->text == "The battery level is 26%");
    CHECK(battery.info()->tool == "get_status");

    auto yes = ref("Can I do a flip with the drone?", drone(OpState::Flying, 26));
    REQUIRE(yes.info());
    CHECK(yes.info()->text == "Yes, since the drone is flying and the battery level is 26%");

    auto no = ref("Can I do a flip with the drone?", drone(OpState::Landed, 10));
    REQUIRE(no.info());
    CHECK(no.info()->text == "No, since the drone is on the ground and the battery level is 10%");

    auto status = ref("What is the status of the drone?", drone(OpState::Landed, 26));
    REQUIRE(status.info());
    CHECK(status.info()->text == "The drone is on the ground with a battery of 26%");

    auto list = ref("Which actions can I perform with the drone?");
    REQUIRE(list.info());
    CHECK(list.info()->text.rfind("You can ", 0) == 0);
    CHECK(list.info()->text.find("do a flip") != std::string::npos);
    CHECK(list.info()->text.find("stand up") == std::string::npos);
    auto list_legged = ref("Which actions can I perform?", legged(OpState::Standing, 80));
    CHECK(list_legged.info()->text.find("stand up") != std::string::npos);
    CHECK(list_legged.info()->text.find("do a flip") == std::string::npos);

    auto disconnected = drone(OpState::Landed, 80);
    disconnected.status.connectivity = Connectivity::Disconnected;
    auto causes = ref("What are the common causes that I get unknown status?", disconnected);
    REQUIRE(causes.info());
    CHECK(causes.info()->text.rfind("The common causes for the robot state being unknown could be ", 0) == 0);

    auto tc = ref("Move forward for 2 sec");
    REQUIRE(tc.tool_call());
    CHECK(tc.tool_call()->args["vy"].get<double>() == 0.0);
    CHECK(tc.tool_call()->args["yaw_rate"].get<double>() == 0.0);

    auto restricted = drone(OpState::Flying, 90);
    restricted.available_tools = {"land", "get_status"};
    auto blocked = ref("Do a Flip", restricted);
    REQUIRE(blocked.refusal());
    CHECK_FALSE(blocked.refusal()->diagnostic.empty());
}

TEST_CASE("behavior selection gates before acting") {
    auto flip = ref("Do a Flip");

    auto ok = select_behavior(flip, drone(OpState::Flying, 90));
    CHECK(ok.pathway() == "driver:flip");
    REQUIRE(std::holds_alternative<DriverCommand>(ok.target));
    CHECK(std::get<DriverCommand>(ok.target).robot == RobotKind::Drone);

    auto grounded = select_behavior(flip, drone(OpState::Landed, 90));
    REQUIRE(grounded.failure());
    CHECK(grounded.failure()->modes == std::vector<FailureMode>{FailureMode::InvalidState});
    CHECK(explain_failure(*grounded.failure()).text == "I cannot do it as the drone is on the ground.");

    auto both = select_behavior(flip, drone(OpState::Landed, 10));
    REQUIRE(both.failure());
    CHECK(both.failure()->modes == std::vector<FailureMode>{FailureMode::LowBattery, FailureMode::InvalidState});
    CHECK(explain_failure(*both.failure()).text == "I cannot do it due to low battery and robot status.");

    auto low = select_behavior(flip, drone(OpState::Flying, 19.9));
    REQUIRE(low.failure());
    CHECK(low.failure()->modes == std::vector<FailureMode>{FailureMode::LowBattery});
    CHECK(explain_failure(*low.failure()).text == "I cannot do it due to low battery.");
    CHECK(select_behavior(flip, drone(OpState::Flying, 20)).pathway() == "driver:flip");

    auto off = drone(OpState::Flying, 90);
    off.status.connectivity = Connectivity::Disconnected;
    auto dc = select_behavior(flip, off);
    REQUIRE(dc.failure());
    CHECK(dc.failure()->modes == std::vector<FailureMode>{FailureMode::Disconnected});

    auto spot = select_behavior(flip, legged(OpState::Standing, 90));
    REQUIRE(spot.failure());
    CHECK(spot.failure()->modes == std::vector<FailureMode>{FailureMode::UnsupportedAction});

    auto gesture = select_behavior(ref("Change the control to hand gesture."), legged(OpState::Standing, 90));
    REQUIRE(std::holds_alternative<PluginActivation>(gesture.target));
    CHECK(std::get<PluginActivation>(gesture.target).plugin_id == "hand_gesture");

    auto track = select_behavior(ref("Track the person with a phone"), drone(OpState::Flying, 90));
    CHECK(std::get<PluginActivation>(track.target) == PluginActivation{"person_tracking", "phone"});
    CHECK(select_behavior(ref("Track the person with a phone"), drone(OpState::Landed, 90)).failure());

    auto status = select_behavior(ref("What is the battery level?"), drone(OpState::Flying, 90));
    CHECK(status.pathway() == "status");

    CHECK_THROWS_AS(select_behavior(ref("Jump"), drone(OpState::Flying, 90)), std::invalid_argument);
    InterpretedCommand bogus{"x", ToolCall{"teleport", {}}, Backend::Reference, {}};
    CHECK_THROWS_AS(select_behavior(bogus, drone(OpState::Flying, 90)), UnknownTool);
}

TEST_CASE("explanations") {
    FailureReport lost{{FailureMode::TargetNotFound}, FailureSource::Plugin, drone(OpState::Flying, 90), "phone"};
    CHECK(explain_failure(lost).text == "No person with a phone detected");
    FailureReport legged_ground{{FailureMode::InvalidState}, FailureSource::Driver, legged(OpState::Sitting, 90), {}};
    CHECK(explain_failure(legged_ground).text.find("robot") != std::string::npos);
    CHECK_THROWS_AS(explain_failure(FailureReport{}), std::invalid_argument);
}

TEST_CASE("explanation completeness over every mode combination") {
    const std::vector<FailureMode> all{FailureMode::LowBattery,   FailureMode::InvalidState,      FailureMode::Disconnected,
                                       FailureMode::UnsupportedAction, FailureMode::TargetNotFound, FailureMode::Busy,
                                       FailureMode::Timeout};
    for (unsigned mask = 1; mask < (1u << all.size()); ++mask) {
        FailureReport r;
        r.context = drone(OpState::Landed, 10);
        r.descriptor = "phone";
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (mask & (1u << i)) r.modes.push_back(all[i]);
        }
        auto e = explain_failure(r);
        CHECK_FALSE(e.text.empty());
        std::set<FailureMode> want(r.modes.begin(), r.modes.end());
        std::set<FailureMode> got(e.modes_covered.begin(), e.modes_covered.end());
        CHECK(want == got);
    }
}

TEST_CASE("refusal totality and determinism on random text") {
    std::mt19937_64 rng(42);
    const std::vector<std::string> words{"do",   "a",     "flip",  "turn", "left", "for",   "5",     "sec",  "move",
                                         "the",  "drone", "jump",  "can",  "i",    "track", "person", "with", "phone",
                                         "land", "take",  "off",   "what", "is",   "battery", "level", "?", "change",
                                         "control", "to",  "keyboard", "stand", "sit", "velocity", "0.3", "around", "by"};
    std::uniform_int_distribution<std::size_t> len(1, 10), pick(0, words.size() - 1);
    std::uniform_int_distribution<int> state(0, 3), bat(0, 100);
    const OpState states[] = {OpState::Landed, OpState::Flying, OpState::Sitting, OpState::Standing};
    for (int i = 0; i < 1000; ++i) {
        std::string q;
        for (std::size_t n = len(rng); n > 0; --n) q += words[pick(rng)] + " ";
        auto ctx = i % 2 ? drone(states[state(rng) % 2], bat(rng)) : legged(states[2 + state(rng) % 2], bat(rng));
        auto a = ref(q, ctx);
        auto b = ref(q, ctx);
        CHECK(a == b);
        CHECK(a.outcome.index() < 3);
        if (a.tool_call() || a.info()) {
            auto d = select_behavior(a, ctx);
            // Gate-before-act: a driver decision implies every gate held.
            if (std::holds_alternative<DriverCommand>(d.target)) {
                CHECK(check_gates(ToolRegistry::standard().at(a.tool_name()).gates, ctx).empty());
            }
        } else {
            CHECK_FALSE(a.refusal()->text.empty());
        }
    }
}

TEST_CASE("interpreted command json round trip") {
    for (const char* q : {"Jump", "Do a Flip", "What is the battery level?"}) {
        auto c = ref(q);
        CHECK(interpreted_from_json(to_json(c)) == c);
    }
}

TEST_CASE("llm adapter with replayed fixtures") {
    auto transport = std::make_shared<FixtureTransport>(kFixtures);
    LlmInterpreter llm(transport, "test-model");
    auto ctx = drone(OpState::Flying, 26);

    SUBCASE("tool call") {
        auto c = interpret("Do a Flip", ctx, llm);
        CHECK(c.backend == Backend::Llm);
        REQUIRE(c.tool_call());
        CHECK(c.tool_call()->name == "flip");
        CHECK(c.say == "Flipping.");
        REQUIRE(transport->requests().size() == 1);
        const auto& body = transport->requests()[0].body;
        CHECK(body["model"] == "test-model");
        const std::string sys = body["messages"][0]["content"];
        CHECK(sys.find(std::string(kToolCallSchema)) != std::string::npos);
        CHECK(sys.find("track_person") != std::string::npos);
        CHECK(body["messages"][1]["content"] == "Do a Flip");
    }
    SUBCASE("none tool refuses") {
        auto c = interpret("Jump", ctx, llm);
        REQUIRE(c.refusal());
        CHECK(c.refusal()->text == "I cannot perform this action.");
    }
    SUBCASE("fenced reply and info answer") {
        auto c = interpret("What is the battery level?", ctx, llm);
        REQUIRE(c.info());
        CHECK(c.info()->text == "The battery level is 26%");
    }
    SUBCASE("malformed replies") {
        for (const char* q : {"Spin like crazy", "Garbage reply", "Fly to the moon", "Move fast"}) {
            auto c = interpret(q, ctx, llm);
            REQUIRE(c.refusal());
            CHECK(c.refusal()->reason == FailureMode::UnsupportedAction);
            CHECK_FALSE(c.refusal()->diagnostic.empty());
        }
    }
    SUBCASE("backend errors surface as timeout refusals") {
        for (const char* q : {"Server down", "Anything else"}) {
            auto c = interpret(q, ctx, llm);
            REQUIRE(c.refusal());
            CHECK(c.refusal()->reason == FailureMode::Timeout);
            CHECK_FALSE(c.refusal()->diagnostic.empty());
        }
    }
    SUBCASE("target selection") {
        CHECK(llm_select_person(*transport, "m", nlohmann::json::array(), "phone") == std::optional<std::string>("p2"));
        CHECK_FALSE(llm_select_person(*transport, "m", nlohmann::json::array(), "hat").has_value());
    }
    SUBCASE("deterministic replay") {
        auto a = interpret("Do a Flip", ctx, llm);
        auto b = interpret("Do a Flip", ctx, llm);
        CHECK(a == b);
    }
}

TEST_CASE("llm transport configuration") {
    CHECK_THROWS_AS(FixtureTransport("/nonexistent/fixtures"), std::invalid_argument);
    HttpTransport http("http://127.0.0.1:9", "", 0.2);
    CHECK_THROWS_AS(http.complete({"interpret", "x", nlohmann::json::object()}), BackendUnavailable);
    CHECK(parse_llm_reply("q", R"({"tool": "land"})").tool_call()->name == "land");
}
