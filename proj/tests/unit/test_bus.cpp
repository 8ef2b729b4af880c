#include <doctest.h>

#include "btpilot/bus/bus.hpp"

using namespace btp::bus;

TEST_CASE("fifo delivery per topic") {
    Bus bus;
    std::vector<int> got;
    bus.subscribe("a", [&](const Message& m) { got.push_back(m.payload.get<int>()); });
    for (int i = 0; i < 5; ++i) bus.publish("a", "t", i);
    bus.publish("b", "t", 99);
    CHECK(got == std::vector{0, 1, 2, 3, 4});
}

TEST_CASE("nested publish is delivered after the current message") {
    Bus bus;
    std::vector<std::string> order;
    bus.subscribe("a", [&](const Message& m) {
        order.push_back("a" + m.payload.dump());
        if (m.payload == 1) bus.publish("a", "t", 3);
    });
    bus.subscribe("*", [&](const Message& m) { order.push_back("*" + m.payload.dump()); });
    bus.publish("a", "t", 1);
    CHECK(order == std::vector<std::string>{"a1", "*1", "a3", "*3"});
}

TEST_CASE("sequence, clock and latest") {
    Bus bus;
    bus.set_clock(4, 300);
    auto& m = bus.publish(topics::kCmdVel, "keyboard", {{"vx", 0.5}});
    CHECK(m.seq == 1);
    CHECK(m.tick == 4);
    CHECK(m.t_ms == 300);
    bus.publish(topics::kCmdVel, "keyboard", {{"vx", 0.0}});
    CHECK(bus.latest(topics::kCmdVel)->payload["vx"] == 0.0);
    CHECK_FALSE(bus.latest("nothing").has_value());
    CHECK(bus.history(topics::kCmdVel).size() == 2);
    CHECK(bus.take_history().size() == 2);
    CHECK(bus.history().empty());
    CHECK(bus.published() == 2);
}

TEST_CASE("unsubscribe and json round trip") {
    Bus bus;
    int n = 0;
    auto id = bus.subscribe("x", [&](const Message&) { ++n; });
    bus.publish("x", "s", nullptr);
    bus.unsubscribe(id);
    bus.publish("x", "s", nullptr);
    CHECK(n == 1);
    Message m{7, "t", "s", 2, 100, {{"k", "v"}}};
    CHECK(message_from_json(to_json(m)) == m);
}
