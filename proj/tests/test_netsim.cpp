#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "tapsim/netsim.hpp"

using namespace tapsim;

namespace {

Packet make_packet(Endpoint src, Endpoint dst, Transport tr = Transport::UDP,
                   Channel ch = Channel::PLAIN, std::vector<std::uint8_t> payload = {1, 2, 3}) {
    Packet p;
    p.src = src;
    p.dst = dst;
    p.transport = tr;
    p.channel = ch;
    p.payload = std::move(payload);
    return p;
}

}  // namespace

TEST_CASE("node registration is ordered and rejects duplicates") {
    Simulation sim(1);
    CHECK(sim.register_node("camera") == 1);
    CHECK(sim.register_node("cloud") == 2);
    for (int i = 3; i <= 5; ++i)
        CHECK(sim.register_node("n" + std::to_string(i)) == i);
    CHECK_THROWS_AS(sim.register_node("camera"), DuplicateNode);
    CHECK(sim.node_id("cloud") == 2);
    CHECK_THROWS_AS(sim.node_id("nope"), UnknownNode);
    CHECK(sim.node_name(1) == "camera");
}

TEST_CASE("single send is delivered exactly once after the link latency") {
    Simulation sim(1);
    const auto a = sim.register_node("a");
    const auto b = sim.register_node("b");
    const auto receipt = sim.send(make_packet({a, 10}, {b, 20}));
    CHECK(receipt.deliver_at == 1);
    CHECK(sim.inbox(b).empty());

    const auto delivered = sim.step(10);
    REQUIRE(delivered.size() == 1);
    CHECK(delivered[0].payload == std::vector<std::uint8_t>{1, 2, 3});
    CHECK(sim.inbox(b).size() == 1);
    CHECK(sim.now() == 10);
}

TEST_CASE("send rejects unknown nodes and bad ports") {
    Simulation sim(1);
    const auto a = sim.register_node("a");
    CHECK_THROWS_AS(sim.send(make_packet({a, 10}, {42, 20})), UnknownNode);
    CHECK_THROWS_AS(sim.send(make_packet({a, 0}, {a, 20})), SimError);
}

TEST_CASE("step rejects clock regression; empty step yields nothing") {
    Simulation sim(1);
    sim.register_node("a");
    CHECK(sim.step(5).empty());
    CHECK_THROWS_AS(sim.step(4), ClockRegression);
}

TEST_CASE("100 packets arrive in send order (reference FIFO model)") {
    Simulation sim(7);
    const auto a = sim.register_node("a");
    const auto b = sim.register_node("b");

    std::vector<std::vector<std::uint8_t>> reference;
    for (int i = 0; i < 100; ++i) {
        std::vector<std::uint8_t> payload{static_cast<std::uint8_t>(i),
                                          static_cast<std::uint8_t>(i >> 8)};
        reference.push_back(payload);
        sim.send(make_packet({a, 1}, {b, 2}, Transport::UDP, Channel::PLAIN, payload));
    }
    const auto delivered = sim.step(100);
    REQUIRE(delivered.size() == 100);
    for (int i = 0; i < 100; ++i) CHECK(delivered[static_cast<std::size_t>(i)].payload == reference[static_cast<std::size_t>(i)]);
}

TEST_CASE("deliveries are globally ordered by (time, seq): brute-force oracle") {
    // interleaved sends from two nodes at varying times
    Simulation sim(11);
    const auto a = sim.register_node("a");
    const auto b = sim.register_node("b");
    const auto c = sim.register_node("c");
    DetRng rng(99);

    struct Expected {
        VirtualTime at;
        std::uint64_t seq;
    };
    std::vector<Expected> expected;

    VirtualTime t = 0;
    for (int round = 0; round < 50; ++round) {
        t += static_cast<VirtualTime>(rng.below(3));
        sim.step(t);
        const int burst = 1 + static_cast<int>(rng.below(3));
        for (int i = 0; i < burst; ++i) {
            const auto src = rng.below(2) == 0 ? a : b;
            const auto receipt = sim.send(make_packet({src, 5}, {c, 6}));
            expected.push_back({receipt.deliver_at, receipt.seq});
        }
    }
    sim.step(t + 10);

    std::stable_sort(expected.begin(), expected.end(), [](const Expected& x, const Expected& y) {
        return std::tie(x.at, x.seq) < std::tie(y.at, y.seq);
    });
    const auto& delivered = sim.delivery_log();
    REQUIRE(delivered.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(delivered[i].packet.seq == expected[i].seq);

    // clock monotonicity over the delivery log
    const auto& log = sim.delivery_log();
    for (std::size_t i = 1; i < log.size(); ++i) CHECK(log[i].at >= log[i - 1].at);
}

TEST_CASE("two packets with equal delivery time break ties by seq") {
    Simulation sim(3);
    const auto a = sim.register_node("a");
    const auto b = sim.register_node("b");
    const auto first = sim.send(make_packet({a, 1}, {b, 2}));
    const auto second = sim.send(make_packet({a, 1}, {b, 2}));
    REQUIRE(first.deliver_at == second.deliver_at);
    const auto delivered = sim.step(5);
    REQUIRE(delivered.size() == 2);
    CHECK(delivered[0].seq < delivered[1].seq);
    CHECK(delivered[0].seq == first.seq);
}

TEST_CASE("taps capture matching packets without altering delivery") {
    Simulation sim(5);
    const auto a = sim.register_node("a");
    const auto b = sim.register_node("b");

    Tap tap;
    tap.name = "wire";
    tap.location = LinkRef{a, b};
    const auto h = sim.attach_tap(std::move(tap));

    for (int i = 0; i < 3; ++i) sim.send(make_packet({a, 1}, {b, 2}));
    sim.step(5);
    CHECK(sim.tap_capture(h).size() == 3);
    CHECK(sim.inbox(b).size() == 3);

    SUBCASE("filtered tap only counts matching transport") {
        Tap udp_only;
        udp_only.name = "udp";
        udp_only.location = LinkRef{a, b};
        udp_only.filter = [](const Packet& p) { return p.transport == Transport::UDP; };
        const auto h2 = sim.attach_tap(std::move(udp_only));
        sim.send(make_packet({a, 1}, {b, 2}, Transport::UDP));
        sim.send(make_packet({a, 1}, {b, 2}, Transport::UDP));
        sim.send(make_packet({a, 1}, {b, 2}, Transport::TCP));
        sim.step(10);
        CHECK(sim.tap_capture(h2).size() == 2);
    }
}

TEST_CASE("tap at an unknown location is refused") {
    Simulation sim(1);
    sim.register_node("a");
    Tap tap;
    tap.name = "x";
    tap.location = LinkRef{1, 2};
    CHECK_THROWS_AS(sim.attach_tap(std::move(tap)), UnknownLocation);
}

TEST_CASE("node-located tap sees both directions") {
    Simulation sim(5);
    const auto a = sim.register_node("a");
    const auto b = sim.register_node("b");
    Tap tap;
    tap.name = "at-b";
    tap.location = b;
    const auto h = sim.attach_tap(std::move(tap));
    sim.send(make_packet({a, 1}, {b, 2}));
    sim.send(make_packet({b, 2}, {a, 1}));
    sim.step(5);
    CHECK(sim.tap_capture(h).size() == 2);
}

TEST_CASE("tap record count equals delivered matching count over a random scenario") {
    Simulation sim(13);
    const auto a = sim.register_node("a");
    const auto b = sim.register_node("b");
    const auto c = sim.register_node("c");
    Tap tap;
    tap.name = "ab";
    tap.location = LinkRef{a, b};
    tap.filter = [](const Packet& p) { return p.channel == Channel::TLS; };
    const auto h = sim.attach_tap(std::move(tap));

    DetRng rng(4242);
    for (int i = 0; i < 200; ++i) {
        const auto dst = rng.below(2) == 0 ? b : c;
        const auto ch = rng.below(2) == 0 ? Channel::TLS : Channel::PLAIN;
        sim.send(make_packet({a, 1}, {dst, 2}, Transport::UDP, ch));
        if (rng.below(4) == 0) sim.step(sim.now() + 1);
    }
    sim.step(sim.now() + 10);

    // recount from the delivery log
    std::size_t expected = 0;
    for (const auto& e : sim.delivery_log())
        if (e.fate == Simulation::Fate::DELIVERED && e.hop == LinkRef{a, b} &&
            e.packet.channel == Channel::TLS)
            ++expected;
    CHECK(sim.tap_capture(h).size() == expected);
}

TEST_CASE("taps are side-effect-free: delivery log identical with and without") {
    auto run = [](bool with_tap) {
        Simulation sim(21);
        const auto a = sim.register_node("a");
        const auto b = sim.register_node("b");
        if (with_tap) {
            Tap tap;
            tap.name = "t";
            tap.location = LinkRef{a, b};
            sim.attach_tap(std::move(tap));
        }
        DetRng rng(5);
        for (int i = 0; i < 100; ++i) {
            sim.send(make_packet({a, 1}, {b, 2}, Transport::UDP, Channel::PLAIN,
                                 rng.bytes(1 + rng.below(32))));
            if (i % 7 == 0) sim.step(sim.now() + 2);
        }
        sim.step(sim.now() + 5);
        std::vector<std::tuple<VirtualTime, std::uint64_t, std::size_t>> log;
        for (const auto& e : sim.delivery_log())
            log.emplace_back(e.at, e.packet.seq, e.packet.payload.size());
        return log;
    };
    CHECK(run(false) == run(true));
}

TEST_CASE("DROP hook removes matching packets and counts them") {
    Simulation sim(9);
    const auto a = sim.register_node("a");
    const auto b = sim.register_node("b");

    MitmHook hook;
    hook.link = LinkRef{a, b};
    hook.action = HookAction::DROP;
    hook.match = [](const Packet& p) { return p.payload.size() == 5; };
    const auto h = sim.attach_hook(std::move(hook));

    sim.send(make_packet({a, 1}, {b, 2}, Transport::UDP, Channel::PLAIN, {1, 2, 3, 4, 5}));
    sim.send(make_packet({a, 1}, {b, 2}, Transport::UDP, Channel::PLAIN, {1, 2}));
    sim.step(5);

    CHECK(sim.hook_drop_count(h) == 1);
    CHECK(sim.inbox(b).size() == 1);
    CHECK(sim.inbox(b)[0].payload.size() == 2);

    SUBCASE("only one hook per link") {
        MitmHook second;
        second.link = LinkRef{a, b};
        second.action = HookAction::OBSERVE;
        CHECK_THROWS_AS(sim.attach_hook(std::move(second)), HookConflict);
    }
    SUBCASE("removing the hook restores delivery") {
        sim.remove_hook(h);
        sim.send(make_packet({a, 1}, {b, 2}, Transport::UDP, Channel::PLAIN, {9, 9, 9, 9, 9}));
        sim.step(10);
        CHECK(sim.inbox(b).size() == 2);
        CHECK(sim.hook_drop_count(h) == 1);
    }
}

TEST_CASE("MODIFY hook rewrites packets in flight; OBSERVE counts them") {
    Simulation sim(9);
    const auto a = sim.register_node("a");
    const auto b = sim.register_node("b");

    MitmHook hook;
    hook.link = LinkRef{a, b};
    hook.action = HookAction::MODIFY;
    hook.transform = [](Packet p) {
        p.payload.push_back(0xff);
        return p;
    };
    sim.attach_hook(std::move(hook));
    sim.send(make_packet({a, 1}, {b, 2}));
    sim.step(5);
    REQUIRE(sim.inbox(b).size() == 1);
    CHECK(sim.inbox(b)[0].payload.back() == 0xff);

    MitmHook observer;
    observer.link = LinkRef{b, a};
    observer.action = HookAction::OBSERVE;
    const auto h = sim.attach_hook(std::move(observer));
    sim.send(make_packet({b, 2}, {a, 1}));
    sim.step(10);
    CHECK(sim.hook_observe_count(h) == 1);
    CHECK(sim.inbox(a).size() == 1);
}

TEST_CASE("conservation: every send is delivered or attributed to a drop") {
    Simulation sim(31);
    const auto a = sim.register_node("a");
    const auto b = sim.register_node("b");
    const auto c = sim.register_node("c");

    MitmHook hook;
    hook.link = LinkRef{a, c};
    hook.action = HookAction::DROP;
    const auto h = sim.attach_hook(std::move(hook));

    DetRng rng(17);
    std::uint64_t sent = 0;
    for (int i = 0; i < 500; ++i) {
        const auto dst = rng.below(3) == 0 ? c : b;
        sim.send(make_packet({a, 1}, {dst, 2}));
        ++sent;
        if (rng.below(5) == 0) sim.step(sim.now() + 1);
    }
    sim.step(sim.now() + 5);

    std::uint64_t delivered = 0;
    for (const auto& e : sim.delivery_log())
        if (e.fate == Simulation::Fate::DELIVERED) ++delivered;
    CHECK(delivered + sim.hook_drop_count(h) == sent);
    CHECK(sim.received_count(b) + sim.received_count(c) == delivered);
}

TEST_CASE("transit routing carries both directions through the middle node") {
    Simulation sim(77);
    const auto cam = sim.register_node("camera");
    const auto client = sim.register_node("client");
    const auto gw = sim.register_node("gateway");
    sim.set_transit(cam, gw);

    std::vector<Packet> at_gw;
    sim.set_handler(gw, [&](const Packet& p) {
        at_gw.push_back(p);
        sim.send_from(gw, p);  // plain forwarder
    });

    sim.send(make_packet({cam, 1}, {client, 2}));   // outbound leg
    sim.send(make_packet({client, 2}, {cam, 1}));   // inbound leg
    sim.step(10);

    CHECK(at_gw.size() == 2);
    CHECK(sim.inbox(client).size() == 1);
    CHECK(sim.inbox(cam).size() == 1);
    // headers stay intact across the transit hop
    CHECK(sim.inbox(client)[0].src.node == cam);
    CHECK(sim.inbox(cam)[0].src.node == client);

    // a tap between gateway and client sees the forwarded packet
    Tap tap;
    tap.name = "gw-client";
    tap.location = LinkRef{gw, client};
    const auto h = sim.attach_tap(std::move(tap));
    sim.send(make_packet({cam, 1}, {client, 2}));
    sim.step(20);
    CHECK(sim.tap_capture(h).size() == 1);
}

TEST_CASE("identical scenario and seed produce byte-identical captures") {
    auto run = [] {
        Simulation sim(1234);
        const auto a = sim.register_node("a");
        const auto b = sim.register_node("b");
        Tap tap;
        tap.name = "t";
        tap.location = LinkRef{a, b};
        const auto h = sim.attach_tap(std::move(tap));
        for (int i = 0; i < 50; ++i) {
            sim.send(make_packet({a, 1}, {b, 2}, Transport::UDP, Channel::PLAIN,
                                 sim.rng().bytes(8 + sim.rng().below(64))));
            sim.step(sim.now() + 1);
        }
        sim.step(sim.now() + 5);
        return sim.tap_capture(h).to_jsonl();
    };
    CHECK(run() == run());
}

TEST_CASE("capture JSONL round trip preserves records and validates input") {
    Simulation sim(2);
    const auto a = sim.register_node("alpha");
    const auto b = sim.register_node("beta");
    Tap tap;
    tap.name = "t";
    tap.location = LinkRef{a, b};
    const auto h = sim.attach_tap(std::move(tap));
    sim.send(make_packet({a, 443}, {b, 8080}, Transport::TCP, Channel::TLS, {0xde, 0xad}));
    sim.step(5);

    const auto text = sim.tap_capture(h).to_jsonl();
    CHECK(text.find("\"src\":\"alpha:443\"") != std::string::npos);
    CHECK(text.find("\"channel\":\"TLS\"") != std::string::npos);
    CHECK(text.find("\"len\":2") != std::string::npos);

    const auto loaded = CaptureFile::from_jsonl(text);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded.records()[0].payload == std::vector<std::uint8_t>{0xde, 0xad});
    CHECK(loaded.records()[0].src_node() == "alpha");

    SUBCASE("len mismatch is rejected") {
        auto bad = text;
        bad.replace(bad.find("\"len\":2"), 7, "\"len\":3");
        CHECK_THROWS_AS(CaptureFile::from_jsonl(bad), CaptureError);
    }
    SUBCASE("unsorted records are rejected") {
        auto line = text.substr(0, text.find('\n') + 1);
        auto earlier = line;
        earlier.replace(earlier.find("\"ts\":1"), 6, "\"ts\":0");
        CHECK_THROWS_AS(CaptureFile::from_jsonl(line + earlier), CaptureError);
    }
    SUBCASE("garbage line is rejected") {
        CHECK_THROWS_AS(CaptureFile::from_jsonl("{not json}\n"), CaptureError);
    }
}
