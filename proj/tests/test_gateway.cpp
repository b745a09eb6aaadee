#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <optional>

#include "tapsim/attacker.hpp"
#include "tapsim/gateway.hpp"
#include "tapsim/peers.hpp"

using namespace tapsim;

namespace {

crypto::Key32 test_psk() {
    crypto::Key32 k{};
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<std::uint8_t>(i * 3 + 1);
    return k;
}

// camera behind the gateway, third-party client on the open side
struct GwRig {
    Simulation sim{616};
    crypto::TlsChannel tls{20};
    NodeId cam = 0, cloud_id = 0, app_id = 0, client_id = 0, gw = 0;
    std::optional<Camera> camera;
    std::optional<CloudStub> cloud;
    std::optional<AppClient> app;
    std::optional<ThirdPartyClient> client;
    std::optional<Gateway> gateway;

    explicit GwRig(bool with_gateway = true) {
        cam = sim.register_node("camera");
        cloud_id = sim.register_node("cloud");
        app_id = sim.register_node("app");
        client_id = sim.register_node("client");

        CameraConfig cfg;
        cfg.owner = Credentials{"owner", "hunter2"};
        cfg.media_epoch_seed = 2718;
        cfg.rng_seed = 4;
        cfg.cloud = Endpoint{cloud_id, CloudStub::kPort};
        camera.emplace(sim, cam, cfg, tls);
        sim.set_handler(cam, [this](const Packet& p) { camera->handle_packet(p); });

        cloud.emplace(sim, cloud_id, tls);
        cloud->register_device(cam, "acct");
        sim.set_handler(cloud_id, [this](const Packet& p) { cloud->handle_packet(p); });

        app.emplace(sim, app_id, tls, Credentials{"owner", "hunter2"}, cam, cloud_id);
        sim.set_handler(app_id, [this](const Packet& p) { app->handle_packet(p); });

        client.emplace(sim, client_id);
        sim.set_handler(client_id, [this](const Packet& p) { client->handle_packet(p); });

        if (with_gateway) {
            gw = sim.register_node("gateway");
            sim.set_transit(cam, gw);
            gateway.emplace(sim, gw, cam, test_psk());
            sim.set_handler(gw, [this](const Packet& p) { gateway->handle_packet(p); });
            client->enable_gateway_decrypt(test_psk(), gw);
        }
    }

    void provision_and_play() {
        app->start_login();
        sim.run_until([&] { return !app->busy(); }, sim.now() + 2000);
        app->start_create_third_party_user("cam", "pw");
        sim.run_until([&] { return !app->busy(); }, sim.now() + 2000);
        client->start_play("rtsp://cam:pw@camera/stream/1");
        sim.run_until([&] { return !client->busy(); }, sim.now() + 2000);
        REQUIRE(client->status() == PeerStatus::OK);
    }
};

}  // namespace

TEST_CASE("classify mirrors the firewall predicate") {
    Simulation sim(2);
    const auto cam = sim.register_node("camera");
    const auto client = sim.register_node("client");
    const auto gw_id = sim.register_node("gateway");
    Gateway gw(sim, gw_id, cam, test_psk());

    Packet p;
    p.src = Endpoint{cam, Camera::kMediaPort};
    p.dst = Endpoint{client, 9002};
    p.transport = Transport::UDP;
    CHECK(gw.classify(p) == GatewayDecision::INTERCEPT);

    p.fragmented = true;
    CHECK(gw.classify(p) == GatewayDecision::DROP_FRAGMENT);

    p.fragmented = false;
    p.transport = Transport::TCP;
    CHECK(gw.classify(p) == GatewayDecision::FORWARD);

    p.transport = Transport::UDP;
    p.src.node = client;  // not camera-side ingress
    CHECK(gw.classify(p) == GatewayDecision::FORWARD);
    p.fragmented = true;  // fragments only dropped on the camera side
    CHECK(gw.classify(p) == GatewayDecision::FORWARD);
}

TEST_CASE("sealed payload round trip, address preservation, source rewrite") {
    GwRig rig;
    std::vector<Packet> at_client;
    rig.sim.set_handler(rig.client_id,
                        [&at_client](const Packet& p) { at_client.push_back(p); });

    Packet media;
    media.src = Endpoint{rig.cam, Camera::kMediaPort};
    media.dst = Endpoint{rig.client_id, 9002};
    media.transport = Transport::UDP;
    media.payload = serialize_frame(rig.camera->media().frame(0));
    rig.sim.send(media);
    rig.sim.step(10);

    REQUIRE(at_client.size() == 1);
    const auto& sealed = at_client[0];
    CHECK(sealed.src.node == rig.gw);  // re-sent from the gateway
    CHECK(sealed.dst == media.dst);    // destination and port preserved
    CHECK(sealed.transport == Transport::UDP);
    CHECK(sealed.payload != media.payload);
    CHECK(sealed.payload.size() == media.payload.size() + crypto::kAeadOverhead);

    // the wire bytes carry no parseable frame
    CHECK(parse_frames(sealed.payload).frames.empty());

    // but the pre-shared key recovers the original application payload
    const auto opened = crypto::aead_open(test_psk(), sealed.payload);
    REQUIRE(opened);
    CHECK(*opened == media.payload);
}

TEST_CASE("client decryptor delivers original bytes, rejects tampering, skips others") {
    ClientDecryptor dec(test_psk(), /*gateway=*/7);
    crypto::Nonce12 nonce{};
    const auto pt = to_bytes("frame bytes");
    Packet p;
    p.src = Endpoint{7, Gateway::kUdpPort};
    p.dst = Endpoint{1, 9002};
    p.transport = Transport::UDP;
    p.payload = crypto::aead_seal(test_psk(), nonce, pt);

    std::vector<std::uint8_t> out;
    CHECK(dec.try_unseal(p, out) == ClientDecryptor::Result::OK);
    CHECK(out == pt);
    CHECK(dec.unsealed() == 1);

    auto tampered = p;
    tampered.payload[20] ^= 0x80;
    CHECK(dec.try_unseal(tampered, out) == ClientDecryptor::Result::AUTH_FAIL);
    CHECK(dec.auth_failures() == 1);

    auto foreign = p;
    foreign.src.node = 3;
    CHECK(dec.try_unseal(foreign, out) == ClientDecryptor::Result::NOT_MINE);
    auto tcp = p;
    tcp.transport = Transport::TCP;
    CHECK(dec.try_unseal(tcp, out) == ClientDecryptor::Result::NOT_MINE);
}

TEST_CASE("end to end: gateway is transparent to the player") {
    GwRig with_gw(true);
    with_gw.provision_and_play();
    with_gw.sim.step(with_gw.sim.now() + 4000);
    const auto protected_stream = with_gw.client->received_stream_bytes();
    REQUIRE(with_gw.client->received_frames().size() > 10);

    GwRig without_gw(false);
    without_gw.provision_and_play();
    without_gw.sim.step(without_gw.sim.now() + 4000);
    const auto open_stream = without_gw.client->received_stream_bytes();

    CHECK(protected_stream == open_stream);
    CHECK(with_gw.client->decryptor_auth_failures() == 0);
}

TEST_CASE("capture between gateway and client defeats the extractor") {
    GwRig rig;
    Tap tap;
    tap.name = "gw-client";
    tap.location = LinkRef{rig.gw, rig.client_id};
    const auto h = rig.sim.attach_tap(std::move(tap));

    rig.provision_and_play();
    rig.sim.step(rig.sim.now() + 4000);

    const auto& capture = rig.sim.tap_capture(h);
    REQUIRE(capture.size() > 10);
    const auto result = extract_media(capture);
    CHECK(result.candidate_records > 10);  // plenty of PLAIN UDP to look at
    CHECK(result.frames.empty());
    CHECK(result.no_valid_frames);

    // meanwhile the capture on the camera side still leaks (the gateway is
    // the boundary, not the camera)
    const auto& counters = rig.gateway->counters();
    CHECK(counters.intercepted == counters.sealed);
    CHECK(counters.intercepted == rig.client->decryptor_unsealed());
    CHECK(rig.client->received_frames().size() == counters.sealed);
}

TEST_CASE("camera-origin fragments die at the gateway") {
    GwRig rig;
    Tap tap;
    tap.name = "gw-client";
    tap.location = LinkRef{rig.gw, rig.client_id};
    const auto h = rig.sim.attach_tap(std::move(tap));

    for (int i = 0; i < 3; ++i) {
        Packet frag;
        frag.src = Endpoint{rig.cam, Camera::kMediaPort};
        frag.dst = Endpoint{rig.client_id, 9002};
        frag.transport = Transport::UDP;
        frag.fragmented = true;
        frag.payload = rig.sim.rng().bytes(100);
        rig.sim.send(std::move(frag));
    }
    rig.sim.step(100);

    CHECK(rig.gateway->counters().dropped_fragments == 3);
    for (const auto& r : rig.sim.tap_capture(h).records()) CHECK_FALSE(r.fragmented);
    CHECK(rig.sim.received_count(rig.client_id) == 0);
}

TEST_CASE("control plane passes the gateway untouched in both directions") {
    GwRig rig;
    rig.app->start_login();
    rig.sim.run_until([&] { return !rig.app->busy(); }, 2000);
    CHECK(rig.app->status() == PeerStatus::OK);  // login crossed the gateway twice
    CHECK(rig.gateway->counters().forwarded >= 2);
    CHECK(rig.gateway->counters().intercepted == 0);  // TCP is never sealed
}

TEST_CASE("non-gateway UDP traffic bypasses the decryptor untouched") {
    GwRig rig;
    rig.provision_and_play();
    rig.sim.step(rig.sim.now() + 1000);
    const auto frames_before = rig.client->received_frames().size();
    const auto malformed_before = rig.client->malformed_datagrams();

    // cloud (not the gateway) throws junk UDP at the client's media port
    Packet junk;
    junk.src = Endpoint{rig.cloud_id, 1234};
    junk.dst = Endpoint{rig.client_id, ThirdPartyClient::kMediaPort};
    junk.transport = Transport::UDP;
    junk.payload = rig.sim.rng().bytes(64);
    rig.sim.send(std::move(junk));
    rig.sim.step(rig.sim.now() + 10);

    CHECK(rig.client->decryptor_auth_failures() == 0);        // decryptor not consulted
    CHECK(rig.client->malformed_datagrams() == malformed_before + 1);
    CHECK(rig.client->received_frames().size() >= frames_before);
}

TEST_CASE("a tampered sealed datagram is counted and withheld from the player") {
    GwRig rig;

    MitmHook hook;  // attacker flips a bit between gateway and client
    hook.link = LinkRef{rig.gw, rig.client_id};
    hook.action = HookAction::MODIFY;
    hook.match = [](const Packet& p) { return p.transport == Transport::UDP; };
    hook.transform = [](Packet p) {
        if (!p.payload.empty()) p.payload[p.payload.size() / 2] ^= 0x01;
        return p;
    };
    rig.sim.attach_hook(std::move(hook));

    rig.provision_and_play();
    rig.sim.step(rig.sim.now() + 2000);

    CHECK(rig.client->decryptor_auth_failures() > 0);
    CHECK(rig.client->received_frames().empty());
}
