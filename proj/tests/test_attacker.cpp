#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <optional>

#include "tapsim/attacker.hpp"
#include "tapsim/peers.hpp"

using namespace tapsim;

namespace {

struct Rig {
    Simulation sim{808};
    crypto::TlsChannel tls{9};
    NodeId cam = 0, cloud_id = 0, app_id = 0, client_id = 0, attacker_id = 0;
    std::optional<Camera> camera;
    std::optional<CloudStub> cloud;
    std::optional<AppClient> app;
    std::optional<ThirdPartyClient> client;
    std::optional<Flooder> flooder;

    Rig() {
        cam = sim.register_node("camera");
        cloud_id = sim.register_node("cloud");
        app_id = sim.register_node("app");
        client_id = sim.register_node("client");
        attacker_id = sim.register_node("attacker");

        CameraConfig cfg;
        cfg.owner = Credentials{"owner", "hunter2"};
        cfg.media_epoch_seed = 31415;
        cfg.rng_seed = 2;
        cfg.cloud = Endpoint{cloud_id, CloudStub::kPort};
        camera.emplace(sim, cam, cfg, tls);
        sim.set_handler(cam, [this](const Packet& p) { camera->handle_packet(p); });

        cloud.emplace(sim, cloud_id, tls);
        cloud->register_device(cam, "acct");
        cloud->register_app("acct", Endpoint{app_id, AppClient::kCtrlPort});
        sim.set_handler(cloud_id, [this](const Packet& p) { cloud->handle_packet(p); });

        app.emplace(sim, app_id, tls, Credentials{"owner", "hunter2"}, cam, cloud_id);
        sim.set_handler(app_id, [this](const Packet& p) { app->handle_packet(p); });

        client.emplace(sim, client_id);
        sim.set_handler(client_id, [this](const Packet& p) { client->handle_packet(p); });

        flooder.emplace(sim, attacker_id);
        sim.set_handler(attacker_id, [this](const Packet& p) { flooder->handle_packet(p); });
    }

    TapHandle tap_link(NodeId from, NodeId to, const std::string& name) {
        Tap tap;
        tap.name = name;
        tap.location = LinkRef{from, to};
        return sim.attach_tap(std::move(tap));
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

TEST_CASE("extractor reconstructs a third-party session byte for byte") {
    Rig rig;
    const auto tap = rig.tap_link(rig.cam, rig.client_id, "wire");
    rig.provision_and_play();
    rig.sim.step(rig.sim.now() + 5000);

    const auto result = extract_media(rig.sim.tap_capture(tap));
    CHECK_FALSE(result.no_valid_frames);
    CHECK(result.flows == 1);
    const auto generated = rig.camera->rtsp_frames_streamed();
    REQUIRE(generated > 10);
    REQUIRE(result.frames.size() == generated);

    std::vector<MediaFrame> expected;
    for (std::uint32_t i = 0; i < generated; ++i) expected.push_back(rig.camera->media().frame(i));
    CHECK(result.stream_bytes() == serialize_frames(expected));
}

TEST_CASE("extractor finds nothing in an encrypted proprietary capture") {
    Rig rig;
    const auto tap = rig.tap_link(rig.cam, rig.app_id, "wire");
    rig.app->start_stream();
    rig.sim.run_until([&] { return !rig.app->busy(); }, 2000);
    REQUIRE(rig.app->streaming());
    rig.sim.step(rig.sim.now() + 5000);

    const auto capture = rig.sim.tap_capture(tap);
    REQUIRE(capture.size() > 10);  // plenty of traffic on the wire
    const auto result = extract_media(capture);
    CHECK(result.frames.empty());
    CHECK(result.no_valid_frames);
    CHECK(result.candidate_records == 0);  // nothing PLAIN+UDP to chew on
}

TEST_CASE("extractor on an empty capture: empty stream, NoValidFrames") {
    const auto result = extract_media(CaptureFile{});
    CHECK(result.frames.empty());
    CHECK(result.no_valid_frames);
}

TEST_CASE("histogram bins scripted events exactly") {
    // 7 events inside one 600 s bin, none elsewhere
    Rig rig;
    const auto tap = rig.tap_link(rig.cam, rig.cloud_id, "cam-cloud");
    const std::vector<VirtualTime> script{600000, 650000, 700000, 800000, 900000, 1000000, 1100000};
    for (const auto t : script)
        rig.sim.schedule(t, [&rig] { rig.camera->trigger_motion(); });
    rig.sim.step(2000000);

    const auto hist = motion_histogram(rig.sim.tap_capture(tap));
    REQUIRE(hist.bins.size() == 2);  // bins 0 (empty, absent) .. 1
    CHECK(hist.bins[0] == 0);
    CHECK(hist.bins[1] == 7);
    CHECK(hist.total() == 7);

    SUBCASE("csv rendering") {
        CHECK(hist.to_csv() == "bin_start_ms,count\n0,0\n600000,7\n");
    }
    SUBCASE("recount oracle from the capture itself") {
        std::uint64_t expect = 0;
        for (const auto& r : rig.sim.tap_capture(tap).records())
            if (r.channel == Channel::TLS && r.payload.size() == 523) ++expect;
        CHECK(hist.total() == expect);
    }
}

TEST_CASE("histogram ignores wrong sizes, other sources and rejects bad bins") {
    Rig rig;
    const auto tap = rig.tap_link(rig.cam, rig.cloud_id, "cam-cloud");
    rig.camera->trigger_motion();
    // non-motion TLS record of a different length on the same link
    Packet other;
    other.src = Endpoint{rig.cam, 443};
    other.dst = Endpoint{rig.cloud_id, 443};
    other.transport = Transport::TCP;
    other.channel = Channel::TLS;
    other.payload = rig.tls.seal(std::vector<std::uint8_t>(100, 1));
    rig.sim.send(std::move(other));
    rig.sim.step(1000);

    const auto hist = motion_histogram(rig.sim.tap_capture(tap));
    CHECK(hist.total() == 1);

    const auto sized = motion_histogram(rig.sim.tap_capture(tap), 116);  // the other record
    CHECK(sized.total() == 1);

    const auto filtered = motion_histogram(rig.sim.tap_capture(tap), 523, 600, 0, "cloud");
    CHECK(filtered.total() == 0);

    CHECK_THROWS_AS(motion_histogram(rig.sim.tap_capture(tap), 523, 0), BadBinWidth);
    CHECK_THROWS_AS(motion_histogram(rig.sim.tap_capture(tap), 523, -5), BadBinWidth);
}

TEST_CASE("zero matching records yield empty bins") {
    Rig rig;
    const auto tap = rig.tap_link(rig.cam, rig.cloud_id, "cam-cloud");
    rig.sim.step(1000);
    const auto hist = motion_histogram(rig.sim.tap_capture(tap));
    CHECK(hist.bins.empty());
    CHECK(hist.total() == 0);
}

TEST_CASE("suppression drops every notification and nothing else") {
    Rig rig;
    const auto hook = suppress_motion(rig.sim, rig.cam, rig.cloud_id);
    for (int i = 0; i < 5; ++i) {
        rig.camera->trigger_motion();
        rig.sim.step(rig.sim.now() + 100);
    }
    CHECK(rig.sim.hook_drop_count(hook) == 5);
    CHECK(rig.camera->notifications_sent() == 5);
    CHECK(rig.camera->motion_events_recorded() == 5);
    CHECK(rig.app->alert_count() == 0);
    CHECK(rig.cloud->relayed() == 0);

    SUBCASE("non-motion TLS traffic of another length passes through") {
        Packet other;
        other.src = Endpoint{rig.cam, 443};
        other.dst = Endpoint{rig.cloud_id, 443};
        other.transport = Transport::TCP;
        other.channel = Channel::TLS;
        other.payload = rig.tls.seal(std::vector<std::uint8_t>(64, 9));
        rig.sim.send(std::move(other));
        rig.sim.step(rig.sim.now() + 10);
        CHECK(rig.sim.hook_drop_count(hook) == 5);         // unchanged
        CHECK(rig.sim.received_count(rig.cloud_id) == 1);  // it arrived
    }

    SUBCASE("a second hook on the same link is refused") {
        CHECK_THROWS_AS(suppress_motion(rig.sim, rig.cam, rig.cloud_id), HookConflict);
    }
}

TEST_CASE("hook removed after 2 of 5 motions lets exactly 3 alerts through") {
    Rig rig;
    const auto hook = suppress_motion(rig.sim, rig.cam, rig.cloud_id);
    for (int i = 0; i < 2; ++i) {
        rig.camera->trigger_motion();
        rig.sim.step(rig.sim.now() + 100);
    }
    rig.sim.remove_hook(hook);
    for (int i = 0; i < 3; ++i) {
        rig.camera->trigger_motion();
        rig.sim.step(rig.sim.now() + 100);
    }
    CHECK(rig.sim.hook_drop_count(hook) == 2);
    CHECK(rig.app->alert_count() == 3);
}

TEST_CASE("flood above the threshold crashes the camera within one window") {
    Rig rig;  // R=200, W=5 s
    rig.sim.step(1000);
    rig.flooder->start(Endpoint{rig.cam, Camera::kControlPort}, 100, 10);
    rig.sim.run_until([&] { return !rig.camera->running(); }, 20000);

    REQUIRE_FALSE(rig.camera->running());
    REQUIRE(rig.camera->crash_history().size() == 1);
    const auto crash = rig.camera->crash_history()[0];
    // the 201st request lands 2.0 s into the flood, well within one window
    CHECK(crash.from >= 1000);
    CHECK(crash.from <= 1000 + 5000);
    CHECK(rig.flooder->requests_sent() >= 201);

    SUBCASE("flooding a crashed camera does not move the reboot time") {
        const auto reboot = crash.until;
        rig.flooder->handle_packet(Packet{});  // keep the object warm; no-op
        rig.sim.step(rig.sim.now() + 3000);    // flood continues while crashed
        CHECK(rig.camera->reboot_at() == reboot);
        CHECK(rig.camera->crash_history().size() == 1);
        rig.sim.step(reboot + 1);
        CHECK(rig.camera->running());
    }
}

TEST_CASE("flood below the threshold leaves the camera running") {
    Rig rig;
    rig.flooder->start(Endpoint{rig.cam, Camera::kControlPort}, 10, 10);
    rig.sim.step(20000);
    CHECK(rig.flooder->requests_sent() == 100);
    CHECK(rig.camera->running());
    CHECK(rig.camera->crash_history().empty());
}
