// Tapo C200 emulator.
//
// The camera is a pure state machine driven by packet deliveries and timers:
//  - port 443: stok-authenticated control plane and the proprietary stream
//    ceremony, JSON records over the modeled TLS channel
//  - port 554: RTSP (DESCRIBE/SETUP/PLAY/PAUSE/RECORD/TEARDOWN), plaintext
//  - port 2020: ONVIF device service, an authenticated front door that hands
//    clients the RTSP URI; media then flows exactly as for RTSP
// Motion events produce one fixed-size (523-byte) TLS record to the cloud.
// Request overload crashes the camera for a configurable reboot window, and
// a crash invalidates every stok and session.
#ifndef TAPSIM_CAMERA_HPP
#define TAPSIM_CAMERA_HPP

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tapsim/crypto.hpp"
#include "tapsim/media.hpp"
#include "tapsim/netsim.hpp"

namespace tapsim {

struct Credentials {
    std::string user;
    std::string pass;
};

struct CameraConfig {
    Credentials owner{"owner", "owner-pass"};
    int dos_max_requests = 200;           // R: crash when a window holds more than this
    VirtualTime dos_window_ms = 5000;     // W
    VirtualTime reboot_delay_ms = 30000;  // D
    bool motion_detection = true;
    std::uint64_t media_epoch_seed = 1;
    std::uint64_t rng_seed = 1;
    Endpoint cloud;  // notification sink; node 0 disables notifications
};

// Client-side key derivation for the proprietary stream. The camera keeps its
// own copy of the same arithmetic; tests check both sides agree for any
// (password, nonce).
struct StreamKeys {
    crypto::Key16 key;
    crypto::Iv16 iv;
};

class Camera {
public:
    static constexpr int kControlPort = 443;
    static constexpr int kRtspPort = 554;
    static constexpr int kOnvifPort = 2020;
    static constexpr int kMediaPort = 6970;
    static constexpr std::size_t kNotificationWireLen = 523;
    static constexpr const char* kStreamPath = "/stream/1";
    static constexpr const char* kOnvifPath = "/onvif/device_service";

    enum class SessionState { NONCE_SENT, AUTHENTICATED, STREAMING, CLOSED };

    Camera(Simulation& sim, NodeId self, CameraConfig cfg, crypto::TlsChannel& tls);

    // Wire this as the node handler.
    void handle_packet(const Packet& p);

    // A physical motion event in front of the lens.
    void trigger_motion();

    // Window maintenance and reboot check; safe to call at any time.
    void tick(VirtualTime now);

    // --- introspection (testbed instrumentation) ---
    bool running() const { return running_; }
    std::optional<VirtualTime> reboot_at() const;
    struct CrashInterval {
        VirtualTime from;
        VirtualTime until;
    };
    const std::vector<CrashInterval>& crash_history() const { return crashes_; }
    int motion_events_recorded() const { return motion_recorded_; }
    std::uint64_t notifications_sent() const { return notifications_sent_; }
    const MediaSource& media() const { return media_; }
    std::uint64_t rtsp_frames_streamed() const { return rtsp_frames_; }
    std::uint64_t proprietary_frames_streamed() const { return prop_frames_; }
    std::size_t stored_frames() const { return storage_.size(); }  // RECORD sink
    bool has_third_party_user(const std::string& user) const;
    std::optional<SessionState> proprietary_session_state(const std::string& stok_hex) const;

    NodeId node() const { return self_; }

    // Key schedule for the proprietary stream (camera side).
    static StreamKeys derive_stream_keys(const std::string& password,
                                         std::span<const std::uint8_t> nonce);
    static std::array<std::uint8_t, 32> expected_response_tag(const StreamKeys& keys,
                                                              std::span<const std::uint8_t> nonce);

private:
    struct StreamSession {
        std::uint64_t uid = 0;
        std::vector<std::uint8_t> nonce;
        StreamKeys keys{};
        std::array<std::uint8_t, 32> expected_tag{};
        SessionState state = SessionState::NONCE_SENT;
        Endpoint sink;  // app media endpoint
        std::uint32_t cursor = 0;
    };
    enum class RtspState { INIT, DESCRIBED, READY, PLAYING, RECORDING, PAUSED };
    struct RtspSession {
        std::uint64_t uid = 0;
        RtspState state = RtspState::INIT;
        std::string session_id;  // issued at SETUP
        int client_media_port = 0;
        std::uint32_t cursor = 0;
        std::uint64_t chain = 0;  // bumped on PLAY/PAUSE to retire stale emit timers
    };

    bool note_request(VirtualTime now);  // true when this request crashed the camera
    void crash(VirtualTime now);
    void handle_control(const Packet& p);
    void handle_rtsp(const Packet& p);
    void handle_onvif(const Packet& p);
    void send_control_reply(const Packet& req, const std::string& body_json);
    void send_rtsp_reply(const Packet& req, int code, const std::string& reason,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         const std::string& body);
    void emit_proprietary(std::uint64_t uid);
    void emit_rtsp(std::uint64_t uid, std::uint64_t chain);
    std::string fresh_stok();
    std::string fresh_session_id();

    Simulation& sim_;
    NodeId self_;
    CameraConfig cfg_;
    crypto::TlsChannel& tls_;
    DetRng rng_;
    MediaSource media_;

    bool running_ = true;
    std::uint64_t crash_epoch_ = 0;
    std::optional<VirtualTime> reboot_at_;
    std::vector<CrashInterval> crashes_;
    std::deque<VirtualTime> request_window_;

    std::map<std::string, std::string> stok_table_;       // stok -> user
    std::map<std::string, std::string> third_party_;      // user -> pass
    std::map<std::string, StreamSession> sessions_;       // stok -> proprietary session
    std::map<Endpoint, RtspSession> rtsp_sessions_;       // control endpoint -> session
    std::vector<MediaFrame> storage_;                     // RECORD sink

    std::uint64_t next_uid_ = 1;
    int motion_recorded_ = 0;
    std::uint64_t notifications_sent_ = 0;
    std::uint64_t motion_counter_ = 0;
    std::uint64_t rtsp_frames_ = 0;
    std::uint64_t prop_frames_ = 0;
};

}  // namespace tapsim

#endif
