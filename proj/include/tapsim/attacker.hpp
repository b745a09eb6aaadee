// Insider-attacker toolkit: capture analysis, notification suppression and
// request flooding. Analysis functions are pure functions over capture
// files; the flooder and the suppression hook act on a live simulation.
#ifndef TAPSIM_ATTACKER_HPP
#define TAPSIM_ATTACKER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tapsim/capture.hpp"
#include "tapsim/media.hpp"
#include "tapsim/netsim.hpp"

namespace tapsim {

struct BadBinWidth : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExtractResult {
    std::vector<MediaFrame> frames;
    bool no_valid_frames = false;       // the tool "produced no results"
    std::size_t candidate_records = 0;  // PLAIN UDP records considered
    std::size_t flows = 0;

    std::vector<std::uint8_t> stream_bytes() const { return serialize_frames(frames); }
};

// Reconstructs media from a capture: concatenates the payloads of PLAIN UDP
// records per (src,dst) flow and parses NAL-like frames out of the byte
// stream. An empty frame list is the failure signal, not an error.
ExtractResult extract_media(const CaptureFile& capture);

struct MotionHistogram {
    int bin_width_s = 600;
    VirtualTime origin_ms = 0;
    std::vector<std::uint64_t> bins;

    std::uint64_t total() const;
    std::string to_csv() const;  // header "bin_start_ms,count"
};

// Counts TLS records of exactly `size` bytes per time bin. `src_node`
// restricts to one sender (camera -> cloud direction); empty matches all.
MotionHistogram motion_histogram(const CaptureFile& capture, std::size_t size = 523,
                                 int bin_width_s = 600, VirtualTime origin_ms = 0,
                                 const std::string& src_node = "");

// DROP hook on the camera->cloud link matching exactly the notification
// discipline: TLS, fixed size, camera source. Throws HookConflict if the
// link already has a hook.
HookHandle suppress_motion(Simulation& sim, NodeId camera, NodeId cloud, std::size_t size = 523);

struct FloodReport {
    double rate_per_s = 0;
    double duration_s = 0;
    std::uint64_t requests_sent = 0;
    std::uint64_t responses_received = 0;
    bool target_crashed = false;
    std::optional<VirtualTime> crash_at_ms;
    std::optional<VirtualTime> recovered_at_ms;
    std::optional<VirtualTime> first_failed_legit_ms;  // victim's first unanswered request
};

// Schedules `rate * duration` junk probe packets against the target.
// Drive the simulation afterwards; compose the FloodReport from this
// object plus victim-side observations.
class Flooder {
public:
    static constexpr int kSrcPort = 40001;

    Flooder(Simulation& sim, NodeId self);

    void start(Endpoint target, double rate_per_s, double duration_s);
    void handle_packet(const Packet& p);  // counts anything coming back

    std::uint64_t requests_sent() const { return requests_sent_; }
    std::uint64_t responses_received() const { return responses_; }
    std::optional<VirtualTime> started_at() const { return started_at_; }

private:
    Simulation& sim_;
    NodeId self_;
    std::uint64_t requests_sent_ = 0;
    std::uint64_t responses_ = 0;
    std::optional<VirtualTime> started_at_;
};

}  // namespace tapsim

#endif
