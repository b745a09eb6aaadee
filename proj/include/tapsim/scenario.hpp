// Scenario configuration, built-in scenarios, and the deterministic runner.
//
// A scenario assembles the testbed (camera, cloud, app, third-party client,
// attacker, optional gateway), schedules every scripted action up front, runs
// the simulation to its virtual duration, then persists captures, runs the
// configured analyses, evaluates the scenario's checks and renders a report.
// Same config + same seed always produces byte-identical artifacts.
#ifndef TAPSIM_SCENARIO_HPP
#define TAPSIM_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tapsim/attacker.hpp"
#include "tapsim/camera.hpp"
#include "tapsim/gateway.hpp"

namespace tapsim {

struct ConfigError : std::runtime_error {
    std::string path;  // offending field, e.g. "gateway.psk"
    ConfigError(std::string field, const std::string& msg)
        : std::runtime_error(field + ": " + msg), path(std::move(field)) {}
};

struct ScenarioConfig {
    std::string name = "custom";
    std::uint64_t seed = 1;
    double duration_s = 10;
    std::string topology = "baseline";  // "baseline" | "gateway"

    // camera parameters
    Credentials owner{"owner", "owner-pass"};
    int dos_max_requests = 200;
    double dos_window_s = 5;
    double reboot_s = 30;
    bool motion_detection = true;

    // provisioned through the app's control plane at scenario start
    std::optional<Credentials> third_party;

    // streaming
    std::string stream_mode = "none";  // none | proprietary | rtsp | onvif
    double stream_start_s = 0.5;
    std::optional<double> stream_stop_s;     // third-party TEARDOWN
    std::optional<double> stream_restart_s;  // second attempt (post-reboot)

    // motion events: an explicit script, or a sampled night curve
    std::vector<double> motion_script_s;
    struct NightCurveSegment {
        double from_per_bin = 0;
        double to_per_bin = 0;
        int bins = 0;
    };
    struct NightCurve {
        int bin_s = 600;
        std::vector<NightCurveSegment> segments;
    };
    std::optional<NightCurve> night_curve;

    struct TapSpec {
        std::string name;
        std::string from;
        std::string to;
    };
    std::vector<TapSpec> taps;

    struct SuppressSpec {
        double from_s = 0;
        std::optional<double> to_s;
    };
    std::optional<SuppressSpec> suppress;

    struct FloodSpec {
        double at_s = 0;
        double rate_per_s = 0;
        double duration_s = 0;
    };
    std::optional<FloodSpec> flood;

    struct GatewaySpec {
        bool enabled = false;
        std::string psk_b64;  // 32 bytes
        std::string camera_addr = "camera";
    };
    std::optional<GatewaySpec> gateway;

    struct FragmentSpec {
        int count = 0;
        double at_s = 0;
    };
    std::optional<FragmentSpec> inject_fragments;

    std::optional<double> probe_period_s;  // app get_settings probes

    struct Analysis {
        std::string extract_tap;    // run the media extractor over this tap
        std::string histogram_tap;  // run the motion oracle over this tap
        std::size_t histogram_size = 523;
        int histogram_bin_s = 600;
    };
    Analysis analysis;

    struct CvssEntry {
        std::string label;
        std::string vector;
    };
    std::vector<CvssEntry> cvss;

    std::vector<std::string> checks;

    void validate() const;  // throws ConfigError
    std::string to_json_text() const;
    static ScenarioConfig from_json_text(const std::string& text);  // throws ConfigError
};

std::vector<std::string> builtin_scenario_names();
ScenarioConfig builtin_scenario(const std::string& name);  // throws ConfigError
bool is_builtin_scenario(const std::string& name);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct RunReport {
    std::string scenario;
    std::uint64_t seed = 0;
    double duration_s = 0;

    struct NodeCount {
        std::string name;
        std::uint64_t sent = 0;
        std::uint64_t received = 0;
    };
    std::vector<NodeCount> nodes;

    struct TapSummary {
        std::string name;
        std::string file;  // relative artifact name, empty when not persisted
        std::size_t records = 0;
    };
    std::vector<TapSummary> taps;

    // attack outcomes (present when the scenario exercises them)
    std::optional<std::size_t> frames_generated;
    std::optional<std::size_t> frames_received;   // by the legitimate client
    std::optional<std::size_t> frames_extracted;  // by the attacker
    std::string client_stream_sha256;
    std::vector<std::uint8_t> client_stream_bytes;  // for byte-identity checks

    std::optional<MotionHistogram> histogram;
    std::vector<std::uint64_t> ground_truth_bins;
    std::string histogram_file;
    std::optional<int> motion_events;
    std::optional<std::uint64_t> notifications_sent;
    std::optional<std::uint64_t> suppressed;
    std::optional<int> app_alerts;

    struct CrashOutcome {
        VirtualTime crashed_at = 0;
        VirtualTime recovered_at = 0;
        std::optional<VirtualTime> first_failed_probe;
    };
    std::vector<CrashOutcome> crashes;
    std::optional<FloodReport> flood;
    std::vector<std::string> probe_outcomes;

    std::optional<GatewayCounters> gateway;
    std::uint64_t gateway_auth_failures = 0;  // client-side unseal rejections

    struct CvssLine {
        std::string label;
        std::string vector;
        double score = 0;
        std::string severity;
    };
    std::vector<CvssLine> cvss;

    std::vector<CheckResult> checks;

    bool all_checks_pass() const;
    std::string to_text() const;
};

// Runs the scenario; when out_dir is nonempty, writes <tap>.jsonl captures,
// histogram.csv (if the oracle ran) and report.txt there.
RunReport run_scenario(const ScenarioConfig& cfg, const std::string& out_dir = "");

}  // namespace tapsim

#endif
