#include "tapsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tapsim/cvss.hpp"
#include "tapsim/peers.hpp"

namespace tapsim {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

VirtualTime to_ms(double seconds) { return static_cast<VirtualTime>(std::llround(seconds * 1000.0)); }

const std::set<std::string>& known_checks() {
    static const std::set<std::string> names{
        "app-frames-match-generator", "client-frames-match-generator",
        "extract-equals-generated",   "extract-empty",
        "transparency",               "gateway-complete",
        "no-fragments-downstream",    "histogram-matches-ground-truth",
        "histogram-night-shape",      "suppression-complete",
        "no-plain-proprietary-media", "aesstream-decrypts",
        "thirdparty-media-all-plain", "dos-crash-recovery",
    };
    return names;
}

const std::set<std::string>& node_names() {
    static const std::set<std::string> names{"camera", "cloud", "app",
                                             "client", "attacker", "gateway"};
    return names;
}

}  // namespace

// ---------------------------------------------------------------------------
// config validation and JSON round trip

void ScenarioConfig::validate() const {
    if (name.empty()) throw ConfigError("name", "must not be empty");
    if (duration_s <= 0) throw ConfigError("duration_s", "must be positive");
    if (topology != "baseline" && topology != "gateway")
        throw ConfigError("topology", "must be 'baseline' or 'gateway'");
    if (topology == "gateway") {
        if (!gateway || !gateway->enabled)
            throw ConfigError("gateway.enabled", "gateway topology needs an enabled gateway");
    }
    if (gateway && gateway->enabled) {
        std::vector<std::uint8_t> psk;
        try {
            psk = base64_decode(gateway->psk_b64);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("gateway.psk", e.what());
        }
        if (psk.size() != 32) throw ConfigError("gateway.psk", "must decode to 32 bytes");
        if (gateway->camera_addr != "camera")
            throw ConfigError("gateway.camera_addr", "unknown camera address");
        if (topology != "gateway")
            throw ConfigError("gateway.enabled", "enabled gateway needs the gateway topology");
    }
    if (dos_max_requests < 1) throw ConfigError("camera.dos_max_requests", "must be >= 1");
    if (dos_window_s <= 0) throw ConfigError("camera.dos_window_s", "must be positive");
    if (reboot_s <= 0) throw ConfigError("camera.reboot_s", "must be positive");

    if (stream_mode != "none" && stream_mode != "proprietary" && stream_mode != "rtsp" &&
        stream_mode != "onvif")
        throw ConfigError("stream.mode", "must be none|proprietary|rtsp|onvif");
    if (stream_mode != "none") {
        if (stream_start_s < 0 || stream_start_s > duration_s)
            throw ConfigError("stream.start_s", "outside scenario duration");
        if ((stream_mode == "rtsp" || stream_mode == "onvif") && !third_party)
            throw ConfigError("third_party", "rtsp/onvif streaming needs a third-party user");
    }
    if (stream_stop_s && (*stream_stop_s <= stream_start_s || *stream_stop_s > duration_s))
        throw ConfigError("stream.stop_s", "must fall between start_s and duration_s");
    if (stream_restart_s && (*stream_restart_s <= stream_start_s || *stream_restart_s > duration_s))
        throw ConfigError("stream.restart_s", "must fall between start_s and duration_s");

    for (std::size_t i = 0; i < motion_script_s.size(); ++i) {
        if (motion_script_s[i] < 0 || motion_script_s[i] > duration_s)
            throw ConfigError("motion.script_s[" + std::to_string(i) + "]",
                              "outside scenario duration");
    }
    if (night_curve) {
        if (!motion_script_s.empty())
            throw ConfigError("motion", "script_s and night_curve are mutually exclusive");
        if (night_curve->bin_s <= 0) throw ConfigError("motion.night_curve.bin_s", "must be positive");
        if (night_curve->segments.empty())
            throw ConfigError("motion.night_curve.segments", "must not be empty");
        long long total_bins = 0;
        for (std::size_t i = 0; i < night_curve->segments.size(); ++i) {
            const auto& seg = night_curve->segments[i];
            const std::string where = "motion.night_curve.segments[" + std::to_string(i) + "]";
            if (seg.bins <= 0) throw ConfigError(where + ".bins", "must be positive");
            if (seg.from_per_bin < 0 || seg.to_per_bin < 0)
                throw ConfigError(where, "rates must be non-negative");
            total_bins += seg.bins;
        }
        if (static_cast<double>(total_bins) * night_curve->bin_s > duration_s)
            throw ConfigError("motion.night_curve", "curve extends past the scenario duration");
    }

    std::set<std::string> tap_names;
    for (std::size_t i = 0; i < taps.size(); ++i) {
        const std::string where = "taps[" + std::to_string(i) + "]";
        if (taps[i].name.empty()) throw ConfigError(where + ".name", "must not be empty");
        if (!tap_names.insert(taps[i].name).second)
            throw ConfigError(where + ".name", "duplicate tap name: " + taps[i].name);
        for (const auto& [field, node] :
             {std::pair{".from", taps[i].from}, std::pair{".to", taps[i].to}}) {
            if (!node_names().contains(node))
                throw ConfigError(where + field, "unknown node: " + node);
            if (node == "gateway" && topology != "gateway")
                throw ConfigError(where + field, "gateway node only exists in the gateway topology");
        }
    }

    if (suppress && suppress->to_s && *suppress->to_s <= suppress->from_s)
        throw ConfigError("attacker.suppress.to_s", "must exceed from_s");
    if (flood) {
        if (flood->rate_per_s <= 0) throw ConfigError("attacker.flood.rate_per_s", "must be positive");
        if (flood->duration_s <= 0) throw ConfigError("attacker.flood.duration_s", "must be positive");
        if (flood->at_s < 0 || flood->at_s > duration_s)
            throw ConfigError("attacker.flood.at_s", "outside scenario duration");
    }
    if (inject_fragments && inject_fragments->count < 0)
        throw ConfigError("inject_fragments.count", "must be non-negative");
    if (probe_period_s && *probe_period_s <= 0)
        throw ConfigError("probes.period_s", "must be positive");

    if (!analysis.extract_tap.empty() && !tap_names.contains(analysis.extract_tap))
        throw ConfigError("analysis.extract_tap", "no such tap: " + analysis.extract_tap);
    if (!analysis.histogram_tap.empty() && !tap_names.contains(analysis.histogram_tap))
        throw ConfigError("analysis.histogram_tap", "no such tap: " + analysis.histogram_tap);
    if (analysis.histogram_bin_s <= 0)
        throw ConfigError("analysis.histogram_bin_s", "must be positive");

    for (std::size_t i = 0; i < cvss.size(); ++i) {
        try {
            cvss::parse_vector(cvss[i].vector);
        } catch (const cvss::ParseError& e) {
            throw ConfigError("cvss[" + std::to_string(i) + "].vector", e.what());
        }
    }
    for (const auto& c : checks) {
        if (!known_checks().contains(c)) throw ConfigError("checks", "unknown check: " + c);
    }
}

std::string ScenarioConfig::to_json_text() const {
    ordered_json j;
    j["name"] = name;
    j["seed"] = seed;
    j["duration_s"] = duration_s;
    j["topology"] = topology;
    j["camera"] = {{"owner_user", owner.user},
                   {"owner_pass", owner.pass},
                   {"dos_max_requests", dos_max_requests},
                   {"dos_window_s", dos_window_s},
                   {"reboot_s", reboot_s},
                   {"motion_detection", motion_detection}};
    if (third_party) j["third_party"] = {{"user", third_party->user}, {"pass", third_party->pass}};
    ordered_json stream{{"mode", stream_mode}, {"start_s", stream_start_s}};
    if (stream_stop_s) stream["stop_s"] = *stream_stop_s;
    if (stream_restart_s) stream["restart_s"] = *stream_restart_s;
    j["stream"] = stream;
    if (!motion_script_s.empty()) {
        j["motion"] = {{"script_s", motion_script_s}};
    } else if (night_curve) {
        ordered_json segs = ordered_json::array();
        for (const auto& s : night_curve->segments)
            segs.push_back({{"from_per_bin", s.from_per_bin},
                            {"to_per_bin", s.to_per_bin},
                            {"bins", s.bins}});
        j["motion"] = {{"night_curve", {{"bin_s", night_curve->bin_s}, {"segments", segs}}}};
    }
    if (!taps.empty()) {
        ordered_json arr = ordered_json::array();
        for (const auto& t : taps) arr.push_back({{"name", t.name}, {"from", t.from}, {"to", t.to}});
        j["taps"] = arr;
    }
    if (suppress || flood) {
        ordered_json att;
        if (suppress) {
            ordered_json s{{"from_s", suppress->from_s}};
            if (suppress->to_s) s["to_s"] = *suppress->to_s;
            att["suppress"] = s;
        }
        if (flood)
            att["flood"] = {{"at_s", flood->at_s},
                            {"rate_per_s", flood->rate_per_s},
                            {"duration_s", flood->duration_s}};
        j["attacker"] = att;
    }
    if (gateway)
        j["gateway"] = {{"enabled", gateway->enabled},
                        {"psk", gateway->psk_b64},
                        {"camera_addr", gateway->camera_addr}};
    if (inject_fragments)
        j["inject_fragments"] = {{"count", inject_fragments->count},
                                 {"at_s", inject_fragments->at_s}};
    if (probe_period_s) j["probes"] = {{"period_s", *probe_period_s}};
    if (!analysis.extract_tap.empty() || !analysis.histogram_tap.empty()) {
        ordered_json a;
        if (!analysis.extract_tap.empty()) a["extract_tap"] = analysis.extract_tap;
        if (!analysis.histogram_tap.empty()) {
            a["histogram_tap"] = analysis.histogram_tap;
            a["histogram_size"] = analysis.histogram_size;
            a["histogram_bin_s"] = analysis.histogram_bin_s;
        }
        j["analysis"] = a;
    }
    if (!cvss.empty()) {
        ordered_json arr = ordered_json::array();
        for (const auto& c : cvss) arr.push_back({{"label", c.label}, {"vector", c.vector}});
        j["cvss"] = arr;
    }
    if (!checks.empty()) j["checks"] = checks;
    return j.dump(2) + "\n";
}

namespace {

// get<T> with a ConfigError naming the offending field
template <typename T>
T field(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) throw ConfigError(path + key, "missing field");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + key, "wrong type");
    }
}

template <typename T>
T field_or(const json& j, const std::string& path, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + key, "wrong type");
    }
}

void reject_unknown_keys(const json& j, const std::string& path,
                         std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            throw ConfigError(path + key, "unknown field");
    }
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("", "not a JSON object");
    reject_unknown_keys(j, "",
                        {"name", "seed", "duration_s", "topology", "camera", "third_party",
                         "stream", "motion", "taps", "attacker", "gateway", "inject_fragments",
                         "probes", "analysis", "cvss", "checks"});

    ScenarioConfig cfg;
    cfg.name = field_or<std::string>(j, "", "name", "custom");
    cfg.seed = field_or<std::uint64_t>(j, "", "seed", 1);
    cfg.duration_s = field<double>(j, "", "duration_s");
    cfg.topology = field_or<std::string>(j, "", "topology", "baseline");

    if (j.contains("camera")) {
        const auto& c = j.at("camera");
        reject_unknown_keys(c, "camera.",
                            {"owner_user", "owner_pass", "dos_max_requests", "dos_window_s",
                             "reboot_s", "motion_detection"});
        cfg.owner.user = field_or<std::string>(c, "camera.", "owner_user", cfg.owner.user);
        cfg.owner.pass = field_or<std::string>(c, "camera.", "owner_pass", cfg.owner.pass);
        cfg.dos_max_requests = field_or<int>(c, "camera.", "dos_max_requests", cfg.dos_max_requests);
        cfg.dos_window_s = field_or<double>(c, "camera.", "dos_window_s", cfg.dos_window_s);
        cfg.reboot_s = field_or<double>(c, "camera.", "reboot_s", cfg.reboot_s);
        cfg.motion_detection =
            field_or<bool>(c, "camera.", "motion_detection", cfg.motion_detection);
    }
    if (j.contains("third_party")) {
        const auto& t = j.at("third_party");
        reject_unknown_keys(t, "third_party.", {"user", "pass"});
        cfg.third_party = Credentials{field<std::string>(t, "third_party.", "user"),
                                      field<std::string>(t, "third_party.", "pass")};
    }
    if (j.contains("stream")) {
        const auto& s = j.at("stream");
        reject_unknown_keys(s, "stream.", {"mode", "start_s", "stop_s", "restart_s"});
        cfg.stream_mode = field_or<std::string>(s, "stream.", "mode", "none");
        cfg.stream_start_s = field_or<double>(s, "stream.", "start_s", cfg.stream_start_s);
        if (s.contains("stop_s")) cfg.stream_stop_s = field<double>(s, "stream.", "stop_s");
        if (s.contains("restart_s")) cfg.stream_restart_s = field<double>(s, "stream.", "restart_s");
    }
    if (j.contains("motion")) {
        const auto& m = j.at("motion");
        reject_unknown_keys(m, "motion.", {"script_s", "night_curve"});
        if (m.contains("script_s"))
            cfg.motion_script_s = field<std::vector<double>>(m, "motion.", "script_s");
        if (m.contains("night_curve")) {
            const auto& nc = m.at("night_curve");
            reject_unknown_keys(nc, "motion.night_curve.", {"bin_s", "segments"});
            NightCurve curve;
            curve.bin_s = field_or<int>(nc, "motion.night_curve.", "bin_s", 600);
            if (!nc.contains("segments") || !nc.at("segments").is_array())
                throw ConfigError("motion.night_curve.segments", "missing or not an array");
            for (const auto& seg : nc.at("segments")) {
                reject_unknown_keys(seg, "motion.night_curve.segments[].",
                                    {"from_per_bin", "to_per_bin", "bins"});
                curve.segments.push_back(NightCurveSegment{
                    field<double>(seg, "motion.night_curve.segments[].", "from_per_bin"),
                    field<double>(seg, "motion.night_curve.segments[].", "to_per_bin"),
                    field<int>(seg, "motion.night_curve.segments[].", "bins")});
            }
            cfg.night_curve = std::move(curve);
        }
    }
    if (j.contains("taps")) {
        if (!j.at("taps").is_array()) throw ConfigError("taps", "not an array");
        for (const auto& t : j.at("taps")) {
            reject_unknown_keys(t, "taps[].", {"name", "from", "to"});
            cfg.taps.push_back(TapSpec{field<std::string>(t, "taps[].", "name"),
                                       field<std::string>(t, "taps[].", "from"),
                                       field<std::string>(t, "taps[].", "to")});
        }
    }
    if (j.contains("attacker")) {
        const auto& a = j.at("attacker");
        reject_unknown_keys(a, "attacker.", {"suppress", "flood"});
        if (a.contains("suppress")) {
            const auto& s = a.at("suppress");
            reject_unknown_keys(s, "attacker.suppress.", {"from_s", "to_s"});
            SuppressSpec spec;
            spec.from_s = field_or<double>(s, "attacker.suppress.", "from_s", 0.0);
            if (s.contains("to_s")) spec.to_s = field<double>(s, "attacker.suppress.", "to_s");
            cfg.suppress = spec;
        }
        if (a.contains("flood")) {
            const auto& f = a.at("flood");
            reject_unknown_keys(f, "attacker.flood.", {"at_s", "rate_per_s", "duration_s"});
            cfg.flood = FloodSpec{field<double>(f, "attacker.flood.", "at_s"),
                                  field<double>(f, "attacker.flood.", "rate_per_s"),
                                  field<double>(f, "attacker.flood.", "duration_s")};
        }
    }
    if (j.contains("gateway")) {
        const auto& g = j.at("gateway");
        reject_unknown_keys(g, "gateway.", {"enabled", "psk", "camera_addr"});
        GatewaySpec spec;
        spec.enabled = field_or<bool>(g, "gateway.", "enabled", false);
        spec.psk_b64 = field_or<std::string>(g, "gateway.", "psk", "");
        spec.camera_addr = field_or<std::string>(g, "gateway.", "camera_addr", "camera");
        cfg.gateway = spec;
    }
    if (j.contains("inject_fragments")) {
        const auto& f = j.at("inject_fragments");
        reject_unknown_keys(f, "inject_fragments.", {"count", "at_s"});
        cfg.inject_fragments = FragmentSpec{field<int>(f, "inject_fragments.", "count"),
                                            field_or<double>(f, "inject_fragments.", "at_s", 0.0)};
    }
    if (j.contains("probes")) {
        const auto& p = j.at("probes");
        reject_unknown_keys(p, "probes.", {"period_s"});
        cfg.probe_period_s = field<double>(p, "probes.", "period_s");
    }
    if (j.contains("analysis")) {
        const auto& a = j.at("analysis");
        reject_unknown_keys(a, "analysis.",
                            {"extract_tap", "histogram_tap", "histogram_size", "histogram_bin_s"});
        cfg.analysis.extract_tap = field_or<std::string>(a, "analysis.", "extract_tap", "");
        cfg.analysis.histogram_tap = field_or<std::string>(a, "analysis.", "histogram_tap", "");
        cfg.analysis.histogram_size =
            field_or<std::size_t>(a, "analysis.", "histogram_size", cfg.analysis.histogram_size);
        cfg.analysis.histogram_bin_s =
            field_or<int>(a, "analysis.", "histogram_bin_s", cfg.analysis.histogram_bin_s);
    }
    if (j.contains("cvss")) {
        if (!j.at("cvss").is_array()) throw ConfigError("cvss", "not an array");
        for (const auto& c : j.at("cvss")) {
            reject_unknown_keys(c, "cvss[].", {"label", "vector"});
            cfg.cvss.push_back(CvssEntry{field<std::string>(c, "cvss[].", "label"),
                                         field<std::string>(c, "cvss[].", "vector")});
        }
    }
    if (j.contains("checks")) cfg.checks = field<std::vector<std::string>>(j, "", "checks");

    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// built-in scenarios

namespace {

constexpr const char* kBuiltinPsk = "AAECAwQFBgcICQoLDA0ODxAREhMUFRYXGBkaGxwdHh8=";
constexpr const char* kDosVector = "CVSS:3.1/AV:A/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:H";
constexpr const char* kEavesdropVector = "CVSS:3.1/AV:A/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N";
constexpr const char* kOracleVector = "CVSS:3.1/AV:A/AC:L/PR:N/UI:N/S:U/C:L/I:N/A:L";

ScenarioConfig make_baseline_proprietary() {
    ScenarioConfig c;
    c.name = "baseline-proprietary";
    c.seed = 1001;
    c.duration_s = 20;
    c.stream_mode = "proprietary";
    c.stream_start_s = 0.5;
    c.taps = {{"app-cam", "app", "camera"}, {"cam-app", "camera", "app"}};
    c.checks = {"app-frames-match-generator", "no-plain-proprietary-media", "aesstream-decrypts"};
    return c;
}

ScenarioConfig make_baseline_thirdparty() {
    ScenarioConfig c;
    c.name = "baseline-thirdparty";
    c.seed = 1002;
    c.duration_s = 20;
    c.third_party = Credentials{"cam", "pw"};
    c.stream_mode = "rtsp";
    c.stream_start_s = 0.5;
    c.stream_stop_s = 19.5;
    c.taps = {{"client-cam", "client", "camera"}, {"cam-client", "camera", "client"}};
    c.checks = {"client-frames-match-generator", "thirdparty-media-all-plain"};
    return c;
}

ScenarioConfig make_eavesdrop_thirdparty() {
    ScenarioConfig c;
    c.name = "eavesdrop-thirdparty";
    c.seed = 42;
    c.duration_s = 60;
    c.third_party = Credentials{"cam", "pw"};
    c.stream_mode = "rtsp";
    c.stream_start_s = 0.5;
    c.taps = {{"cam-client", "camera", "client"}};
    c.analysis.extract_tap = "cam-client";
    c.checks = {"extract-equals-generated", "client-frames-match-generator"};
    c.cvss = {{"video-eavesdropping", kEavesdropVector}};
    return c;
}

ScenarioConfig make_eavesdrop_gateway() {
    ScenarioConfig c;
    c.name = "eavesdrop-gateway";
    c.seed = 42;
    c.duration_s = 60;
    c.topology = "gateway";
    c.gateway = ScenarioConfig::GatewaySpec{true, kBuiltinPsk, "camera"};
    c.third_party = Credentials{"cam", "pw"};
    c.stream_mode = "rtsp";
    c.stream_start_s = 0.5;
    c.inject_fragments = ScenarioConfig::FragmentSpec{2, 5.0};
    c.taps = {{"cam-gw", "camera", "gateway"}, {"gw-client", "gateway", "client"}};
    c.analysis.extract_tap = "gw-client";
    c.checks = {"extract-empty", "transparency", "gateway-complete", "no-fragments-downstream"};
    c.cvss = {{"video-eavesdropping", kEavesdropVector}};
    return c;
}

ScenarioConfig make_motion_oracle_overnight() {
    ScenarioConfig c;
    c.name = "motion-oracle-overnight";
    c.seed = 7;
    c.duration_s = 28800;  // 23:00 .. 07:00
    ScenarioConfig::NightCurve curve;
    curve.bin_s = 600;
    curve.segments = {{12, 1, 24}, {1, 16, 24}};  // fall to 03:00, rise to the 07:00 peak
    c.night_curve = curve;
    c.taps = {{"cam-cloud", "camera", "cloud"}};
    c.analysis.histogram_tap = "cam-cloud";
    c.checks = {"histogram-matches-ground-truth", "histogram-night-shape"};
    c.cvss = {{"motion-oracle", kOracleVector}};
    return c;
}

ScenarioConfig make_motion_suppress() {
    ScenarioConfig c;
    c.name = "motion-suppress";
    c.seed = 11;
    c.duration_s = 30;
    c.motion_script_s = {5, 10, 15, 20, 25};
    c.suppress = ScenarioConfig::SuppressSpec{0.0, std::nullopt};
    c.taps = {{"cam-cloud", "camera", "cloud"}};
    c.checks = {"suppression-complete"};
    c.cvss = {{"motion-oracle", kOracleVector}};
    return c;
}

ScenarioConfig make_dos_flood() {
    ScenarioConfig c;
    c.name = "dos-flood";
    c.seed = 13;
    c.duration_s = 60;
    c.stream_mode = "proprietary";
    c.stream_start_s = 1.2;
    c.stream_restart_s = 45;
    c.flood = ScenarioConfig::FloodSpec{5, 100, 10};
    c.probe_period_s = 2;
    c.taps = {{"app-cam", "app", "camera"}, {"cam-app", "camera", "app"}};
    c.checks = {"dos-crash-recovery"};
    c.cvss = {{"dos", kDosVector}};
    return c;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
    return {"baseline-proprietary", "baseline-thirdparty", "eavesdrop-thirdparty",
            "eavesdrop-gateway",    "motion-oracle-overnight", "motion-suppress", "dos-flood"};
}

bool is_builtin_scenario(const std::string& name) {
    const auto names = builtin_scenario_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

ScenarioConfig builtin_scenario(const std::string& name) {
    if (name == "baseline-proprietary") return make_baseline_proprietary();
    if (name == "baseline-thirdparty") return make_baseline_thirdparty();
    if (name == "eavesdrop-thirdparty") return make_eavesdrop_thirdparty();
    if (name == "eavesdrop-gateway") return make_eavesdrop_gateway();
    if (name == "motion-oracle-overnight") return make_motion_oracle_overnight();
    if (name == "motion-suppress") return make_motion_suppress();
    if (name == "dos-flood") return make_dos_flood();
    throw ConfigError("name", "unknown scenario: " + name);
}

// ---------------------------------------------------------------------------
// runner

namespace {

struct SampledMotion {
    std::vector<VirtualTime> times_ms;
    std::vector<std::uint64_t> bins;
};

SampledMotion sample_night_curve(const ScenarioConfig::NightCurve& curve, std::uint64_t seed) {
    SampledMotion out;
    DetRng rng(splitmix64(seed ^ 0x6d6f74696f6eULL));
    const VirtualTime bin_ms = static_cast<VirtualTime>(curve.bin_s) * 1000;
    std::size_t bin_index = 0;
    for (const auto& seg : curve.segments) {
        for (int k = 0; k < seg.bins; ++k) {
            const double expected =
                seg.bins == 1
                    ? seg.from_per_bin
                    : seg.from_per_bin + (seg.to_per_bin - seg.from_per_bin) * k / (seg.bins - 1.0);
            const auto count = static_cast<std::uint64_t>(std::max(0LL, std::llround(expected)));
            const VirtualTime start = static_cast<VirtualTime>(bin_index) * bin_ms;
            std::vector<VirtualTime> times;
            times.reserve(count);
            // keep a 2 ms margin so the +1 ms link latency cannot spill a
            // notification into the next bin
            for (std::uint64_t i = 0; i < count; ++i)
                times.push_back(start + static_cast<VirtualTime>(
                                            rng.below(static_cast<std::uint64_t>(bin_ms - 2))));
            std::sort(times.begin(), times.end());
            out.times_ms.insert(out.times_ms.end(), times.begin(), times.end());
            out.bins.push_back(count);
            ++bin_index;
        }
    }
    return out;
}

std::vector<std::uint8_t> generator_bytes(const MediaSource& media, std::size_t n) {
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto bytes = serialize_frame(media.frame(static_cast<std::uint32_t>(i)));
        out.insert(out.end(), bytes.begin(), bytes.end());
    }
    return out;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    const auto digest = crypto::sha256(bytes);
    return to_hex(digest);
}

// everything the check evaluators may inspect
struct RunContext {
    const ScenarioConfig& cfg;
    Simulation& sim;
    Camera& camera;
    AppClient& app;
    ThirdPartyClient& client;
    CloudStub& cloud;
    std::optional<HookHandle> suppress_hook;
    const Gateway* gateway = nullptr;
    std::vector<std::pair<std::string, TapHandle>> taps;
    std::optional<ExtractResult> extract;
    std::vector<std::uint64_t> ground_truth_bins;
    std::size_t injected_fragments = 0;
};

const CaptureFile* find_capture(const RunContext& ctx, const std::string& tap_name) {
    for (const auto& [name, handle] : ctx.taps)
        if (name == tap_name) return &ctx.sim.tap_capture(handle);
    return nullptr;
}

CheckResult evaluate_check(const std::string& name, const RunContext& ctx, const RunReport& rep);

}  // namespace

bool RunReport::all_checks_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

RunReport run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    const bool gw_topology = cfg.topology == "gateway";
    const VirtualTime duration_ms = to_ms(cfg.duration_s);

    Simulation sim(cfg.seed);
    const NodeId cam_id = sim.register_node("camera");
    const NodeId cloud_id = sim.register_node("cloud");
    const NodeId app_id = sim.register_node("app");
    const NodeId client_id = sim.register_node("client");
    const NodeId attacker_id = sim.register_node("attacker");
    NodeId gw_id = 0;
    if (gw_topology) {
        gw_id = sim.register_node("gateway");
        sim.set_transit(cam_id, gw_id);
    }

    crypto::TlsChannel tls(splitmix64(cfg.seed ^ 0x746c73ULL));

    CameraConfig cam_cfg;
    cam_cfg.owner = cfg.owner;
    cam_cfg.dos_max_requests = cfg.dos_max_requests;
    cam_cfg.dos_window_ms = to_ms(cfg.dos_window_s);
    cam_cfg.reboot_delay_ms = to_ms(cfg.reboot_s);
    cam_cfg.motion_detection = cfg.motion_detection;
    cam_cfg.media_epoch_seed = splitmix64(cfg.seed ^ 0x6d65646961ULL);
    cam_cfg.rng_seed = splitmix64(cfg.seed ^ 0x63616dULL);
    cam_cfg.cloud = Endpoint{cloud_id, CloudStub::kPort};
    Camera camera(sim, cam_id, cam_cfg, tls);
    sim.set_handler(cam_id, [&camera](const Packet& p) { camera.handle_packet(p); });

    CloudStub cloud(sim, cloud_id, tls);
    cloud.register_device(cam_id, "owner-account");
    cloud.register_app("owner-account", Endpoint{app_id, AppClient::kCtrlPort});
    sim.set_handler(cloud_id, [&cloud](const Packet& p) { cloud.handle_packet(p); });

    AppClient app(sim, app_id, tls, cfg.owner, cam_id, cloud_id);
    sim.set_handler(app_id, [&app](const Packet& p) { app.handle_packet(p); });

    ThirdPartyClient client(sim, client_id);
    sim.set_handler(client_id, [&client](const Packet& p) { client.handle_packet(p); });

    Flooder flooder(sim, attacker_id);
    sim.set_handler(attacker_id, [&flooder](const Packet& p) { flooder.handle_packet(p); });

    std::optional<Gateway> gateway;
    if (gw_topology) {
        crypto::Key32 psk{};
        const auto raw = base64_decode(cfg.gateway->psk_b64);
        std::copy(raw.begin(), raw.end(), psk.begin());
        gateway.emplace(sim, gw_id, cam_id, psk);
        sim.set_handler(gw_id, [&gateway](const Packet& p) { gateway->handle_packet(p); });
        client.enable_gateway_decrypt(psk, gw_id);
    }

    RunContext ctx{cfg, sim, camera, app, client, cloud, {}, nullptr, {}, {}, {}, 0};
    if (gateway) ctx.gateway = &*gateway;

    for (const auto& spec : cfg.taps) {
        Tap tap;
        tap.name = spec.name;
        tap.location = LinkRef{sim.node_id(spec.from), sim.node_id(spec.to)};
        ctx.taps.emplace_back(spec.name, sim.attach_tap(std::move(tap)));
    }

    // --- schedule every scripted action up front ---
    const bool needs_login = cfg.third_party.has_value() || cfg.probe_period_s.has_value();
    if (needs_login) sim.schedule(50, [&app] { app.start_login(); });
    if (cfg.third_party) {
        sim.schedule(250, [&app, &cfg] {
            app.start_create_third_party_user(cfg.third_party->user, cfg.third_party->pass);
        });
    }

    const std::string rtsp_uri = cfg.third_party
                                     ? "rtsp://" + cfg.third_party->user + ":" +
                                           cfg.third_party->pass + "@camera:554/stream/1"
                                     : "";
    const std::string onvif_uri = cfg.third_party
                                      ? "http://" + cfg.third_party->user + ":" +
                                            cfg.third_party->pass +
                                            "@camera:2020/onvif/device_service"
                                      : "";
    auto start_stream = [&app, &client, &cfg, rtsp_uri, onvif_uri] {
        if (cfg.stream_mode == "proprietary") app.start_stream();
        else if (cfg.stream_mode == "rtsp") client.start_play(rtsp_uri);
        else if (cfg.stream_mode == "onvif") client.start_play(onvif_uri);
    };
    if (cfg.stream_mode != "none") {
        sim.schedule(to_ms(cfg.stream_start_s), start_stream);
        if (cfg.stream_stop_s) sim.schedule(to_ms(*cfg.stream_stop_s), [&client] { client.stop(); });
        if (cfg.stream_restart_s) sim.schedule(to_ms(*cfg.stream_restart_s), start_stream);
    }

    std::vector<VirtualTime> motion_times;
    if (cfg.night_curve) {
        auto sampled = sample_night_curve(*cfg.night_curve, cfg.seed);
        motion_times = std::move(sampled.times_ms);
        ctx.ground_truth_bins = std::move(sampled.bins);
    } else if (!cfg.motion_script_s.empty()) {
        for (double t : cfg.motion_script_s) motion_times.push_back(to_ms(t));
        std::sort(motion_times.begin(), motion_times.end());
        if (!cfg.analysis.histogram_tap.empty()) {
            const VirtualTime bin_ms =
                static_cast<VirtualTime>(cfg.analysis.histogram_bin_s) * 1000;
            for (VirtualTime t : motion_times) {
                const auto idx = static_cast<std::size_t>(t / bin_ms);
                if (ctx.ground_truth_bins.size() <= idx) ctx.ground_truth_bins.resize(idx + 1, 0);
                ++ctx.ground_truth_bins[idx];
            }
        }
    }
    for (VirtualTime t : motion_times)
        sim.schedule(t, [&camera] { camera.trigger_motion(); });

    if (cfg.suppress) {
        sim.schedule(to_ms(cfg.suppress->from_s), [&ctx, &sim, cam_id, cloud_id] {
            ctx.suppress_hook = suppress_motion(sim, cam_id, cloud_id);
        });
        if (cfg.suppress->to_s) {
            sim.schedule(to_ms(*cfg.suppress->to_s), [&ctx, &sim] {
                if (ctx.suppress_hook) sim.remove_hook(*ctx.suppress_hook);
            });
        }
    }

    if (cfg.flood) {
        const auto spec = *cfg.flood;
        sim.schedule(to_ms(spec.at_s), [&flooder, cam_id, spec] {
            flooder.start(Endpoint{cam_id, Camera::kControlPort}, spec.rate_per_s, spec.duration_s);
        });
    }

    if (cfg.probe_period_s) {
        const VirtualTime period = to_ms(*cfg.probe_period_s);
        // only schedule probes that can still complete (or time out) in-run
        for (VirtualTime t = period; t + kRequestTimeoutMs + 10 <= duration_ms; t += period)
            sim.schedule(t, [&app] { app.start_probe(); });
    }

    if (cfg.inject_fragments && cfg.inject_fragments->count > 0) {
        const auto at = to_ms(cfg.inject_fragments->at_s);
        for (int i = 0; i < cfg.inject_fragments->count; ++i) {
            sim.schedule(at + 10 * i, [&sim, cam_id, client_id, &ctx] {
                Packet chaff;
                chaff.src = Endpoint{cam_id, Camera::kMediaPort};
                chaff.dst = Endpoint{client_id, ThirdPartyClient::kMediaPort};
                chaff.transport = Transport::UDP;
                chaff.channel = Channel::PLAIN;
                chaff.fragmented = true;
                chaff.payload = sim.rng().bytes(200);
                sim.send(std::move(chaff));
                ++ctx.injected_fragments;
            });
        }
    }

    sim.step(duration_ms);

    // --- assemble the report ---
    RunReport rep;
    rep.scenario = cfg.name;
    rep.seed = cfg.seed;
    rep.duration_s = cfg.duration_s;

    for (NodeId id = 1; id <= static_cast<NodeId>(sim.node_count()); ++id)
        rep.nodes.push_back(RunReport::NodeCount{sim.node_name(id), sim.sent_count(id),
                                                 sim.received_count(id)});

    for (const auto& [name, handle] : ctx.taps)
        rep.taps.push_back(RunReport::TapSummary{name, out_dir.empty() ? "" : name + ".jsonl",
                                                 sim.tap_capture(handle).size()});

    if (cfg.stream_mode == "proprietary") {
        rep.frames_generated = camera.proprietary_frames_streamed();
        rep.frames_received = app.received_frames().size();
        rep.client_stream_bytes = serialize_frames(app.received_frames());
    } else if (cfg.stream_mode == "rtsp" || cfg.stream_mode == "onvif") {
        rep.frames_generated = camera.rtsp_frames_streamed();
        rep.frames_received = client.received_frames().size();
        rep.client_stream_bytes = client.received_stream_bytes();
    }
    if (!rep.client_stream_bytes.empty() || cfg.stream_mode != "none")
        rep.client_stream_sha256 = sha256_hex(rep.client_stream_bytes);

    if (!cfg.analysis.extract_tap.empty()) {
        if (const auto* capture = find_capture(ctx, cfg.analysis.extract_tap)) {
            ctx.extract = extract_media(*capture);
            rep.frames_extracted = ctx.extract->frames.size();
        }
    }
    if (!cfg.analysis.histogram_tap.empty()) {
        if (const auto* capture = find_capture(ctx, cfg.analysis.histogram_tap)) {
            rep.histogram = motion_histogram(*capture, cfg.analysis.histogram_size,
                                             cfg.analysis.histogram_bin_s, 0, "camera");
            rep.ground_truth_bins = ctx.ground_truth_bins;
            rep.histogram_file = out_dir.empty() ? "" : "histogram.csv";
        }
    }

    rep.motion_events = camera.motion_events_recorded();
    rep.notifications_sent = camera.notifications_sent();
    if (ctx.suppress_hook) rep.suppressed = sim.hook_drop_count(*ctx.suppress_hook);
    rep.app_alerts = app.alert_count();

    for (const auto& probe : app.probe_log()) rep.probe_outcomes.push_back(probe.outcome);
    for (const auto& ci : camera.crash_history()) {
        RunReport::CrashOutcome crash;
        crash.crashed_at = ci.from;
        crash.recovered_at = ci.until;
        for (const auto& probe : app.probe_log()) {
            if (probe.outcome == "unavailable" && probe.sent >= ci.from && probe.sent < ci.until) {
                crash.first_failed_probe = probe.sent;
                break;
            }
        }
        rep.crashes.push_back(crash);
    }
    if (cfg.flood) {
        FloodReport fr;
        fr.rate_per_s = cfg.flood->rate_per_s;
        fr.duration_s = cfg.flood->duration_s;
        fr.requests_sent = flooder.requests_sent();
        fr.responses_received = flooder.responses_received();
        fr.target_crashed = !camera.crash_history().empty();
        if (fr.target_crashed) {
            fr.crash_at_ms = camera.crash_history().front().from;
            fr.recovered_at_ms = camera.crash_history().front().until;
        }
        if (!rep.crashes.empty()) fr.first_failed_legit_ms = rep.crashes.front().first_failed_probe;
        rep.flood = fr;
    }

    if (gateway) {
        rep.gateway = gateway->counters();
        rep.gateway_auth_failures = client.decryptor_auth_failures();
    }

    for (const auto& entry : cfg.cvss) {
        const auto vec = cvss::parse_vector(entry.vector);
        const auto score = cvss::base_score(vec);
        rep.cvss.push_back(RunReport::CvssLine{entry.label, vec.to_string(), score.value,
                                               cvss::to_string(score.severity)});
    }

    for (const auto& check : cfg.checks) rep.checks.push_back(evaluate_check(check, ctx, rep));

    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        for (const auto& [name, handle] : ctx.taps)
            sim.tap_capture(handle).save((fs::path(out_dir) / (name + ".jsonl")).string());
        if (rep.histogram) {
            std::ofstream csv(fs::path(out_dir) / "histogram.csv", std::ios::binary);
            csv << rep.histogram->to_csv();
        }
        std::ofstream txt(fs::path(out_dir) / "report.txt", std::ios::binary);
        txt << rep.to_text();
    }
    return rep;
}

// ---------------------------------------------------------------------------
// checks

namespace {

CheckResult pass(const std::string& name, const std::string& detail = "") {
    return CheckResult{name, true, detail};
}
CheckResult fail(const std::string& name, const std::string& detail) {
    return CheckResult{name, false, detail};
}

CheckResult check_frames_match(const std::string& name, const RunContext& ctx,
                               const std::vector<MediaFrame>& got, std::size_t generated) {
    if (generated == 0 || got.empty()) return fail(name, "no frames streamed");
    if (got.size() != generated)
        return fail(name, "received " + std::to_string(got.size()) + " of " +
                              std::to_string(generated) + " generated frames");
    const auto expected = generator_bytes(ctx.camera.media(), generated);
    if (serialize_frames(got) != expected) return fail(name, "stream bytes differ from generator");
    return pass(name, std::to_string(generated) + " frames byte-identical");
}

CheckResult check_transparency(const RunContext& ctx, const RunReport& rep) {
    ScenarioConfig ref = ctx.cfg;
    ref.name += "-reference";
    ref.topology = "baseline";
    ref.gateway.reset();
    ref.inject_fragments.reset();
    ref.taps.clear();
    ref.analysis = {};
    ref.checks.clear();
    ref.cvss.clear();
    const RunReport base = run_scenario(ref, "");
    if (rep.client_stream_bytes.empty()) return fail("transparency", "gateway run saw no media");
    if (base.client_stream_bytes != rep.client_stream_bytes)
        return fail("transparency", "client stream differs from the no-gateway run");
    return pass("transparency", "client stream identical to no-gateway run (" +
                                    std::to_string(rep.client_stream_bytes.size()) + " bytes)");
}

CheckResult check_dos(const RunContext& ctx) {
    const char* name = "dos-crash-recovery";
    const auto& crashes = ctx.camera.crash_history();
    if (crashes.size() != 1)
        return fail(name, "expected exactly one crash, saw " + std::to_string(crashes.size()));
    const auto& crash = crashes.front();
    const VirtualTime flood_at = to_ms(ctx.cfg.flood->at_s);
    const VirtualTime window = to_ms(ctx.cfg.dos_window_s);
    if (crash.from < flood_at || crash.from > flood_at + window)
        return fail(name, "crash at " + std::to_string(crash.from) +
                              " ms is outside one window of the flood start");
    if (crash.until != crash.from + to_ms(ctx.cfg.reboot_s))
        return fail(name, "reboot time does not honour the configured delay");
    if (ctx.camera.running() != true) return fail(name, "camera did not recover");

    bool outage_failure = false;
    bool stale_stok_recovery = false;
    for (const auto& probe : ctx.app.probe_log()) {
        if (probe.outcome == "unavailable" && probe.sent >= crash.from && probe.sent < crash.until)
            outage_failure = true;
        if (probe.outcome == "invalid_stok_then_ok" && probe.sent >= crash.until)
            stale_stok_recovery = true;
        if (probe.done > 0 && probe.done < crash.from && probe.outcome != "ok")
            return fail(name, "probe before the crash did not succeed");
    }
    if (!outage_failure) return fail(name, "no legitimate request failed during the outage");
    if (!stale_stok_recovery)
        return fail(name, "old stok was not rejected-and-replaced after reboot");
    if (!ctx.app.streaming() || ctx.app.status() != PeerStatus::OK)
        return fail(name, "stream did not resume after reboot");
    return pass(name, "crash at " + std::to_string(crash.from) + " ms, recovered at " +
                          std::to_string(crash.until) + " ms");
}

CheckResult evaluate_check(const std::string& name, const RunContext& ctx, const RunReport& rep) {
    if (name == "app-frames-match-generator")
        return check_frames_match(name, ctx, ctx.app.received_frames(),
                                  ctx.camera.proprietary_frames_streamed());

    if (name == "client-frames-match-generator")
        return check_frames_match(name, ctx, ctx.client.received_frames(),
                                  ctx.camera.rtsp_frames_streamed());

    if (name == "extract-equals-generated") {
        if (!ctx.extract) return fail(name, "extractor did not run");
        const auto generated = ctx.camera.rtsp_frames_streamed();
        if (generated == 0 || ctx.extract->frames.empty()) return fail(name, "no frames");
        if (ctx.extract->frames.size() != generated)
            return fail(name, "extracted " + std::to_string(ctx.extract->frames.size()) + " of " +
                                  std::to_string(generated));
        if (ctx.extract->stream_bytes() != generator_bytes(ctx.camera.media(), generated))
            return fail(name, "extracted bytes differ from generator");
        return pass(name, std::to_string(generated) + " frames reconstructed");
    }

    if (name == "extract-empty") {
        if (!ctx.extract) return fail(name, "extractor did not run");
        if (!ctx.extract->frames.empty())
            return fail(name, std::to_string(ctx.extract->frames.size()) +
                                  " frames leaked through the gateway");
        if (!ctx.extract->no_valid_frames) return fail(name, "missing NoValidFrames diagnostic");
        return pass(name, "extractor produced no results over " +
                              std::to_string(ctx.extract->candidate_records) + " records");
    }

    if (name == "transparency") return check_transparency(ctx, rep);

    if (name == "gateway-complete") {
        if (!ctx.gateway) return fail(name, "no gateway in this run");
        const auto& c = ctx.gateway->counters();
        if (c.intercepted != c.sealed)
            return fail(name, "intercepted " + std::to_string(c.intercepted) + " but sealed " +
                                  std::to_string(c.sealed));
        if (ctx.client.decryptor_unsealed() != c.sealed)
            return fail(name, "client unsealed " + std::to_string(ctx.client.decryptor_unsealed()) +
                                  " of " + std::to_string(c.sealed));
        if (ctx.client.decryptor_auth_failures() != 0)
            return fail(name, "unexpected client auth failures");
        return pass(name, std::to_string(c.sealed) + " datagrams sealed and unsealed");
    }

    if (name == "no-fragments-downstream") {
        if (!ctx.gateway) return fail(name, "no gateway in this run");
        const auto& c = ctx.gateway->counters();
        if (c.dropped_fragments != ctx.injected_fragments)
            return fail(name, "dropped " + std::to_string(c.dropped_fragments) + " of " +
                                  std::to_string(ctx.injected_fragments) + " fragments");
        for (const auto& [tap_name, handle] : ctx.taps) {
            if (tap_name == "cam-gw") continue;  // upstream of the gateway
            for (const auto& r : ctx.sim.tap_capture(handle).records())
                if (r.fragmented) return fail(name, "fragment observed on tap " + tap_name);
        }
        return pass(name, std::to_string(c.dropped_fragments) + " fragments dropped at the gateway");
    }

    if (name == "histogram-matches-ground-truth") {
        if (!rep.histogram) return fail(name, "histogram did not run");
        auto got = rep.histogram->bins;
        auto want = ctx.ground_truth_bins;
        const auto n = std::max(got.size(), want.size());
        got.resize(n, 0);
        want.resize(n, 0);
        if (got != want) return fail(name, "bins differ from the scripted events");
        if (rep.histogram->total() != ctx.camera.notifications_sent())
            return fail(name, "histogram total differs from notifications sent");
        return pass(name, "all " + std::to_string(n) + " bins match exactly");
    }

    if (name == "histogram-night-shape") {
        if (!rep.histogram || !ctx.cfg.night_curve) return fail(name, "no night curve in this run");
        const auto& bins = rep.histogram->bins;
        const auto first_segment = static_cast<std::size_t>(ctx.cfg.night_curve->segments[0].bins);
        if (bins.size() < first_segment) return fail(name, "histogram shorter than the curve");
        for (std::size_t i = 0; i + 1 < first_segment; ++i)
            if (bins[i] < bins[i + 1])
                return fail(name, "bins rise inside the falling segment at bin " + std::to_string(i));
        const auto max_it = std::max_element(bins.begin(), bins.end());
        const auto max_idx = static_cast<std::size_t>(std::distance(bins.begin(), max_it));
        if (max_idx + 3 < bins.size())
            return fail(name, "peak at bin " + std::to_string(max_idx) +
                                  " is outside the final 30 minutes");
        return pass(name, "curve falls to the trough and peaks in bin " + std::to_string(max_idx));
    }

    if (name == "suppression-complete") {
        const auto events = ctx.camera.motion_events_recorded();
        if (events <= 0) return fail(name, "no motion events were recorded");
        if (!ctx.suppress_hook) return fail(name, "suppression hook was never installed");
        const auto drops = ctx.sim.hook_drop_count(*ctx.suppress_hook);
        if (drops != static_cast<std::uint64_t>(events))
            return fail(name, "dropped " + std::to_string(drops) + " of " +
                                  std::to_string(events) + " notifications");
        if (ctx.app.alert_count() != 0)
            return fail(name, std::to_string(ctx.app.alert_count()) + " alerts leaked to the app");
        if (ctx.cloud.relayed() != 0) return fail(name, "cloud still relayed notifications");
        return pass(name, std::to_string(events) + " events recorded, zero alerts delivered");
    }

    if (name == "no-plain-proprietary-media") {
        std::size_t aesstream = 0;
        for (const auto& [tap_name, handle] : ctx.taps) {
            for (const auto& r : ctx.sim.tap_capture(handle).records()) {
                if (r.src_node() != "camera" || r.transport != Transport::UDP) continue;
                if (r.channel == Channel::PLAIN)
                    return fail(name, "plaintext camera media observed on tap " + tap_name);
                if (r.channel == Channel::AESSTREAM) ++aesstream;
            }
        }
        if (aesstream == 0) return fail(name, "no proprietary media observed at all");
        return pass(name, std::to_string(aesstream) + " encrypted media packets, zero plaintext");
    }

    if (name == "aesstream-decrypts") {
        if (!ctx.app.stream_keys()) return fail(name, "app never derived stream keys");
        const auto& keys = *ctx.app.stream_keys();
        std::size_t checked = 0;
        for (const auto& [tap_name, handle] : ctx.taps) {
            for (const auto& r : ctx.sim.tap_capture(handle).records()) {
                if (r.channel != Channel::AESSTREAM) continue;
                const auto plain = crypto::aes128_cbc_decrypt(keys.key, keys.iv, r.payload);
                if (!plain) return fail(name, "AESSTREAM packet failed to decrypt");
                const auto parsed = parse_frames(*plain);
                if (!parsed.clean || parsed.frames.size() != 1)
                    return fail(name, "decrypted packet is not exactly one frame");
                ++checked;
            }
        }
        if (checked == 0) return fail(name, "no AESSTREAM packets captured");
        return pass(name, std::to_string(checked) + " packets decrypt to well-formed frames");
    }

    if (name == "thirdparty-media-all-plain") {
        std::size_t plain = 0;
        for (const auto& [tap_name, handle] : ctx.taps) {
            for (const auto& r : ctx.sim.tap_capture(handle).records()) {
                if (r.src_node() != "camera" || r.transport != Transport::UDP) continue;
                if (r.channel != Channel::PLAIN)
                    return fail(name, "non-plaintext media observed on tap " + tap_name);
                ++plain;
            }
        }
        if (plain == 0) return fail(name, "no media observed at all");
        return pass(name, std::to_string(plain) + " media packets, all plaintext");
    }

    if (name == "dos-crash-recovery") return check_dos(ctx);

    return fail(name, "unknown check");
}

}  // namespace

// ---------------------------------------------------------------------------
// report rendering

std::string RunReport::to_text() const {
    std::ostringstream out;
    out << "scenario: " << scenario << "\n";
    out << "seed: " << seed << "\n";
    out << "duration_s: " << duration_s << "\n";
    out << "nodes:\n";
    for (const auto& n : nodes)
        out << "  " << n.name << " sent=" << n.sent << " received=" << n.received << "\n";
    if (!taps.empty()) {
        out << "taps:\n";
        for (const auto& t : taps) {
            out << "  " << t.name << " records=" << t.records;
            if (!t.file.empty()) out << " file=" << t.file;
            out << "\n";
        }
    }
    if (frames_generated || frames_received) {
        out << "stream:";
        if (frames_generated) out << " generated=" << *frames_generated;
        if (frames_received) out << " received=" << *frames_received;
        if (!client_stream_sha256.empty()) out << " sha256=" << client_stream_sha256;
        out << "\n";
    }
    if (frames_extracted) out << "extract: frames=" << *frames_extracted << "\n";
    if (histogram) {
        out << "histogram: bins=" << histogram->bins.size() << " total=" << histogram->total();
        if (!histogram_file.empty()) out << " file=" << histogram_file;
        out << "\n";
    }
    if (motion_events && (*motion_events > 0 || notifications_sent.value_or(0) > 0)) {
        out << "motion: events=" << *motion_events
            << " notifications=" << notifications_sent.value_or(0);
        if (suppressed) out << " suppressed=" << *suppressed;
        if (app_alerts) out << " app_alerts=" << *app_alerts;
        out << "\n";
    }
    for (std::size_t i = 0; i < crashes.size(); ++i) {
        out << "crash[" << i << "]: at_ms=" << crashes[i].crashed_at
            << " recovered_ms=" << crashes[i].recovered_at;
        if (crashes[i].first_failed_probe)
            out << " first_failed_probe_ms=" << *crashes[i].first_failed_probe;
        out << "\n";
    }
    if (flood) {
        out << "flood: rate_per_s=" << flood->rate_per_s << " duration_s=" << flood->duration_s
            << " requests=" << flood->requests_sent << " crashed="
            << (flood->target_crashed ? "yes" : "no") << "\n";
    }
    if (gateway) {
        out << "gateway: intercepted=" << gateway->intercepted << " sealed=" << gateway->sealed
            << " dropped_fragments=" << gateway->dropped_fragments
            << " forwarded=" << gateway->forwarded << " auth_failures=" << gateway_auth_failures
            << "\n";
    }
    if (!probe_outcomes.empty()) {
        out << "probes:";
        for (const auto& p : probe_outcomes) out << ' ' << p;
        out << "\n";
    }
    if (!cvss.empty()) {
        out << "cvss:\n";
        for (const auto& line : cvss) {
            std::ostringstream score;
            score.setf(std::ios::fixed);
            score.precision(1);
            score << line.score;
            out << "  " << line.label << ": " << line.vector << " = " << score.str() << " ("
                << line.severity << ")\n";
        }
    }
    if (!checks.empty()) {
        out << "checks:\n";
        for (const auto& c : checks) {
            out << "  " << c.name << ": " << (c.pass ? "PASS" : "FAIL");
            if (!c.detail.empty()) out << " (" << c.detail << ")";
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace tapsim
