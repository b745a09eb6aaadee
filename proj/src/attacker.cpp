#include "tapsim/attacker.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tapsim {

ExtractResult extract_media(const CaptureFile& capture) {
    ExtractResult result;

    // one reassembly buffer per (src, dst) flow, in first-seen order
    std::vector<std::pair<std::pair<std::string, std::string>, std::vector<std::uint8_t>>> flows;
    for (const auto& r : capture.records()) {
        if (r.transport != Transport::UDP || r.channel != Channel::PLAIN) continue;
        ++result.candidate_records;
        const auto key = std::make_pair(r.src, r.dst);
        auto it = std::find_if(flows.begin(), flows.end(),
                               [&](const auto& f) { return f.first == key; });
        if (it == flows.end()) {
            flows.emplace_back(key, std::vector<std::uint8_t>{});
            it = std::prev(flows.end());
        }
        it->second.insert(it->second.end(), r.payload.begin(), r.payload.end());
    }
    result.flows = flows.size();

    for (auto& [key, bytes] : flows) {
        auto parsed = parse_frames(bytes);
        for (auto& f : parsed.frames) {
            f.index = static_cast<std::uint32_t>(result.frames.size());
            result.frames.push_back(std::move(f));
        }
    }
    result.no_valid_frames = result.frames.empty();
    return result;
}

std::uint64_t MotionHistogram::total() const {
    std::uint64_t sum = 0;
    for (auto b : bins) sum += b;
    return sum;
}

std::string MotionHistogram::to_csv() const {
    std::ostringstream out;
    out << "bin_start_ms,count\n";
    for (std::size_t i = 0; i < bins.size(); ++i)
        out << origin_ms + static_cast<VirtualTime>(i) * bin_width_s * 1000 << ',' << bins[i]
            << '\n';
    return out.str();
}

MotionHistogram motion_histogram(const CaptureFile& capture, std::size_t size, int bin_width_s,
                                 VirtualTime origin_ms, const std::string& src_node) {
    if (bin_width_s <= 0) throw BadBinWidth("bin width must be positive");
    MotionHistogram h;
    h.bin_width_s = bin_width_s;
    h.origin_ms = origin_ms;
    const VirtualTime bin_ms = static_cast<VirtualTime>(bin_width_s) * 1000;
    for (const auto& r : capture.records()) {
        if (r.channel != Channel::TLS) continue;
        if (r.payload.size() != size) continue;
        if (!src_node.empty() && r.src_node() != src_node) continue;
        if (r.ts < origin_ms) continue;
        const auto idx = static_cast<std::size_t>((r.ts - origin_ms) / bin_ms);
        if (h.bins.size() <= idx) h.bins.resize(idx + 1, 0);
        ++h.bins[idx];
    }
    return h;
}

HookHandle suppress_motion(Simulation& sim, NodeId camera, NodeId cloud, std::size_t size) {
    MitmHook hook;
    hook.link = LinkRef{camera, cloud};
    hook.action = HookAction::DROP;
    hook.match = [camera, size](const Packet& p) {
        return p.channel == Channel::TLS && p.payload.size() == size && p.src.node == camera;
    };
    return sim.attach_hook(std::move(hook));
}

Flooder::Flooder(Simulation& sim, NodeId self) : sim_(sim), self_(self) {}

void Flooder::start(Endpoint target, double rate_per_s, double duration_s) {
    if (rate_per_s <= 0 || duration_s <= 0) return;
    started_at_ = sim_.now();
    const auto count = static_cast<std::uint64_t>(std::llround(rate_per_s * duration_s));
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto at =
            sim_.now() + static_cast<VirtualTime>(std::floor(i * 1000.0 / rate_per_s));
        sim_.schedule(at, [this, target] {
            Packet p;
            p.src = Endpoint{self_, kSrcPort};
            p.dst = target;
            p.transport = Transport::TCP;
            p.channel = Channel::PLAIN;
            p.payload = sim_.rng().bytes(64 + sim_.rng().below(128));
            sim_.send(std::move(p));
            ++requests_sent_;
        });
    }
}

void Flooder::handle_packet(const Packet& p) {
    if (p.dst.node == self_) ++responses_;
}

}  // namespace tapsim
