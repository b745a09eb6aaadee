#include "tapsim/media.hpp"

#include <algorithm>

#include "tapsim/util.hpp"

namespace tapsim {

namespace {
constexpr std::uint8_t kStartCode[4] = {0x00, 0x00, 0x00, 0x01};
constexpr std::size_t kHeaderLen = 4 + 1 + 4;  // start code, kind, length

bool is_start_code(std::span<const std::uint8_t> b, std::size_t pos) {
    return pos + 4 <= b.size() && b[pos] == 0 && b[pos + 1] == 0 && b[pos + 2] == 0 &&
           b[pos + 3] == 1;
}

// Replace any embedded start code so payload bytes never alias a frame boundary.
void scrub_start_codes(std::vector<std::uint8_t>& payload) {
    if (payload.size() < 4) return;
    for (std::size_t i = 0; i + 4 <= payload.size(); ++i) {
        if (payload[i] == 0 && payload[i + 1] == 0 && payload[i + 2] == 0 && payload[i + 3] == 1)
            payload[i + 3] = 0x02;
    }
}
}  // namespace

std::vector<std::uint8_t> serialize_frame(const MediaFrame& f) {
    std::vector<std::uint8_t> out(kHeaderLen + f.payload.size());
    std::copy(std::begin(kStartCode), std::end(kStartCode), out.begin());
    out[4] = static_cast<std::uint8_t>(f.kind);
    const auto len = static_cast<std::uint32_t>(f.payload.size());
    out[5] = static_cast<std::uint8_t>(len >> 24);
    out[6] = static_cast<std::uint8_t>(len >> 16);
    out[7] = static_cast<std::uint8_t>(len >> 8);
    out[8] = static_cast<std::uint8_t>(len);
    std::copy(f.payload.begin(), f.payload.end(), out.begin() + kHeaderLen);
    return out;
}

std::vector<std::uint8_t> serialize_frames(std::span<const MediaFrame> frames) {
    std::vector<std::uint8_t> out;
    for (const auto& f : frames) {
        auto bytes = serialize_frame(f);
        out.insert(out.end(), bytes.begin(), bytes.end());
    }
    return out;
}

ParseResult parse_frames(std::span<const std::uint8_t> bytes) {
    ParseResult result;
    std::size_t pos = 0;
    while (pos + kHeaderLen <= bytes.size()) {
        if (!is_start_code(bytes, pos)) {
            result.clean = false;
            ++pos;
            continue;
        }
        const std::uint8_t kind = bytes[pos + 4];
        if (kind != static_cast<std::uint8_t>(FrameKind::I) &&
            kind != static_cast<std::uint8_t>(FrameKind::P)) {
            result.clean = false;
            ++pos;
            continue;
        }
        const std::uint32_t len = static_cast<std::uint32_t>(bytes[pos + 5]) << 24 |
                                  static_cast<std::uint32_t>(bytes[pos + 6]) << 16 |
                                  static_cast<std::uint32_t>(bytes[pos + 7]) << 8 |
                                  static_cast<std::uint32_t>(bytes[pos + 8]);
        if (pos + kHeaderLen + len > bytes.size()) {
            result.clean = false;
            ++pos;
            continue;
        }
        MediaFrame f;
        f.index = static_cast<std::uint32_t>(result.frames.size());
        f.kind = static_cast<FrameKind>(kind);
        f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos + kHeaderLen),
                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + kHeaderLen + len));
        result.frames.push_back(std::move(f));
        pos += kHeaderLen + len;
    }
    if (pos != bytes.size()) result.clean = false;  // trailing partial data
    return result;
}

MediaFrame MediaSource::frame(std::uint32_t index) const {
    DetRng rng(splitmix64(epoch_ ^ (0x9e3779b97f4a7c15ULL * (index + 1))));
    MediaFrame f;
    f.index = index;
    f.kind = index % kIFrameEvery == 0 ? FrameKind::I : FrameKind::P;
    const auto len = kMinPayload + static_cast<std::size_t>(rng.below(kMaxPayload - kMinPayload + 1));
    f.payload = rng.bytes(len);
    scrub_start_codes(f.payload);
    return f;
}

}  // namespace tapsim
