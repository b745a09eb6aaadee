// Synthetic NAL-like video frames: the eavesdropping ground truth.
//
// Serialized frame layout:
//   00 00 00 01 | kind (0x65 = I, 0x41 = P) | u32 big-endian payload length | payload
// Payloads never contain the 4-byte start code, so a concatenated stream
// parses unambiguously.
#ifndef TAPSIM_MEDIA_HPP
#define TAPSIM_MEDIA_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace tapsim {

enum class FrameKind : std::uint8_t { I = 0x65, P = 0x41 };

struct MediaFrame {
    std::uint32_t index = 0;  // ordinal; not part of the wire format
    FrameKind kind = FrameKind::P;
    std::vector<std::uint8_t> payload;

    bool same_content(const MediaFrame& o) const {
        return kind == o.kind && payload == o.payload;
    }
};

std::vector<std::uint8_t> serialize_frame(const MediaFrame& f);
std::vector<std::uint8_t> serialize_frames(std::span<const MediaFrame> frames);

struct ParseResult {
    std::vector<MediaFrame> frames;
    bool clean = true;  // false when bytes had to be skipped or a header was invalid
};

// Scans for start codes and parses every well-formed frame. Skips over
// anything that does not validate (resyncs at the next start code), so
// feeding it ciphertext yields an empty result rather than an error.
ParseResult parse_frames(std::span<const std::uint8_t> bytes);

// Deterministic frame generator. Every frame is a pure function of
// (epoch seed, index): same epoch, same index, same bytes - no matter which
// transport later carries them. One frame each 100 ms, an I-frame every
// 10th frame, payloads of 400-1400 bytes.
class MediaSource {
public:
    explicit MediaSource(std::uint64_t epoch_seed) : epoch_(epoch_seed) {}

    MediaFrame frame(std::uint32_t index) const;
    std::uint64_t epoch() const { return epoch_; }

    static constexpr std::int64_t kFrameIntervalMs = 100;
    static constexpr std::uint32_t kIFrameEvery = 10;
    static constexpr std::size_t kMinPayload = 400;
    static constexpr std::size_t kMaxPayload = 1400;

private:
    std::uint64_t epoch_;
};

}  // namespace tapsim

#endif
