// Capture records and the JSONL capture file format.
//
// One record per line, in observation order:
//   {"ts":..,"seq":..,"src":"node:port","dst":"node:port",
//    "transport":"UDP|TCP","channel":"PLAIN|TLS|AESSTREAM",
//    "frag":bool,"len":N,"payload":"<base64>"}
// `ts` is the time the packet crossed the tap point; `len` always equals the
// decoded payload length. Records are sorted by (ts, seq).
#ifndef TAPSIM_CAPTURE_HPP
#define TAPSIM_CAPTURE_HPP

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "tapsim/packet.hpp"

namespace tapsim {

struct CaptureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CaptureRecord {
    VirtualTime ts = 0;  // observation time at the tap
    std::uint64_t seq = 0;
    std::string src;  // "node:port"
    std::string dst;
    Transport transport = Transport::UDP;
    Channel channel = Channel::PLAIN;
    bool fragmented = false;
    std::vector<std::uint8_t> payload;

    std::string src_node() const { return src.substr(0, src.find(':')); }
    std::string dst_node() const { return dst.substr(0, dst.find(':')); }
};

class CaptureFile {
public:
    void append(CaptureRecord rec);
    const std::vector<CaptureRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    std::string to_jsonl() const;
    void save(const std::string& path) const;

    // Both loaders validate len consistency and (ts, seq) ordering.
    static CaptureFile from_jsonl(const std::string& text);
    static CaptureFile load(const std::string& path);

private:
    std::vector<CaptureRecord> records_;
};

}  // namespace tapsim

#endif
