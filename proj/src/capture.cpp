#include "tapsim/capture.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tapsim/util.hpp"

namespace tapsim {

const char* to_string(Transport t) { return t == Transport::UDP ? "UDP" : "TCP"; }

const char* to_string(Channel c) {
    switch (c) {
        case Channel::PLAIN: return "PLAIN";
        case Channel::TLS: return "TLS";
        case Channel::AESSTREAM: return "AESSTREAM";
    }
    return "?";
}

Transport transport_from_string(const std::string& s) {
    if (s == "UDP") return Transport::UDP;
    if (s == "TCP") return Transport::TCP;
    throw std::invalid_argument("bad transport: " + s);
}

Channel channel_from_string(const std::string& s) {
    if (s == "PLAIN") return Channel::PLAIN;
    if (s == "TLS") return Channel::TLS;
    if (s == "AESSTREAM") return Channel::AESSTREAM;
    throw std::invalid_argument("bad channel: " + s);
}

void CaptureFile::append(CaptureRecord rec) { records_.push_back(std::move(rec)); }

std::string CaptureFile::to_jsonl() const {
    std::ostringstream out;
    for (const auto& r : records_) {
        nlohmann::ordered_json j;
        j["ts"] = r.ts;
        j["seq"] = r.seq;
        j["src"] = r.src;
        j["dst"] = r.dst;
        j["transport"] = to_string(r.transport);
        j["channel"] = to_string(r.channel);
        j["frag"] = r.fragmented;
        j["len"] = r.payload.size();
        j["payload"] = base64_encode(r.payload);
        out << j.dump() << '\n';
    }
    return out.str();
}

void CaptureFile::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CaptureError("cannot write capture file: " + path);
    f << to_jsonl();
}

CaptureFile CaptureFile::from_jsonl(const std::string& text) {
    CaptureFile cf;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw CaptureError("capture line " + std::to_string(lineno) + ": " + e.what());
        }
        try {
            CaptureRecord r;
            r.ts = j.at("ts").get<VirtualTime>();
            r.seq = j.at("seq").get<std::uint64_t>();
            r.src = j.at("src").get<std::string>();
            r.dst = j.at("dst").get<std::string>();
            r.transport = transport_from_string(j.at("transport").get<std::string>());
            r.channel = channel_from_string(j.at("channel").get<std::string>());
            r.fragmented = j.at("frag").get<bool>();
            const auto len = j.at("len").get<std::size_t>();
            r.payload = base64_decode(j.at("payload").get<std::string>());
            if (r.payload.size() != len)
                throw std::invalid_argument("len field does not match payload length");
            if (!cf.records_.empty()) {
                const auto& prev = cf.records_.back();
                if (std::tie(prev.ts, prev.seq) > std::tie(r.ts, r.seq))
                    throw std::invalid_argument("records not sorted by (ts, seq)");
            }
            cf.records_.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw CaptureError("capture line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cf;
}

CaptureFile CaptureFile::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CaptureError("cannot read capture file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return from_jsonl(buf.str());
}

}  // namespace tapsim
