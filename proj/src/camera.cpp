#include "tapsim/camera.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace tapsim {

namespace {

struct RtspRequest {
    bool valid = false;
    std::string method;
    std::string uri;
    std::map<std::string, std::string> headers;  // lower-cased keys
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find("\r\n", pos);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 2;
    }
    return lines;
}

RtspRequest parse_rtsp_request(const std::string& text) {
    RtspRequest req;
    const auto lines = split_lines(text);
    if (lines.empty()) return req;
    std::istringstream first(lines[0]);
    std::string version;
    if (!(first >> req.method >> req.uri >> version)) return req;
    if (version.rfind("RTSP/", 0) != 0) return req;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) break;
        const auto colon = lines[i].find(':');
        if (colon == std::string::npos) return req;
        std::string key = lower(lines[i].substr(0, colon));
        std::string value = lines[i].substr(colon + 1);
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        req.headers[key] = value;
    }
    req.valid = true;
    return req;
}

struct UriParts {
    bool valid = false;
    bool has_creds = false;
    std::string user, pass, host, path;
};

// Minimal split for auth and path checks on the server side.
UriParts split_request_uri(const std::string& uri) {
    UriParts parts;
    const auto scheme_end = uri.find("://");
    if (scheme_end == std::string::npos) return parts;
    std::string rest = uri.substr(scheme_end + 3);
    const auto slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    parts.path = slash == std::string::npos ? "/" : rest.substr(slash);
    const auto at = authority.rfind('@');
    if (at != std::string::npos) {
        const std::string userinfo = authority.substr(0, at);
        authority = authority.substr(at + 1);
        const auto colon = userinfo.find(':');
        if (colon == std::string::npos) return parts;
        parts.user = userinfo.substr(0, colon);
        parts.pass = userinfo.substr(colon + 1);
        parts.has_creds = true;
    }
    const auto port_colon = authority.find(':');
    parts.host = port_colon == std::string::npos ? authority : authority.substr(0, port_colon);
    if (parts.host.empty()) return parts;
    parts.valid = true;
    return parts;
}

std::optional<int> parse_client_port(const std::string& transport_header) {
    const auto pos = transport_header.find("client_port=");
    if (pos == std::string::npos) return std::nullopt;
    int port = 0;
    std::size_t i = pos + 12;
    bool any = false;
    while (i < transport_header.size() && std::isdigit(static_cast<unsigned char>(transport_header[i]))) {
        port = port * 10 + (transport_header[i] - '0');
        any = true;
        ++i;
    }
    if (!any || port < 1 || port > 65535) return std::nullopt;
    return port;
}

void put_u64_be(std::vector<std::uint8_t>& buf, std::size_t at, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf[at + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
}

}  // namespace

Camera::Camera(Simulation& sim, NodeId self, CameraConfig cfg, crypto::TlsChannel& tls)
    : sim_(sim), self_(self), cfg_(std::move(cfg)), tls_(tls),
      rng_(splitmix64(cfg_.rng_seed ^ 0x63616d657261ULL)), media_(cfg_.media_epoch_seed) {}

StreamKeys Camera::derive_stream_keys(const std::string& password,
                                      std::span<const std::uint8_t> nonce) {
    const auto secret = crypto::sha256(to_bytes(password));
    std::vector<std::uint8_t> buf(secret.begin(), secret.end());
    buf.insert(buf.end(), nonce.begin(), nonce.end());
    const auto key_digest = crypto::sha256(buf);

    buf.assign(nonce.begin(), nonce.end());
    buf.insert(buf.end(), secret.begin(), secret.end());
    const auto iv_digest = crypto::sha256(buf);

    StreamKeys keys{};
    std::copy_n(key_digest.begin(), 16, keys.key.begin());
    std::copy_n(iv_digest.begin(), 16, keys.iv.begin());
    return keys;
}

std::array<std::uint8_t, 32> Camera::expected_response_tag(const StreamKeys& keys,
                                                           std::span<const std::uint8_t> nonce) {
    std::vector<std::uint8_t> buf(keys.key.begin(), keys.key.end());
    buf.insert(buf.end(), nonce.begin(), nonce.end());
    return crypto::sha256(buf);
}

std::optional<VirtualTime> Camera::reboot_at() const { return reboot_at_; }

bool Camera::has_third_party_user(const std::string& user) const {
    return third_party_.contains(user);
}

std::optional<Camera::SessionState> Camera::proprietary_session_state(
    const std::string& stok_hex) const {
    auto it = sessions_.find(stok_hex);
    if (it == sessions_.end()) return std::nullopt;
    return it->second.state;
}

void Camera::tick(VirtualTime now) {
    while (!request_window_.empty() && request_window_.front() < now - cfg_.dos_window_ms)
        request_window_.pop_front();
    if (!running_ && reboot_at_ && now >= *reboot_at_) {
        running_ = true;
        reboot_at_.reset();
        request_window_.clear();
    }
}

bool Camera::note_request(VirtualTime now) {
    request_window_.push_back(now);
    while (!request_window_.empty() && request_window_.front() < now - cfg_.dos_window_ms)
        request_window_.pop_front();
    if (static_cast<int>(request_window_.size()) > cfg_.dos_max_requests) {
        crash(now);
        return true;
    }
    return false;
}

void Camera::crash(VirtualTime now) {
    running_ = false;
    ++crash_epoch_;
    const auto epoch = crash_epoch_;
    reboot_at_ = now + cfg_.reboot_delay_ms;
    crashes_.push_back(CrashInterval{now, *reboot_at_});
    stok_table_.clear();
    sessions_.clear();
    rtsp_sessions_.clear();
    request_window_.clear();
    sim_.schedule(*reboot_at_, [this, epoch] {
        if (crash_epoch_ != epoch || running_) return;
        running_ = true;
        reboot_at_.reset();
        request_window_.clear();
    });
}

void Camera::handle_packet(const Packet& p) {
    if (!running_) return;  // crashed: accepts nothing
    if (note_request(sim_.now())) return;  // the request that tripped the limit gets no service
    switch (p.dst.port) {
        case kControlPort:
            handle_control(p);
            break;
        case kRtspPort:
            if (p.transport == Transport::TCP && p.channel == Channel::PLAIN) handle_rtsp(p);
            break;
        case kOnvifPort:
            if (p.transport == Transport::TCP && p.channel == Channel::PLAIN) handle_onvif(p);
            break;
        default:
            break;
    }
}

void Camera::trigger_motion() {
    if (!running_) return;  // nothing recorded, nothing sent
    ++motion_recorded_;
    if (!cfg_.motion_detection || cfg_.cloud.node == 0) return;

    std::vector<std::uint8_t> body(kNotificationWireLen - crypto::TlsChannel::kOverhead);
    put_u64_be(body, 0, static_cast<std::uint64_t>(sim_.now()));
    put_u64_be(body, 8, ++motion_counter_);
    auto filler = rng_.bytes(body.size() - 16);
    std::copy(filler.begin(), filler.end(), body.begin() + 16);

    Packet pkt;
    pkt.src = Endpoint{self_, kControlPort};
    pkt.dst = cfg_.cloud;
    pkt.transport = Transport::TCP;
    pkt.channel = Channel::TLS;
    pkt.payload = tls_.seal(body);
    sim_.send(std::move(pkt));
    ++notifications_sent_;
}

std::string Camera::fresh_stok() {
    std::string stok;
    do {
        stok = to_hex(rng_.bytes(16));
    } while (stok_table_.contains(stok));
    return stok;
}

std::string Camera::fresh_session_id() {
    while (true) {
        std::string id = to_hex(rng_.bytes(8));
        const bool used = std::any_of(rtsp_sessions_.begin(), rtsp_sessions_.end(),
                                      [&](const auto& kv) { return kv.second.session_id == id; });
        if (!used) return id;
    }
}

void Camera::send_control_reply(const Packet& req, const std::string& body_json) {
    Packet reply;
    reply.src = Endpoint{self_, kControlPort};
    reply.dst = req.src;
    reply.transport = Transport::TCP;
    reply.channel = Channel::TLS;
    reply.payload = tls_.seal(to_bytes(body_json));
    sim_.send(std::move(reply));
}

void Camera::handle_control(const Packet& p) {
    if (p.channel != Channel::TLS) return;  // junk probe: counted, never answered
    const auto plain = tls_.open(p.payload);
    if (!plain) return;
    nlohmann::json req = nlohmann::json::parse(to_string(*plain), nullptr, false);
    if (req.is_discarded() || !req.is_object()) return;

    nlohmann::json reply;
    reply["rid"] = req.value("rid", 0);
    const std::string method = req.value("method", "");

    if (method == "login") {
        const auto user = req.value("user", "");
        const auto pass = req.value("pass", "");
        if (user == cfg_.owner.user && pass == cfg_.owner.pass) {
            const std::string stok = fresh_stok();
            stok_table_[stok] = user;
            reply["ok"] = true;
            reply["stok"] = stok;
        } else {
            reply["ok"] = false;
            reply["error"] = "AuthFailed";
        }
        send_control_reply(p, reply.dump());
        return;
    }

    const std::string stok = req.value("stok", "");
    if (!stok_table_.contains(stok)) {
        reply["ok"] = false;
        reply["error"] = "InvalidStok";
        send_control_reply(p, reply.dump());
        return;
    }

    if (method == "get_settings") {
        reply["ok"] = true;
        reply["settings"] = {{"motion_detection", cfg_.motion_detection},
                             {"third_party_users", third_party_.size()}};
    } else if (method == "set_motion_detection") {
        cfg_.motion_detection = req.value("on", true);
        reply["ok"] = true;
    } else if (method == "create_third_party_user") {
        const auto user = req.value("user", "");
        const auto pass = req.value("pass", "");
        if (user.empty() || pass.empty()) {
            reply["ok"] = false;
            reply["error"] = "BadRequest";
        } else {
            third_party_.insert_or_assign(user, pass);
            reply["ok"] = true;
        }
    } else if (method == "begin_stream") {
        auto it = sessions_.find(stok);
        if (it != sessions_.end() && it->second.state != SessionState::CLOSED) {
            reply["ok"] = false;
            reply["error"] = "SessionExists";
        } else {
            StreamSession s;
            s.uid = next_uid_++;
            s.nonce = rng_.bytes(16);
            s.keys = derive_stream_keys(cfg_.owner.pass, s.nonce);
            s.expected_tag = expected_response_tag(s.keys, s.nonce);
            s.sink = Endpoint{p.src.node, req.value("client_port", 9000)};
            sessions_[stok] = std::move(s);
            reply["ok"] = true;
            reply["nonce"] = to_hex(sessions_[stok].nonce);
        }
    } else if (method == "stream_response") {
        auto it = sessions_.find(stok);
        if (it == sessions_.end() || it->second.state != SessionState::NONCE_SENT) {
            reply["ok"] = false;
            reply["error"] = "WrongState";
        } else {
            std::vector<std::uint8_t> tag;
            try {
                tag = from_hex(req.value("response", ""));
            } catch (const std::invalid_argument&) {
            }
            auto& s = it->second;
            if (tag.size() == s.expected_tag.size() &&
                std::equal(tag.begin(), tag.end(), s.expected_tag.begin())) {
                s.state = SessionState::AUTHENTICATED;
                const auto uid = s.uid;
                sim_.schedule(sim_.now(), [this, uid] { emit_proprietary(uid); });
                reply["ok"] = true;
            } else {
                s.state = SessionState::CLOSED;
                reply["ok"] = false;
                reply["error"] = "BadResponse";
            }
        }
    } else {
        reply["ok"] = false;
        reply["error"] = "BadRequest";
    }
    send_control_reply(p, reply.dump());
}

void Camera::emit_proprietary(std::uint64_t uid) {
    if (!running_) return;
    auto it = std::find_if(sessions_.begin(), sessions_.end(),
                           [&](const auto& kv) { return kv.second.uid == uid; });
    if (it == sessions_.end()) return;
    auto& s = it->second;
    if (s.state != SessionState::AUTHENTICATED && s.state != SessionState::STREAMING) return;
    s.state = SessionState::STREAMING;

    const MediaFrame f = media_.frame(s.cursor++);
    Packet pkt;
    pkt.src = Endpoint{self_, kMediaPort};
    pkt.dst = s.sink;
    pkt.transport = Transport::UDP;
    pkt.channel = Channel::AESSTREAM;
    pkt.payload = crypto::aes128_cbc_encrypt(s.keys.key, s.keys.iv, serialize_frame(f));
    sim_.send(std::move(pkt));
    ++prop_frames_;
    sim_.schedule(sim_.now() + MediaSource::kFrameIntervalMs, [this, uid] { emit_proprietary(uid); });
}

void Camera::send_rtsp_reply(const Packet& req, int code, const std::string& reason,
                             const std::vector<std::pair<std::string, std::string>>& headers,
                             const std::string& body) {
    std::ostringstream out;
    out << "RTSP/1.0 " << code << ' ' << reason << "\r\n";
    for (const auto& [k, v] : headers) out << k << ": " << v << "\r\n";
    out << "\r\n" << body;
    Packet reply;
    reply.src = Endpoint{self_, kRtspPort};
    reply.dst = req.src;
    reply.transport = Transport::TCP;
    reply.channel = Channel::PLAIN;
    reply.payload = to_bytes(out.str());
    sim_.send(std::move(reply));
}

void Camera::handle_rtsp(const Packet& p) {
    const auto req = parse_rtsp_request(to_string(p.payload));
    if (!req.valid) {
        send_rtsp_reply(p, 400, "Bad Request", {}, "");
        return;
    }
    std::vector<std::pair<std::string, std::string>> hdrs;
    if (auto it = req.headers.find("cseq"); it != req.headers.end()) hdrs.emplace_back("CSeq", it->second);

    auto& session = rtsp_sessions_[p.src];  // per control endpoint

    if (req.method == "DESCRIBE") {
        const auto uri = split_request_uri(req.uri);
        if (!uri.valid) {
            send_rtsp_reply(p, 400, "Bad Request", hdrs, "");
            return;
        }
        if (uri.path != kStreamPath) {
            send_rtsp_reply(p, 404, "Not Found", hdrs, "");
            return;
        }
        auto cred = uri.has_creds ? third_party_.find(uri.user) : third_party_.end();
        if (cred == third_party_.end() || cred->second != uri.pass) {
            send_rtsp_reply(p, 401, "Unauthorized", hdrs, "");
            return;
        }
        session.uid = session.uid ? session.uid : next_uid_++;
        session.state = RtspState::DESCRIBED;
        send_rtsp_reply(p, 200, "OK", hdrs, "v=0\r\ns=C200 video\r\nm=video 0 RTP/AVP 96\r\n");
        return;
    }

    if (req.method == "SETUP") {
        if (session.state == RtspState::INIT) {
            send_rtsp_reply(p, 455, "Method Not Valid in This State", hdrs, "");
            return;
        }
        auto transport = req.headers.find("transport");
        const auto port = transport == req.headers.end() ? std::nullopt
                                                         : parse_client_port(transport->second);
        if (!port) {
            send_rtsp_reply(p, 400, "Bad Request", hdrs, "");
            return;
        }
        session.client_media_port = *port;
        session.session_id = fresh_session_id();
        session.state = RtspState::READY;
        hdrs.emplace_back("Session", session.session_id);
        hdrs.emplace_back("Transport", "RTP/AVP/UDP;unicast;client_port=" + std::to_string(*port));
        send_rtsp_reply(p, 200, "OK", hdrs, "");
        return;
    }

    // Remaining methods address an established session.
    auto sess_hdr = req.headers.find("session");
    if (session.session_id.empty() || sess_hdr == req.headers.end() ||
        sess_hdr->second != session.session_id) {
        send_rtsp_reply(p, 454, "Session Not Found", hdrs, "");
        return;
    }
    hdrs.emplace_back("Session", session.session_id);

    if (req.method == "PLAY") {
        if (session.state != RtspState::READY && session.state != RtspState::PAUSED) {
            send_rtsp_reply(p, 455, "Method Not Valid in This State", hdrs, "");
            return;
        }
        session.state = RtspState::PLAYING;
        ++session.chain;
        const auto uid = session.uid;
        const auto chain = session.chain;
        sim_.schedule(sim_.now(), [this, uid, chain] { emit_rtsp(uid, chain); });
        send_rtsp_reply(p, 200, "OK", hdrs, "");
    } else if (req.method == "RECORD") {
        if (session.state != RtspState::READY && session.state != RtspState::PAUSED) {
            send_rtsp_reply(p, 455, "Method Not Valid in This State", hdrs, "");
            return;
        }
        session.state = RtspState::RECORDING;
        ++session.chain;
        const auto uid = session.uid;
        const auto chain = session.chain;
        sim_.schedule(sim_.now(), [this, uid, chain] { emit_rtsp(uid, chain); });
        send_rtsp_reply(p, 200, "OK", hdrs, "");
    } else if (req.method == "PAUSE") {
        if (session.state != RtspState::PLAYING && session.state != RtspState::RECORDING) {
            send_rtsp_reply(p, 455, "Method Not Valid in This State", hdrs, "");
            return;
        }
        session.state = RtspState::PAUSED;
        ++session.chain;  // kills the outstanding emit timer
        send_rtsp_reply(p, 200, "OK", hdrs, "");
    } else if (req.method == "TEARDOWN") {
        rtsp_sessions_.erase(p.src);
        send_rtsp_reply(p, 200, "OK", hdrs, "");
    } else {
        send_rtsp_reply(p, 501, "Not Implemented", hdrs, "");
    }
}

void Camera::emit_rtsp(std::uint64_t uid, std::uint64_t chain) {
    if (!running_) return;
    auto it = std::find_if(rtsp_sessions_.begin(), rtsp_sessions_.end(),
                           [&](const auto& kv) { return kv.second.uid == uid; });
    if (it == rtsp_sessions_.end()) return;
    auto& s = it->second;
    if (s.chain != chain) return;
    if (s.state != RtspState::PLAYING && s.state != RtspState::RECORDING) return;

    const MediaFrame f = media_.frame(s.cursor++);
    if (s.state == RtspState::RECORDING) {
        storage_.push_back(f);
    } else {
        Packet pkt;
        pkt.src = Endpoint{self_, kMediaPort};
        pkt.dst = Endpoint{it->first.node, s.client_media_port};
        pkt.transport = Transport::UDP;
        pkt.channel = Channel::PLAIN;
        pkt.payload = serialize_frame(f);
        sim_.send(std::move(pkt));
        ++rtsp_frames_;
    }
    sim_.schedule(sim_.now() + MediaSource::kFrameIntervalMs,
                  [this, uid, chain] { emit_rtsp(uid, chain); });
}

void Camera::handle_onvif(const Packet& p) {
    const auto text = to_string(p.payload);
    const auto lines = split_lines(text);
    auto reply = [&](const std::string& status, const std::string& body) {
        Packet r;
        r.src = Endpoint{self_, kOnvifPort};
        r.dst = p.src;
        r.transport = Transport::TCP;
        r.channel = Channel::PLAIN;
        r.payload = to_bytes("HTTP/1.1 " + status + "\r\n\r\n" + body);
        sim_.send(std::move(r));
    };
    if (lines.empty()) {
        reply("400 Bad Request", "");
        return;
    }
    std::istringstream first(lines[0]);
    std::string method, path, version;
    if (!(first >> method >> path >> version)) {
        reply("400 Bad Request", "");
        return;
    }
    if (path != kOnvifPath) {
        reply("404 Not Found", "");
        return;
    }
    std::string auth;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) break;
        const auto colon = lines[i].find(':');
        if (colon == std::string::npos) continue;
        if (lower(lines[i].substr(0, colon)) == "authorization") {
            auth = lines[i].substr(colon + 1);
            while (!auth.empty() && auth.front() == ' ') auth.erase(auth.begin());
        }
    }
    bool authed = false;
    if (auth.rfind("Basic ", 0) == 0) {
        try {
            const auto decoded = to_string(base64_decode(auth.substr(6)));
            const auto colon = decoded.find(':');
            if (colon != std::string::npos) {
                const auto user = decoded.substr(0, colon);
                const auto pass = decoded.substr(colon + 1);
                auto it = third_party_.find(user);
                authed = it != third_party_.end() && it->second == pass;
            }
        } catch (const std::invalid_argument&) {
        }
    }
    if (!authed) {
        reply("401 Unauthorized", "");
        return;
    }
    reply("200 OK", "rtsp://" + sim_.node_name(self_) + ":554" + std::string(kStreamPath));
}

}  // namespace tapsim
