#include "tapsim/peers.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace tapsim {

namespace {

PeerStatus map_error(const std::string& err) {
    if (err == "AuthFailed") return PeerStatus::AUTH_FAILED;
    if (err == "InvalidStok") return PeerStatus::INVALID_STOK;
    if (err == "SessionExists") return PeerStatus::SESSION_EXISTS;
    if (err == "BadResponse") return PeerStatus::BAD_RESPONSE;
    return PeerStatus::PROTOCOL_ERROR;
}

struct StatusLine {
    bool valid = false;
    int code = 0;
    std::map<std::string, std::string> headers;  // lower-cased keys
    std::string body;
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

StatusLine parse_response(const std::string& text, const std::string& proto) {
    StatusLine out;
    const auto head_end = text.find("\r\n\r\n");
    const std::string head = head_end == std::string::npos ? text : text.substr(0, head_end);
    out.body = head_end == std::string::npos ? "" : text.substr(head_end + 4);

    std::istringstream lines(head);
    std::string line;
    if (!std::getline(lines, line)) return out;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream first(line);
    std::string version, reason;
    if (!(first >> version >> out.code)) return out;
    if (version.rfind(proto, 0) != 0) return out;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) break;
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string value = line.substr(colon + 1);
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        out.headers[lower(line.substr(0, colon))] = value;
    }
    out.valid = true;
    return out;
}

}  // namespace

const char* to_string(PeerStatus s) {
    switch (s) {
        case PeerStatus::IDLE: return "idle";
        case PeerStatus::IN_PROGRESS: return "in_progress";
        case PeerStatus::OK: return "ok";
        case PeerStatus::AUTH_FAILED: return "auth_failed";
        case PeerStatus::UNAVAILABLE: return "unavailable";
        case PeerStatus::INVALID_STOK: return "invalid_stok";
        case PeerStatus::SESSION_EXISTS: return "session_exists";
        case PeerStatus::BAD_RESPONSE: return "bad_response";
        case PeerStatus::NOT_FOUND: return "not_found";
        case PeerStatus::MALFORMED_URI: return "malformed_uri";
        case PeerStatus::PROTOCOL_ERROR: return "protocol_error";
    }
    return "?";
}

StreamUri parse_stream_uri(const std::string& uri) {
    StreamUri out;
    std::string rest;
    if (uri.rfind("rtsp://", 0) == 0) {
        out.kind = StreamUri::Kind::RTSP;
        out.port = Camera::kRtspPort;
        rest = uri.substr(7);
    } else if (uri.rfind("http://", 0) == 0) {
        out.kind = StreamUri::Kind::ONVIF;
        out.port = Camera::kOnvifPort;
        rest = uri.substr(7);
    } else {
        throw MalformedUri("unsupported scheme: " + uri);
    }
    const auto slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);

    const auto at = authority.rfind('@');
    if (at != std::string::npos) {
        const std::string userinfo = authority.substr(0, at);
        authority = authority.substr(at + 1);
        const auto colon = userinfo.find(':');
        if (colon == std::string::npos || colon == 0)
            throw MalformedUri("credentials must be user:pass");
        out.user = userinfo.substr(0, colon);
        out.pass = userinfo.substr(colon + 1);
        out.has_creds = true;
    }
    const auto colon = authority.find(':');
    if (colon != std::string::npos) {
        out.host = authority.substr(0, colon);
        const std::string port_str = authority.substr(colon + 1);
        if (port_str.empty() ||
            !std::all_of(port_str.begin(), port_str.end(),
                         [](unsigned char c) { return std::isdigit(c); }))
            throw MalformedUri("bad port: " + uri);
        const long port = std::strtol(port_str.c_str(), nullptr, 10);
        if (port < 1 || port > 65535) throw MalformedUri("port out of range: " + uri);
        out.port = static_cast<int>(port);
    } else {
        out.host = authority;
    }
    if (out.host.empty()) throw MalformedUri("empty host: " + uri);
    return out;
}

StreamKeys client_stream_keys(const std::string& password, std::span<const std::uint8_t> nonce) {
    const auto secret = crypto::sha256(to_bytes(password));

    std::vector<std::uint8_t> secret_then_nonce(secret.begin(), secret.end());
    secret_then_nonce.insert(secret_then_nonce.end(), nonce.begin(), nonce.end());
    std::vector<std::uint8_t> nonce_then_secret(nonce.begin(), nonce.end());
    nonce_then_secret.insert(nonce_then_secret.end(), secret.begin(), secret.end());

    StreamKeys keys{};
    const auto key_digest = crypto::sha256(secret_then_nonce);
    const auto iv_digest = crypto::sha256(nonce_then_secret);
    std::copy_n(key_digest.begin(), keys.key.size(), keys.key.begin());
    std::copy_n(iv_digest.begin(), keys.iv.size(), keys.iv.begin());
    return keys;
}

std::array<std::uint8_t, 32> client_response_tag(const StreamKeys& keys,
                                                 std::span<const std::uint8_t> nonce) {
    std::vector<std::uint8_t> key_then_nonce(keys.key.begin(), keys.key.end());
    key_then_nonce.insert(key_then_nonce.end(), nonce.begin(), nonce.end());
    return crypto::sha256(key_then_nonce);
}

// ---------------------------------------------------------------------------
// AppClient

AppClient::AppClient(Simulation& sim, NodeId self, crypto::TlsChannel& tls, Credentials account,
                     NodeId camera, NodeId cloud)
    : sim_(sim), self_(self), tls_(tls), account_(std::move(account)), camera_(camera),
      cloud_(cloud) {}

void AppClient::send_request(const std::string& body, ReplyFn on_reply) {
    auto j = nlohmann::json::parse(body);
    const int rid = next_rid_++;
    j["rid"] = rid;

    Packet p;
    p.src = Endpoint{self_, kCtrlPort};
    p.dst = Endpoint{camera_, Camera::kControlPort};
    p.transport = Transport::TCP;
    p.channel = Channel::TLS;
    p.payload = tls_.seal(to_bytes(j.dump()));
    sim_.send(std::move(p));

    pending_[rid] = std::move(on_reply);
    sim_.schedule(sim_.now() + kRequestTimeoutMs, [this, rid] {
        auto it = pending_.find(rid);
        if (it == pending_.end()) return;
        auto fn = std::move(it->second);
        pending_.erase(it);
        fn(std::nullopt);
    });
}

void AppClient::handle_packet(const Packet& p) {
    if (p.dst.node != self_) return;

    if (p.channel == Channel::TLS && cloud_ != 0 && p.src.node == cloud_) {
        if (tls_.open(p.payload)) alerts_.push_back(sim_.now());
        return;
    }

    if (p.channel == Channel::TLS && p.src.node == camera_ && p.dst.port == kCtrlPort) {
        const auto plain = tls_.open(p.payload);
        if (!plain) return;
        const auto j = nlohmann::json::parse(to_string(*plain), nullptr, false);
        if (j.is_discarded() || !j.is_object()) return;
        auto it = pending_.find(j.value("rid", -1));
        if (it == pending_.end()) return;
        auto fn = std::move(it->second);
        pending_.erase(it);
        fn(to_string(*plain));
        return;
    }

    if (p.channel == Channel::AESSTREAM && p.transport == Transport::UDP &&
        p.dst.port == kMediaPort && streaming_ && stream_keys_) {
        const auto plain =
            crypto::aes128_cbc_decrypt(stream_keys_->key, stream_keys_->iv, p.payload);
        if (!plain) {
            ++decrypt_failures_;
            return;
        }
        auto res = parse_frames(*plain);
        if (res.clean && res.frames.size() == 1) {
            res.frames[0].index = static_cast<std::uint32_t>(frames_.size());
            frames_.push_back(std::move(res.frames[0]));
        } else {
            ++decrypt_failures_;
        }
    }
}

void AppClient::do_login(std::function<void(bool)> then) {
    nlohmann::json j{{"method", "login"}, {"user", account_.user}, {"pass", account_.pass}};
    send_request(j.dump(), [this, then = std::move(then)](const std::optional<std::string>& reply) {
        if (!reply) {
            finish(PeerStatus::UNAVAILABLE);
            then(false);
            return;
        }
        const auto r = nlohmann::json::parse(*reply);
        if (r.value("ok", false)) {
            stok_ = r.value("stok", "");
            then(true);
        } else {
            finish(map_error(r.value("error", "")));
            then(false);
        }
    });
}

void AppClient::start_login() {
    status_ = PeerStatus::IN_PROGRESS;
    do_login([this](bool ok) {
        if (ok) finish(PeerStatus::OK);
    });
}

void AppClient::start_create_third_party_user(const std::string& user, const std::string& pass) {
    status_ = PeerStatus::IN_PROGRESS;
    nlohmann::json j{{"method", "create_third_party_user"},
                     {"user", user},
                     {"pass", pass},
                     {"stok", stok_.value_or("")}};
    send_request(j.dump(), [this](const std::optional<std::string>& reply) {
        if (!reply) {
            finish(PeerStatus::UNAVAILABLE);
            return;
        }
        const auto r = nlohmann::json::parse(*reply);
        finish(r.value("ok", false) ? PeerStatus::OK : map_error(r.value("error", "")));
    });
}

void AppClient::start_set_motion_detection(bool on) {
    status_ = PeerStatus::IN_PROGRESS;
    nlohmann::json j{{"method", "set_motion_detection"}, {"on", on}, {"stok", stok_.value_or("")}};
    send_request(j.dump(), [this](const std::optional<std::string>& reply) {
        if (!reply) {
            finish(PeerStatus::UNAVAILABLE);
            return;
        }
        const auto r = nlohmann::json::parse(*reply);
        finish(r.value("ok", false) ? PeerStatus::OK : map_error(r.value("error", "")));
    });
}

void AppClient::start_probe() {
    status_ = PeerStatus::IN_PROGRESS;
    probes_.push_back(ProbeRecord{sim_.now(), 0, ""});
    const auto idx = probes_.size() - 1;
    auto close = [this, idx](const std::string& outcome, PeerStatus s) {
        probes_[idx].done = sim_.now();
        probes_[idx].outcome = outcome;
        finish(s);
    };

    nlohmann::json j{{"method", "get_settings"}, {"stok", stok_.value_or("")}};
    send_request(j.dump(), [this, close](const std::optional<std::string>& reply) {
        if (!reply) {
            close("unavailable", PeerStatus::UNAVAILABLE);
            return;
        }
        const auto r = nlohmann::json::parse(*reply);
        if (r.value("ok", false)) {
            close("ok", PeerStatus::OK);
            return;
        }
        if (r.value("error", "") != "InvalidStok") {
            close("error", map_error(r.value("error", "")));
            return;
        }
        // stale stok: re-login once and retry
        do_login([this, close](bool ok) {
            if (!ok) {
                close("invalid_stok_then_login_failed", status_);
                return;
            }
            nlohmann::json j2{{"method", "get_settings"}, {"stok", *stok_}};
            send_request(j2.dump(), [this, close](const std::optional<std::string>& reply2) {
                if (!reply2) {
                    close("invalid_stok_then_unavailable", PeerStatus::UNAVAILABLE);
                    return;
                }
                const auto r2 = nlohmann::json::parse(*reply2);
                if (r2.value("ok", false))
                    close("invalid_stok_then_ok", PeerStatus::OK);
                else
                    close("invalid_stok_then_error", map_error(r2.value("error", "")));
            });
        });
    });
}

void AppClient::start_stream() {
    status_ = PeerStatus::IN_PROGRESS;
    if (!stok_) {
        do_login([this](bool ok) {
            if (ok) begin_ceremony(false);
        });
    } else {
        begin_ceremony(false);
    }
}

void AppClient::begin_ceremony(bool retried) {
    nlohmann::json j{{"method", "begin_stream"}, {"stok", *stok_}, {"client_port", kMediaPort}};
    send_request(j.dump(), [this, retried](const std::optional<std::string>& reply) {
        if (!reply) {
            finish(PeerStatus::UNAVAILABLE);
            return;
        }
        const auto r = nlohmann::json::parse(*reply);
        if (!r.value("ok", false)) {
            const auto err = r.value("error", "");
            if (err == "InvalidStok" && !retried) {
                do_login([this](bool ok) {
                    if (ok) begin_ceremony(true);
                });
                return;
            }
            finish(map_error(err));
            return;
        }
        std::vector<std::uint8_t> nonce;
        try {
            nonce = from_hex(r.value("nonce", ""));
        } catch (const std::invalid_argument&) {
            finish(PeerStatus::PROTOCOL_ERROR);
            return;
        }
        stream_keys_ = client_stream_keys(account_.pass, nonce);
        const auto tag = client_response_tag(*stream_keys_, nonce);
        nlohmann::json j2{{"method", "stream_response"},
                          {"stok", *stok_},
                          {"response", to_hex(tag)}};
        send_request(j2.dump(), [this](const std::optional<std::string>& reply2) {
            if (!reply2) {
                finish(PeerStatus::UNAVAILABLE);
                return;
            }
            const auto r2 = nlohmann::json::parse(*reply2);
            if (r2.value("ok", false)) {
                streaming_ = true;
                finish(PeerStatus::OK);
            } else {
                finish(map_error(r2.value("error", "")));
            }
        });
    });
}

// ---------------------------------------------------------------------------
// ThirdPartyClient

ThirdPartyClient::ThirdPartyClient(Simulation& sim, NodeId self) : sim_(sim), self_(self) {}

void ThirdPartyClient::enable_gateway_decrypt(const crypto::Key32& psk, NodeId gateway) {
    decryptor_.emplace(psk, gateway);
}

std::uint64_t ThirdPartyClient::decryptor_auth_failures() const {
    return decryptor_ ? decryptor_->auth_failures() : 0;
}

std::uint64_t ThirdPartyClient::decryptor_unsealed() const {
    return decryptor_ ? decryptor_->unsealed() : 0;
}

std::vector<std::uint8_t> ThirdPartyClient::received_stream_bytes() const {
    return serialize_frames(frames_);
}

void ThirdPartyClient::send_rtsp(const std::string& method,
                                 const std::vector<std::pair<std::string, std::string>>& headers) {
    ++cseq_;
    std::ostringstream out;
    const std::string cred = uri_.has_creds ? uri_.user + ":" + uri_.pass + "@" : "";
    out << method << " rtsp://" << cred << uri_.host << ":" << rtsp_port_ << uri_.path
        << " RTSP/1.0\r\n";
    out << "CSeq: " << cseq_ << "\r\n";
    for (const auto& [k, v] : headers) out << k << ": " << v << "\r\n";
    out << "\r\n";

    Packet p;
    p.src = Endpoint{self_, kRtspSrcPort};
    p.dst = Endpoint{camera_, rtsp_port_};
    p.transport = Transport::TCP;
    p.channel = Channel::PLAIN;
    p.payload = to_bytes(out.str());
    sim_.send(std::move(p));
}

void ThirdPartyClient::arm_timeout() {
    const auto token = op_token_;
    const Phase ph = phase_;
    sim_.schedule(sim_.now() + kRequestTimeoutMs, [this, token, ph] {
        if (op_token_ != token || phase_ != ph || status_ != PeerStatus::IN_PROGRESS) return;
        status_ = PeerStatus::UNAVAILABLE;
        phase_ = Phase::IDLE;
    });
}

void ThirdPartyClient::start_play(const std::string& uri) {
    ++op_token_;
    status_ = PeerStatus::IN_PROGRESS;
    phase_ = Phase::IDLE;
    playing_ = false;
    session_id_.clear();
    frames_.clear();
    cseq_ = 0;

    try {
        uri_ = parse_stream_uri(uri);
    } catch (const MalformedUri&) {
        status_ = PeerStatus::MALFORMED_URI;
        return;
    }
    try {
        camera_ = sim_.node_id(uri_.host);
    } catch (const UnknownNode&) {
        status_ = PeerStatus::PROTOCOL_ERROR;
        return;
    }

    if (uri_.kind == StreamUri::Kind::ONVIF) {
        phase_ = Phase::ONVIF;
        std::string auth;
        if (uri_.has_creds)
            auth = "Authorization: Basic " + base64_encode(to_bytes(uri_.user + ":" + uri_.pass)) +
                   "\r\n";
        Packet p;
        p.src = Endpoint{self_, kOnvifSrcPort};
        p.dst = Endpoint{camera_, uri_.port};
        p.transport = Transport::TCP;
        p.channel = Channel::PLAIN;
        p.payload = to_bytes("GET " + uri_.path + " HTTP/1.1\r\n" + auth + "\r\n");
        sim_.send(std::move(p));
        arm_timeout();
        return;
    }

    rtsp_port_ = uri_.port;
    phase_ = Phase::DESCRIBE;
    send_rtsp("DESCRIBE", {});
    arm_timeout();
}

void ThirdPartyClient::stop() {
    if (!session_id_.empty()) send_rtsp("TEARDOWN", {{"Session", session_id_}});
    playing_ = false;
    phase_ = Phase::IDLE;
}

void ThirdPartyClient::advance(int code, const std::map<std::string, std::string>& headers,
                               const std::string& body) {
    switch (phase_) {
        case Phase::ONVIF: {
            if (code == 401) {
                status_ = PeerStatus::AUTH_FAILED;
                phase_ = Phase::IDLE;
                return;
            }
            if (code == 404) {
                status_ = PeerStatus::NOT_FOUND;
                phase_ = Phase::IDLE;
                return;
            }
            if (code != 200) {
                status_ = PeerStatus::PROTOCOL_ERROR;
                phase_ = Phase::IDLE;
                return;
            }
            StreamUri target;
            try {
                target = parse_stream_uri(body);
            } catch (const MalformedUri&) {
                status_ = PeerStatus::PROTOCOL_ERROR;
                phase_ = Phase::IDLE;
                return;
            }
            // keep the credentials we were configured with
            uri_.host = target.host;
            uri_.path = target.path;
            rtsp_port_ = target.port;
            phase_ = Phase::DESCRIBE;
            send_rtsp("DESCRIBE", {});
            arm_timeout();
            return;
        }
        case Phase::DESCRIBE: {
            if (code == 401) {
                status_ = PeerStatus::AUTH_FAILED;
                phase_ = Phase::IDLE;
                return;
            }
            if (code == 404) {
                status_ = PeerStatus::NOT_FOUND;
                phase_ = Phase::IDLE;
                return;
            }
            if (code != 200) {
                status_ = PeerStatus::PROTOCOL_ERROR;
                phase_ = Phase::IDLE;
                return;
            }
            phase_ = Phase::SETUP;
            send_rtsp("SETUP", {{"Transport",
                                 "RTP/AVP/UDP;unicast;client_port=" + std::to_string(kMediaPort)}});
            arm_timeout();
            return;
        }
        case Phase::SETUP: {
            auto it = headers.find("session");
            if (code != 200 || it == headers.end() || it->second.empty()) {
                status_ = PeerStatus::PROTOCOL_ERROR;
                phase_ = Phase::IDLE;
                return;
            }
            session_id_ = it->second;
            phase_ = Phase::PLAY;
            send_rtsp("PLAY", {{"Session", session_id_}});
            arm_timeout();
            return;
        }
        case Phase::PLAY: {
            if (code != 200) {
                status_ = PeerStatus::PROTOCOL_ERROR;
                phase_ = Phase::IDLE;
                return;
            }
            phase_ = Phase::PLAYING;
            playing_ = true;
            status_ = PeerStatus::OK;
            return;
        }
        default:
            return;
    }
}

void ThirdPartyClient::handle_packet(const Packet& p) {
    if (p.dst.node != self_) return;

    if (p.transport == Transport::UDP && p.dst.port == kMediaPort) {
        std::vector<std::uint8_t> bytes;
        if (decryptor_) {
            switch (decryptor_->try_unseal(p, bytes)) {
                case ClientDecryptor::Result::AUTH_FAIL:
                    return;  // tampered datagram: counted, never delivered
                case ClientDecryptor::Result::NOT_MINE:
                    bytes = p.payload;
                    break;
                case ClientDecryptor::Result::OK:
                    break;
            }
        } else {
            bytes = p.payload;
        }
        auto res = parse_frames(bytes);
        if (res.clean && res.frames.size() == 1) {
            res.frames[0].index = static_cast<std::uint32_t>(frames_.size());
            frames_.push_back(std::move(res.frames[0]));
        } else {
            ++malformed_;
        }
        return;
    }

    if (p.transport != Transport::TCP || p.channel != Channel::PLAIN) return;

    if (phase_ == Phase::ONVIF && p.dst.port == kOnvifSrcPort) {
        const auto resp = parse_response(to_string(p.payload), "HTTP/");
        if (resp.valid) advance(resp.code, resp.headers, resp.body);
        return;
    }
    if (p.dst.port == kRtspSrcPort) {
        const auto resp = parse_response(to_string(p.payload), "RTSP/");
        if (!resp.valid) return;
        auto it = resp.headers.find("cseq");
        if (it != resp.headers.end() && it->second != std::to_string(cseq_)) return;  // stale
        advance(resp.code, resp.headers, resp.body);
    }
}

// ---------------------------------------------------------------------------
// CloudStub

CloudStub::CloudStub(Simulation& sim, NodeId self, crypto::TlsChannel& tls)
    : sim_(sim), self_(self), tls_(tls) {}

void CloudStub::register_device(NodeId camera, const std::string& account) {
    devices_[camera] = account;
}

void CloudStub::register_app(const std::string& account, Endpoint app) {
    apps_[account].push_back(app);
}

void CloudStub::handle_packet(const Packet& p) {
    if (p.dst.node != self_ || p.dst.port != kPort || p.channel != Channel::TLS) return;
    const auto body = tls_.open(p.payload);
    if (!body) return;

    auto dev = devices_.find(p.src.node);
    if (dev == devices_.end()) {
        ++unknown_drops_;
        relay_log_.push_back(RelayLogEntry{sim_.now(), "<unknown>", 0});
        return;
    }
    std::size_t fan = 0;
    if (auto it = apps_.find(dev->second); it != apps_.end()) {
        for (const auto& ep : it->second) {
            Packet r;
            r.src = Endpoint{self_, kPort};
            r.dst = ep;
            r.transport = Transport::TCP;
            r.channel = Channel::TLS;
            r.payload = tls_.seal(*body);
            sim_.send(std::move(r));
            ++relayed_;
            ++fan;
        }
    }
    relay_log_.push_back(RelayLogEntry{sim_.now(), dev->second, fan});
}

}  // namespace tapsim
