#include "tapsim/gateway.hpp"

namespace tapsim {

const char* to_string(GatewayDecision d) {
    switch (d) {
        case GatewayDecision::INTERCEPT: return "INTERCEPT";
        case GatewayDecision::DROP_FRAGMENT: return "DROP_FRAGMENT";
        case GatewayDecision::FORWARD: return "FORWARD";
    }
    return "?";
}

Gateway::Gateway(Simulation& sim, NodeId self, NodeId camera, crypto::Key32 psk)
    : sim_(sim), self_(self), camera_(camera), psk_(psk) {}

GatewayDecision Gateway::classify(const Packet& p) const {
    const bool camera_side = p.src.node == camera_;
    if (camera_side && p.fragmented) return GatewayDecision::DROP_FRAGMENT;
    if (camera_side && p.transport == Transport::UDP) return GatewayDecision::INTERCEPT;
    return GatewayDecision::FORWARD;
}

void Gateway::handle_packet(const Packet& p) {
    if (p.dst.node == self_) return;  // nothing is addressed to the gateway itself
    switch (classify(p)) {
        case GatewayDecision::DROP_FRAGMENT:
            ++counters_.dropped_fragments;
            return;
        case GatewayDecision::INTERCEPT:
            ++counters_.intercepted;
            encrypt_forward(p);
            return;
        case GatewayDecision::FORWARD:
            ++counters_.forwarded;
            sim_.send_from(self_, p);
            return;
    }
}

void Gateway::encrypt_forward(const Packet& p) {
    crypto::Nonce12 nonce{};
    sim_.rng().fill(nonce);

    Packet sealed;
    sealed.src = Endpoint{self_, kUdpPort};
    sealed.dst = p.dst;  // destination address and port preserved
    sealed.transport = Transport::UDP;
    sealed.channel = Channel::PLAIN;
    sealed.fragmented = false;
    sealed.payload = crypto::aead_seal(psk_, nonce, p.payload);
    sim_.send_from(self_, std::move(sealed));
    ++counters_.sealed;
}

ClientDecryptor::Result ClientDecryptor::try_unseal(const Packet& p,
                                                    std::vector<std::uint8_t>& out) {
    if (p.transport != Transport::UDP || p.src.node != gateway_) return Result::NOT_MINE;
    auto plain = crypto::aead_open(psk_, p.payload);
    if (!plain) {
        ++auth_failures_;
        return Result::AUTH_FAIL;
    }
    out = std::move(*plain);
    ++unsealed_;
    return Result::OK;
}

}  // namespace tapsim
