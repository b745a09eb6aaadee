// Encrypting access-point between the camera and the rest of the network.
//
// Placed as a transit node (Simulation::set_transit), the gateway sees every
// packet entering or leaving the camera. Camera-origin UDP gets its payload
// sealed (AEAD under a pre-shared key) and is re-sent from the gateway's own
// address to the original destination; camera-origin fragments are dropped;
// everything else is forwarded untouched. ClientDecryptor is the receiving
// side: it unseals gateway-origin datagrams before the player parses them,
// so the endpoints exchange identical bytes with or without the gateway.
#ifndef TAPSIM_GATEWAY_HPP
#define TAPSIM_GATEWAY_HPP

#include <cstdint>

#include "tapsim/crypto.hpp"
#include "tapsim/netsim.hpp"

namespace tapsim {

enum class GatewayDecision { INTERCEPT, DROP_FRAGMENT, FORWARD };
const char* to_string(GatewayDecision d);

struct GatewayCounters {
    std::uint64_t intercepted = 0;
    std::uint64_t sealed = 0;
    std::uint64_t dropped_fragments = 0;
    std::uint64_t forwarded = 0;
};

class Gateway {
public:
    static constexpr int kUdpPort = 5500;  // source port of re-sent sealed datagrams

    Gateway(Simulation& sim, NodeId self, NodeId camera, crypto::Key32 psk);

    // Mirrors the firewall predicate: drop camera-side fragments, intercept
    // camera-origin UDP, forward the rest.
    GatewayDecision classify(const Packet& p) const;

    // Wire this as the gateway node's handler.
    void handle_packet(const Packet& p);

    const GatewayCounters& counters() const { return counters_; }
    NodeId node() const { return self_; }

private:
    void encrypt_forward(const Packet& p);

    Simulation& sim_;
    NodeId self_;
    NodeId camera_;
    crypto::Key32 psk_;
    GatewayCounters counters_;
};

// Client-side unseal step for gateway-origin UDP. Anything not from the
// gateway passes through untouched.
class ClientDecryptor {
public:
    enum class Result { NOT_MINE, OK, AUTH_FAIL };

    ClientDecryptor(crypto::Key32 psk, NodeId gateway) : psk_(psk), gateway_(gateway) {}

    Result try_unseal(const Packet& p, std::vector<std::uint8_t>& out);

    std::uint64_t auth_failures() const { return auth_failures_; }
    std::uint64_t unsealed() const { return unsealed_; }

private:
    crypto::Key32 psk_;
    NodeId gateway_;
    std::uint64_t auth_failures_ = 0;
    std::uint64_t unsealed_ = 0;
};

}  // namespace tapsim

#endif
