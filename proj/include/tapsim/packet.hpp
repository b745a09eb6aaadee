// Wire-level types shared by the whole testbed.
#ifndef TAPSIM_PACKET_HPP
#define TAPSIM_PACKET_HPP

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace tapsim {

using NodeId = int;               // 1-based, assigned in registration order
using VirtualTime = std::int64_t;  // milliseconds of simulated time

enum class Transport { UDP, TCP };

// Protection marker for the bytes in `payload`:
//   PLAIN     - application bytes as-is
//   TLS       - opaque record sealed by a modeled TLS association
//   AESSTREAM - proprietary stream ciphertext (AES-128-CBC per frame)
enum class Channel { PLAIN, TLS, AESSTREAM };

const char* to_string(Transport t);
const char* to_string(Channel c);
Transport transport_from_string(const std::string& s);  // throws std::invalid_argument
Channel channel_from_string(const std::string& s);      // throws std::invalid_argument

struct Endpoint {
    NodeId node = 0;
    int port = 0;  // 1..65535
    auto operator<=>(const Endpoint&) const = default;
};

struct Packet {
    std::uint64_t seq = 0;  // strictly increasing in send order, per simulation
    VirtualTime ts = 0;     // send time
    Endpoint src;
    Endpoint dst;
    Transport transport = Transport::UDP;
    Channel channel = Channel::PLAIN;
    bool fragmented = false;
    std::vector<std::uint8_t> payload;
};

}  // namespace tapsim

#endif
