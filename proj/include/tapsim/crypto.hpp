// Crypto primitives (OpenSSL EVP) and the modeled TLS channel.
//
// The simulation never performs real handshakes. TlsChannel stands in for an
// established TLS association: it turns plaintext into opaque wire bytes of a
// fixed, predictable length (16-byte record IV + same-length body) so that
// capture analysis sees realistic record sizes without ever seeing content.
#ifndef TAPSIM_CRYPTO_HPP
#define TAPSIM_CRYPTO_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tapsim/util.hpp"

namespace tapsim::crypto {

using Key16 = std::array<std::uint8_t, 16>;
using Key32 = std::array<std::uint8_t, 32>;
using Iv16 = std::array<std::uint8_t, 16>;
using Nonce12 = std::array<std::uint8_t, 12>;

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

// AES-128-CBC with PKCS#7 padding. Decrypt returns nullopt on bad padding.
std::vector<std::uint8_t> aes128_cbc_encrypt(const Key16& key, const Iv16& iv,
                                             std::span<const std::uint8_t> plaintext);
std::optional<std::vector<std::uint8_t>> aes128_cbc_decrypt(const Key16& key, const Iv16& iv,
                                                            std::span<const std::uint8_t> ciphertext);

// AES-128-CTR keystream application (length preserving, same op both ways).
std::vector<std::uint8_t> aes128_ctr(const Key16& key, const Iv16& iv,
                                     std::span<const std::uint8_t> data);

// AES-256-GCM sealed datagram: nonce(12) || ciphertext || tag(16).
// Any bit flip in the sealed bytes makes open() return nullopt.
std::vector<std::uint8_t> aead_seal(const Key32& key, const Nonce12& nonce,
                                    std::span<const std::uint8_t> plaintext);
std::optional<std::vector<std::uint8_t>> aead_open(const Key32& key,
                                                   std::span<const std::uint8_t> sealed);

constexpr std::size_t kAeadOverhead = 12 + 16;  // nonce + tag

// Modeled TLS association. Parties holding a reference to the same channel
// can seal/open records; everyone else only sees wire bytes and lengths.
// Wire format: fresh 16-byte IV || AES-128-CTR body (overhead = 16 bytes).
class TlsChannel {
public:
    explicit TlsChannel(std::uint64_t seed);

    std::vector<std::uint8_t> seal(std::span<const std::uint8_t> plaintext);
    std::optional<std::vector<std::uint8_t>> open(std::span<const std::uint8_t> wire) const;

    static constexpr std::size_t kOverhead = 16;

private:
    Key16 key_{};
    DetRng iv_rng_;
};

}  // namespace tapsim::crypto

#endif
