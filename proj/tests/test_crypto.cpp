#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tapsim/crypto.hpp"
#include "tapsim/util.hpp"

using namespace tapsim;
using namespace tapsim::crypto;

namespace {
Key16 key16_from_hex(const std::string& hex) {
    Key16 k{};
    const auto v = from_hex(hex);
    std::copy(v.begin(), v.end(), k.begin());
    return k;
}
}  // namespace

TEST_CASE("sha256 FIPS known answers") {
    CHECK(to_hex(sha256(to_bytes("abc"))) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(to_hex(sha256({})) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("aes-128-cbc matches SP 800-38A with PKCS#7 tail") {
    const auto key = key16_from_hex("2b7e151628aed2a6abf7158809cf4f3c");
    const auto iv = key16_from_hex("000102030405060708090a0b0c0d0e0f");
    const auto pt = from_hex("6bc1bee22e409f96e93d7e117393172a");

    const auto ct = aes128_cbc_encrypt(key, iv, pt);
    CHECK(to_hex(ct) ==
          "7649abac8119b246cee98e9b12e9197d8964e0b149c10b7b682e6e39aaeb731c");

    const auto back = aes128_cbc_decrypt(key, iv, ct);
    REQUIRE(back.has_value());
    CHECK(*back == pt);
}

TEST_CASE("aes-128-cbc rejects tampered padding and odd sizes") {
    const auto key = key16_from_hex("000102030405060708090a0b0c0d0e0f");
    const auto iv = key16_from_hex("101112131415161718191a1b1c1d1e1f");
    auto ct = aes128_cbc_encrypt(key, iv, to_bytes("hello, camera"));
    auto bad = ct;
    bad.back() ^= 0x01;
    CHECK_FALSE(aes128_cbc_decrypt(key, iv, bad).has_value());
    CHECK_FALSE(aes128_cbc_decrypt(key, iv, std::vector<std::uint8_t>(15, 0)).has_value());
    CHECK_FALSE(aes128_cbc_decrypt(key, iv, {}).has_value());
}

TEST_CASE("aes-128-ctr matches SP 800-38A and is length preserving") {
    const auto key = key16_from_hex("2b7e151628aed2a6abf7158809cf4f3c");
    const auto iv = key16_from_hex("000102030405060708090a0b0c0d0e0f");
    const auto pt = from_hex("6bc1bee22e409f96e93d7e117393172a");
    const auto ct = aes128_ctr(key, iv, pt);
    CHECK(to_hex(ct) == "3b3fd92eb72dad20333449f8e83cfb4a");
    CHECK(aes128_ctr(key, iv, ct) == pt);

    DetRng rng(5);
    for (std::size_t n : {0u, 1u, 15u, 16u, 17u, 523u}) {
        const auto data = rng.bytes(n);
        CHECK(aes128_ctr(key, iv, data).size() == n);
    }
}

TEST_CASE("aead seal/open known answer and tamper rejection") {
    Key32 key{};
    for (int i = 0; i < 32; ++i) key[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
    Nonce12 nonce{};
    for (int i = 0; i < 12; ++i) nonce[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);

    const auto sealed = aead_seal(key, nonce, to_bytes("attack at dawn"));
    // nonce || ciphertext || tag
    CHECK(to_hex(std::vector<std::uint8_t>(sealed.begin() + 12, sealed.end())) ==
          "2676a27aa68ee27af961f3eac6874a645e8e20a54e0ea3a3e272247f1284");

    const auto opened = aead_open(key, sealed);
    REQUIRE(opened.has_value());
    CHECK(to_string(*opened) == "attack at dawn");

    CHECK_FALSE(aead_open(key, std::vector<std::uint8_t>(10, 0)).has_value());
}

TEST_CASE("aead roundtrip and single-bit tamper over random payloads") {
    DetRng rng(2024);
    Key32 key{};
    rng.fill(key);
    for (int i = 0; i < 300; ++i) {
        Nonce12 nonce{};
        rng.fill(nonce);
        const auto pt = rng.bytes(1 + rng.below(1400));
        auto sealed = aead_seal(key, nonce, pt);
        const auto opened = aead_open(key, sealed);
        REQUIRE(opened.has_value());
        CHECK(*opened == pt);

        const auto bit = rng.below(sealed.size() * 8);
        sealed[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        CHECK_FALSE(aead_open(key, sealed).has_value());
    }
}

TEST_CASE("modeled TLS channel: fixed overhead, opacity, peer-only open") {
    TlsChannel tls(77);
    const auto body = to_bytes("motion notification body");
    auto wire = tls.seal(body);
    CHECK(wire.size() == body.size() + TlsChannel::kOverhead);
    // wire bytes never contain the plaintext
    CHECK(std::search(wire.begin(), wire.end(), body.begin(), body.end()) == wire.end());

    const auto opened = tls.open(wire);
    REQUIRE(opened.has_value());
    CHECK(*opened == body);

    // a different association cannot read it
    TlsChannel other(78);
    const auto wrong = other.open(wire);
    REQUIRE(wrong.has_value());  // CTR always yields bytes
    CHECK(*wrong != body);       // but not the plaintext

    CHECK_FALSE(tls.open(std::vector<std::uint8_t>(8, 0)).has_value());
}

TEST_CASE("TLS channel records differ per message but keep lengths") {
    TlsChannel tls(123);
    const auto body = std::vector<std::uint8_t>(507, 0x42);
    const auto a = tls.seal(body);
    const auto b = tls.seal(body);
    CHECK(a.size() == 523);
    CHECK(b.size() == 523);
    CHECK(a != b);  // fresh record IV every time
}
