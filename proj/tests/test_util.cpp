#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tapsim/util.hpp"

using namespace tapsim;

TEST_CASE("hex round trip and rejection") {
    CHECK(to_hex(std::vector<std::uint8_t>{0x00, 0xab, 0xff}) == "00abff");
    CHECK(from_hex("00abff") == std::vector<std::uint8_t>{0x00, 0xab, 0xff});
    CHECK(from_hex("00ABFF") == std::vector<std::uint8_t>{0x00, 0xab, 0xff});
    CHECK_THROWS_AS(from_hex("abc"), std::invalid_argument);
    CHECK_THROWS_AS(from_hex("zz"), std::invalid_argument);
}

TEST_CASE("base64 known answers") {
    // RFC 4648 vectors
    auto enc = [](const std::string& s) { return base64_encode(to_bytes(s)); };
    CHECK(enc("") == "");
    CHECK(enc("f") == "Zg==");
    CHECK(enc("fo") == "Zm8=");
    CHECK(enc("foo") == "Zm9v");
    CHECK(enc("foob") == "Zm9vYg==");
    CHECK(enc("fooba") == "Zm9vYmE=");
    CHECK(enc("foobar") == "Zm9vYmFy");
    CHECK(to_string(base64_decode("Zm9vYmFy")) == "foobar");
    CHECK(to_string(base64_decode("Zg==")) == "f");
    CHECK_THROWS_AS(base64_decode("Zg="), std::invalid_argument);   // bad length
    CHECK_THROWS_AS(base64_decode("Z==="), std::invalid_argument);  // bad padding
    CHECK_THROWS_AS(base64_decode("Zm9$"), std::invalid_argument);  // bad character
}

TEST_CASE("base64 round trips random buffers") {
    DetRng rng(99);
    for (int i = 0; i < 200; ++i) {
        const auto data = rng.bytes(rng.below(300));
        CHECK(base64_decode(base64_encode(data)) == data);
    }
}

TEST_CASE("DetRng is deterministic and in range") {
    DetRng a(12345), b(12345);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    DetRng r(7);
    for (int i = 0; i < 10000; ++i) {
        const auto v = r.below(17);
        CHECK(v < 17);
    }
    for (int i = 0; i < 1000; ++i) {
        const auto v = r.range(-5, 5);
        CHECK(v >= -5);
        CHECK(v <= 5);
    }
    CHECK_THROWS_AS(r.below(0), std::invalid_argument);
}

TEST_CASE("splitmix64 spreads nearby seeds") {
    CHECK(splitmix64(1) != splitmix64(2));
    CHECK(splitmix64(0) != 0);
}
