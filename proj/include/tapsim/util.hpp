// Small shared utilities: deterministic RNG, seed mixing, hex / base64.
#ifndef TAPSIM_UTIL_HPP
#define TAPSIM_UTIL_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tapsim {

// Stable 64-bit mixer for deriving sub-seeds from a scenario seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic RNG. Wraps mt19937_64 and derives bounded values with
// rejection sampling so the byte streams do not depend on the standard
// library's distribution implementations.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, n). n must be nonzero.
    std::uint64_t below(std::uint64_t n);

    // Uniform in [lo, hi], inclusive.
    std::int64_t range(std::int64_t lo, std::int64_t hi);

    std::vector<std::uint8_t> bytes(std::size_t n);
    void fill(std::span<std::uint8_t> out);

private:
    std::mt19937_64 eng_;
};

std::string to_hex(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> from_hex(const std::string& hex);  // throws std::invalid_argument

std::string base64_encode(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> base64_decode(const std::string& text);  // throws std::invalid_argument

inline std::vector<std::uint8_t> to_bytes(const std::string& s) {
    return {s.begin(), s.end()};
}
inline std::string to_string(std::span<const std::uint8_t> b) {
    return {b.begin(), b.end()};
}

}  // namespace tapsim

#endif
