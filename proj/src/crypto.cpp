#include "tapsim/crypto.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

namespace tapsim::crypto {

namespace {

struct CtxDeleter {
    void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter>;

CipherCtx make_ctx() {
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
    return ctx;
}

[[noreturn]] void fail(const char* what) { throw std::runtime_error(what); }

}  // namespace

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data) {
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        fail("sha256 failed");
    }
    return out;
}

std::vector<std::uint8_t> aes128_cbc_encrypt(const Key16& key, const Iv16& iv,
                                             std::span<const std::uint8_t> plaintext) {
    auto ctx = make_ctx();
    if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_cbc(), nullptr, key.data(), iv.data()) != 1)
        fail("cbc encrypt init failed");
    std::vector<std::uint8_t> out(plaintext.size() + 16);
    int n1 = 0, n2 = 0;
    if (EVP_EncryptUpdate(ctx.get(), out.data(), &n1, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1)
        fail("cbc encrypt update failed");
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + n1, &n2) != 1) fail("cbc encrypt final failed");
    out.resize(static_cast<std::size_t>(n1 + n2));
    return out;
}

std::optional<std::vector<std::uint8_t>> aes128_cbc_decrypt(const Key16& key, const Iv16& iv,
                                                            std::span<const std::uint8_t> ciphertext) {
    if (ciphertext.empty() || ciphertext.size() % 16 != 0) return std::nullopt;
    auto ctx = make_ctx();
    if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_cbc(), nullptr, key.data(), iv.data()) != 1)
        fail("cbc decrypt init failed");
    std::vector<std::uint8_t> out(ciphertext.size());
    int n1 = 0, n2 = 0;
    if (EVP_DecryptUpdate(ctx.get(), out.data(), &n1, ciphertext.data(),
                          static_cast<int>(ciphertext.size())) != 1)
        return std::nullopt;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + n1, &n2) != 1) return std::nullopt;  // bad padding
    out.resize(static_cast<std::size_t>(n1 + n2));
    return out;
}

std::vector<std::uint8_t> aes128_ctr(const Key16& key, const Iv16& iv,
                                     std::span<const std::uint8_t> data) {
    auto ctx = make_ctx();
    if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ctr(), nullptr, key.data(), iv.data()) != 1)
        fail("ctr init failed");
    std::vector<std::uint8_t> out(data.size());
    int n = 0;
    if (!data.empty() &&
        EVP_EncryptUpdate(ctx.get(), out.data(), &n, data.data(), static_cast<int>(data.size())) != 1)
        fail("ctr update failed");
    return out;
}

std::vector<std::uint8_t> aead_seal(const Key32& key, const Nonce12& nonce,
                                    std::span<const std::uint8_t> plaintext) {
    auto ctx = make_ctx();
    if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1)
        fail("gcm init failed");
    std::vector<std::uint8_t> out(12 + plaintext.size() + 16);
    std::copy(nonce.begin(), nonce.end(), out.begin());
    int n = 0;
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx.get(), out.data() + 12, &n, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1)
        fail("gcm update failed");
    int fin = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + 12 + n, &fin) != 1) fail("gcm final failed");
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, 16, out.data() + 12 + n + fin) != 1)
        fail("gcm get tag failed");
    return out;
}

std::optional<std::vector<std::uint8_t>> aead_open(const Key32& key,
                                                   std::span<const std::uint8_t> sealed) {
    if (sealed.size() < kAeadOverhead) return std::nullopt;
    const auto* nonce = sealed.data();
    const auto* ct = sealed.data() + 12;
    const std::size_t ct_len = sealed.size() - kAeadOverhead;
    const auto* tag = sealed.data() + 12 + ct_len;

    auto ctx = make_ctx();
    if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce) != 1)
        fail("gcm init failed");
    std::vector<std::uint8_t> out(ct_len);
    int n = 0;
    if (ct_len > 0 &&
        EVP_DecryptUpdate(ctx.get(), out.data(), &n, ct, static_cast<int>(ct_len)) != 1)
        return std::nullopt;
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, 16, const_cast<std::uint8_t*>(tag)) != 1)
        fail("gcm set tag failed");
    int fin = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + n, &fin) != 1) return std::nullopt;
    out.resize(static_cast<std::size_t>(n + fin));
    return out;
}

TlsChannel::TlsChannel(std::uint64_t seed) : iv_rng_(splitmix64(seed ^ 0x746c735f6976ULL)) {
    DetRng key_rng(splitmix64(seed ^ 0x746c735f6b6579ULL));
    key_rng.fill(key_);
}

std::vector<std::uint8_t> TlsChannel::seal(std::span<const std::uint8_t> plaintext) {
    Iv16 iv{};
    iv_rng_.fill(iv);
    std::vector<std::uint8_t> wire(iv.begin(), iv.end());
    auto body = aes128_ctr(key_, iv, plaintext);
    wire.insert(wire.end(), body.begin(), body.end());
    return wire;
}

std::optional<std::vector<std::uint8_t>> TlsChannel::open(std::span<const std::uint8_t> wire) const {
    if (wire.size() < kOverhead) return std::nullopt;
    Iv16 iv{};
    std::copy(wire.begin(), wire.begin() + 16, iv.begin());
    return aes128_ctr(key_, iv, wire.subspan(16));
}

}  // namespace tapsim::crypto
