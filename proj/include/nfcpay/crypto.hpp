#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "nfcpay/bytes.hpp"

namespace nfcpay {

// Key and nonce widths follow GSM conventions: 128-bit subscriber key and
// challenges, 32-bit signed response, 64-bit session key. The derived
// MAC/encryption keys use the suite-wide 256-bit digest width.
using SubscriberKey = FixedBytes<16, struct SubscriberKeyTag>;  // K_i, never on the wire
using Nonce128 = FixedBytes<16, struct Nonce128Tag>;            // R and R_s
using SignedResponse = FixedBytes<4, struct SignedResponseTag>; // S
using SessionKey = FixedBytes<8, struct SessionKeyTag>;         // K_c
using MacKey = FixedBytes<32, struct MacKeyTag>;                // K_c1
using WideKey = FixedBytes<32, struct WideKeyTag>;              // K_c2, K_p
using MacTag32 = FixedBytes<32, struct MacTag32Tag>;

/// Per-transaction key chain: k_c1 = H(k_c), k_c2 = H(k_c1).
struct KeySet {
    SessionKey k_c;
    MacKey k_c1;
    WideKey k_c2;

    friend auto operator<=>(const KeySet&, const KeySet&) = default;
};

/// One-shot authentication material bound to a single attempt.
struct AuthTriplet {
    Nonce128 r;
    SignedResponse s;
    SessionKey k_c;
};

struct SignatureKeyPair {
    Bytes signing_key;    // opaque private material, never serialized
    Bytes verifying_key;  // public half, safe to publish
    std::string owner;
};

enum class CipherError {
    bad_framing,   // ciphertext too short for its header or length mismatch
};

inline const char* to_string(CipherError e) {
    switch (e) {
        case CipherError::bad_framing: return "bad_framing";
    }
    return "?";
}

/// Deterministic byte stream: a hash-counter DRBG keyed off a 64-bit seed
/// and a stream label, so independent parties get independent streams from
/// one scenario seed.
class Rng {
public:
    Rng(std::uint64_t seed, std::string_view label);

    Bytes draw(std::size_t n_bytes);
    Nonce128 draw_nonce128() { return Nonce128::from_bytes(draw(16)); }

private:
    std::array<std::uint8_t, 32> key_{};
    std::uint64_t counter_ = 0;
};

/// Abstract primitive provider. The protocol code is written against this
/// interface; the shipped suite is deterministic so transcripts replay
/// byte-for-byte. Implementations must be pure functions of their inputs
/// (the rng carries the only mutable state).
class CryptoProvider {
public:
    virtual ~CryptoProvider() = default;

    virtual SignedResponse a3_signed_response(const SubscriberKey& k_i,
                                              const Nonce128& r) const = 0;
    virtual SessionKey a8_session_key(const SubscriberKey& k_i, const Nonce128& r) const = 0;
    virtual KeySet derive_key_chain(const SessionKey& k_c) const = 0;

    // key must be 8 bytes (session key) or 32 bytes (wide key)
    virtual Bytes encrypt(ByteSpan key, ByteSpan plaintext) const = 0;
    virtual Result<Bytes, CipherError> decrypt(ByteSpan key, ByteSpan ciphertext) const = 0;

    virtual MacTag32 mac(const MacKey& key, ByteSpan data) const = 0;
    virtual bool verify_mac(const MacKey& key, ByteSpan data, const MacTag32& tag) const = 0;

    virtual SignatureKeyPair gen_signature_keypair(Rng& rng, std::string owner) const = 0;
    virtual Bytes sign(const SignatureKeyPair& keypair, ByteSpan data) const = 0;
    virtual bool verify_sig(ByteSpan verifying_key, ByteSpan data, ByteSpan signature) const = 0;

    virtual Bytes gen_random(Rng& rng, std::size_t n_bits) const = 0;

    Bytes encrypt(const SessionKey& k, ByteSpan p) const { return encrypt(k.span(), p); }
    Bytes encrypt(const WideKey& k, ByteSpan p) const { return encrypt(k.span(), p); }
    Result<Bytes, CipherError> decrypt(const SessionKey& k, ByteSpan c) const {
        return decrypt(k.span(), c);
    }
    Result<Bytes, CipherError> decrypt(const WideKey& k, ByteSpan c) const {
        return decrypt(k.span(), c);
    }
};

namespace detail {

inline std::array<std::uint8_t, 32> sha256(ByteSpan data) {
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 32;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    return out;
}

inline std::array<std::uint8_t, 32> sha256_cat(std::initializer_list<ByteSpan> parts) {
    Bytes buf;
    for (ByteSpan p : parts) append(buf, p);
    return sha256(buf);
}

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

inline PkeyPtr ed25519_from_seed(ByteSpan seed) {
    if (seed.size() != 32) throw std::length_error("ed25519 seed must be 32 bytes");
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), 32));
    if (!key) throw std::runtime_error("ed25519 key construction failed");
    return key;
}

}  // namespace detail

inline Rng::Rng(std::uint64_t seed, std::string_view label) {
    Bytes material = u64_be(seed);
    append(material, ByteSpan(reinterpret_cast<const std::uint8_t*>(label.data()), label.size()));
    key_ = detail::sha256(material);
}

inline Bytes Rng::draw(std::size_t n_bytes) {
    Bytes out;
    out.reserve(n_bytes);
    while (out.size() < n_bytes) {
        Bytes block_input(key_.begin(), key_.end());
        put_u64_be(block_input, counter_++);
        auto block = detail::sha256(block_input);
        std::size_t take = std::min<std::size_t>(32, n_bytes - out.size());
        out.insert(out.end(), block.begin(), block.begin() + take);
    }
    return out;
}

/// The built-in deterministic suite. A3/A8 are hash stand-ins separated by
/// suffix bytes 0x03/0x08; encryption is a SHA-256 counter keystream XOR
/// with a 4-byte plaintext-length header; the MAC is HMAC-SHA256 and
/// signatures are Ed25519 (deterministic by construction).
///
///   a3(k_i, r)      = SHA256(k_i || r || 0x03)[0..4)
///   a8(k_i, r)      = SHA256(k_i || r || 0x08)[0..8)
///   chain(k_c)      = { k_c, k_c1 = SHA256(k_c), k_c2 = SHA256(k_c1) }
///   stretch(k)      = k if |k| = 32, SHA256(k || 0x0E) if |k| = 8
///   E(k, p)         = BE32(|p|) || p XOR keystream(stretch(k))
///   keystream block = SHA256(stretch(k) || BE64(block_index))
class DeterministicSuite final : public CryptoProvider {
public:
    SignedResponse a3_signed_response(const SubscriberKey& k_i,
                                      const Nonce128& r) const override {
        static constexpr std::uint8_t sep[] = {0x03};
        auto h = detail::sha256_cat({k_i.span(), r.span(), ByteSpan(sep, 1)});
        return SignedResponse::from_bytes(ByteSpan(h.data(), 4));
    }

    SessionKey a8_session_key(const SubscriberKey& k_i, const Nonce128& r) const override {
        static constexpr std::uint8_t sep[] = {0x08};
        auto h = detail::sha256_cat({k_i.span(), r.span(), ByteSpan(sep, 1)});
        return SessionKey::from_bytes(ByteSpan(h.data(), 8));
    }

    KeySet derive_key_chain(const SessionKey& k_c) const override {
        auto k_c1 = detail::sha256(k_c.span());
        auto k_c2 = detail::sha256(ByteSpan(k_c1.data(), k_c1.size()));
        return KeySet{k_c, MacKey(k_c1), WideKey(k_c2)};
    }

    Bytes encrypt(ByteSpan key, ByteSpan plaintext) const override {
        Bytes out;
        out.reserve(4 + plaintext.size());
        put_u32_be(out, static_cast<std::uint32_t>(plaintext.size()));
        xor_stream(stretch(key), plaintext, out);
        return out;
    }

    Result<Bytes, CipherError> decrypt(ByteSpan key, ByteSpan ciphertext) const override {
        if (ciphertext.size() < 4) return CipherError::bad_framing;
        std::uint32_t n = 0;
        for (int i = 0; i < 4; ++i) n = n << 8 | ciphertext[i];
        if (ciphertext.size() - 4 != n) return CipherError::bad_framing;
        Bytes out;
        out.reserve(n);
        xor_stream(stretch(key), ciphertext.subspan(4), out);
        return out;
    }

    MacTag32 mac(const MacKey& key, ByteSpan data) const override {
        std::array<std::uint8_t, 32> tag{};
        unsigned int len = 32;
        if (!HMAC(EVP_sha256(), key.v.data(), static_cast<int>(key.v.size()), data.data(),
                  data.size(), tag.data(), &len))
            throw std::runtime_error("hmac failed");
        return MacTag32(tag);
    }

    bool verify_mac(const MacKey& key, ByteSpan data, const MacTag32& tag) const override {
        MacTag32 expect = mac(key, data);
        return CRYPTO_memcmp(expect.v.data(), tag.v.data(), 32) == 0;
    }

    SignatureKeyPair gen_signature_keypair(Rng& rng, std::string owner) const override {
        Bytes seed = rng.draw(32);
        auto key = detail::ed25519_from_seed(seed);
        Bytes pub(32);
        std::size_t pub_len = 32;
        if (EVP_PKEY_get_raw_public_key(key.get(), pub.data(), &pub_len) != 1 || pub_len != 32)
            throw std::runtime_error("ed25519 public key extraction failed");
        return SignatureKeyPair{std::move(seed), std::move(pub), std::move(owner)};
    }

    Bytes sign(const SignatureKeyPair& keypair, ByteSpan data) const override {
        auto key = detail::ed25519_from_seed(keypair.signing_key);
        detail::MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
            throw std::runtime_error("sign init failed");
        Bytes sig(64);
        std::size_t sig_len = 64;
        if (EVP_DigestSign(ctx.get(), sig.data(), &sig_len, data.data(), data.size()) != 1)
            throw std::runtime_error("sign failed");
        sig.resize(sig_len);
        return sig;
    }

    bool verify_sig(ByteSpan verifying_key, ByteSpan data, ByteSpan signature) const override {
        if (verifying_key.size() != 32) return false;
        detail::PkeyPtr key(
            EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, verifying_key.data(), 32));
        if (!key) return false;
        detail::MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
            return false;
        return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), data.data(),
                                data.size()) == 1;
    }

    Bytes gen_random(Rng& rng, std::size_t n_bits) const override {
        if (n_bits % 8 != 0) throw std::invalid_argument("n_bits must be a multiple of 8");
        return rng.draw(n_bits / 8);
    }

    /// Suite key width is 256 bits; the 64-bit session key is stretched
    /// with the 0x0E suffix before use as a cipher key.
    static std::array<std::uint8_t, 32> stretch(ByteSpan key) {
        if (key.size() == 32) {
            std::array<std::uint8_t, 32> out{};
            std::memcpy(out.data(), key.data(), 32);
            return out;
        }
        if (key.size() == 8) {
            static constexpr std::uint8_t sep[] = {0x0e};
            return detail::sha256_cat({key, ByteSpan(sep, 1)});
        }
        throw std::length_error("cipher key must be 8 or 32 bytes");
    }

private:
    static void xor_stream(const std::array<std::uint8_t, 32>& key, ByteSpan data, Bytes& out) {
        std::uint64_t block_index = 0;
        std::size_t off = 0;
        while (off < data.size()) {
            Bytes block_input(key.begin(), key.end());
            put_u64_be(block_input, block_index++);
            auto block = detail::sha256(block_input);
            std::size_t take = std::min<std::size_t>(32, data.size() - off);
            for (std::size_t i = 0; i < take; ++i)
                out.push_back(data[off + i] ^ block[i]);
            off += take;
        }
    }
};

}  // namespace nfcpay
