#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nfcpay/crypto.hpp"
#include "nfcpay/observer.hpp"

namespace nfcpay {

/// White-box probe for the harness: a registry of every key each party
/// ever held, call counters for decrypt/MAC per key, and the set of
/// ciphertexts ever produced (so MAC-over-plaintext is detectable). The
/// parties themselves never read any of this.
class Instrumentation final : public KeyObserver {
public:
    // --- key-visibility registry ---------------------------------------

    void note_key(std::string_view party, std::string_view label, ByteSpan bytes) override {
        keys_[std::string(party)][std::string(label)] = Bytes(bytes.begin(), bytes.end());
    }

    const std::map<std::string, std::map<std::string, Bytes>>& keys() const { return keys_; }

    /// Union of key labels across all parties whose name starts with the
    /// prefix (e.g. "pos." collects every POS terminal).
    std::set<std::string> labels_for(std::string_view party_prefix) const {
        std::set<std::string> out;
        for (const auto& [party, labels] : keys_)
            if (party.rfind(party_prefix, 0) == 0)
                for (const auto& [label, bytes] : labels) out.insert(label);
        return out;
    }

    /// Secrets that must never appear inside any wire message: the
    /// subscriber key, the PIN and the MAC key k_c1, wherever noted.
    std::vector<std::pair<std::string, Bytes>> wire_forbidden_secrets() const {
        std::vector<std::pair<std::string, Bytes>> out;
        auto forbidden = [](const std::string& label) {
            return label == "k_i" || label.rfind("k_i.", 0) == 0 || label == "pin" ||
                   label == "k_c1" || label.rfind("k_c1.", 0) == 0;
        };
        for (const auto& [party, labels] : keys_)
            for (const auto& [label, bytes] : labels)
                if (forbidden(label)) out.emplace_back(party + "/" + label, bytes);
        return out;
    }

    static bool contains(ByteSpan haystack, ByteSpan needle) {
        if (needle.empty() || haystack.size() < needle.size()) return false;
        return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
               haystack.end();
    }

    // --- call counters ---------------------------------------------------

    void on_encrypt(ByteSpan key, ByteSpan ciphertext) {
        ++encrypt_calls_[to_hex(key)];
        ciphertexts_.insert(to_hex(ciphertext));
    }
    void on_decrypt(ByteSpan key) { ++decrypt_calls_[to_hex(key)]; }
    void on_verify_mac(const MacKey& key, ByteSpan) { ++mac_verify_calls_[key.hex()]; }
    void on_mac(const MacKey& key, ByteSpan data) {
        ++mac_calls_[key.hex()];
        if (!ciphertexts_.count(to_hex(data)))
            etm_violations_.push_back("mac over bytes that are not a known ciphertext");
    }

    std::uint64_t decrypt_count(ByteSpan key) const { return lookup(decrypt_calls_, to_hex(key)); }
    std::uint64_t encrypt_count(ByteSpan key) const { return lookup(encrypt_calls_, to_hex(key)); }
    std::uint64_t mac_verify_count(const MacKey& key) const {
        return lookup(mac_verify_calls_, key.hex());
    }
    std::uint64_t total_mac_verifies() const { return total(mac_verify_calls_); }
    std::uint64_t total_decrypts() const { return total(decrypt_calls_); }

    /// MAC computations over bytes that no encrypt call produced; the
    /// encrypt-then-MAC discipline requires this to stay empty.
    const std::vector<std::string>& etm_violations() const { return etm_violations_; }

private:
    static std::uint64_t lookup(const std::map<std::string, std::uint64_t>& m,
                                const std::string& k) {
        auto it = m.find(k);
        return it == m.end() ? 0 : it->second;
    }
    static std::uint64_t total(const std::map<std::string, std::uint64_t>& m) {
        std::uint64_t s = 0;
        for (const auto& [k, v] : m) s += v;
        return s;
    }

    std::map<std::string, std::map<std::string, Bytes>> keys_;
    std::map<std::string, std::uint64_t> encrypt_calls_;
    std::map<std::string, std::uint64_t> decrypt_calls_;
    std::map<std::string, std::uint64_t> mac_calls_;
    std::map<std::string, std::uint64_t> mac_verify_calls_;
    std::set<std::string> ciphertexts_;
    std::vector<std::string> etm_violations_;
};

/// Pass-through provider that reports every call into the Instrumentation
/// before delegating. Installing it changes no byte of any output.
class InstrumentedProvider final : public CryptoProvider {
public:
    InstrumentedProvider(const CryptoProvider& inner, Instrumentation& instr)
        : inner_(inner), instr_(instr) {}

    SignedResponse a3_signed_response(const SubscriberKey& k_i, const Nonce128& r) const override {
        return inner_.a3_signed_response(k_i, r);
    }
    SessionKey a8_session_key(const SubscriberKey& k_i, const Nonce128& r) const override {
        return inner_.a8_session_key(k_i, r);
    }
    KeySet derive_key_chain(const SessionKey& k_c) const override {
        return inner_.derive_key_chain(k_c);
    }
    Bytes encrypt(ByteSpan key, ByteSpan plaintext) const override {
        Bytes ct = inner_.encrypt(key, plaintext);
        instr_.on_encrypt(key, ct);
        return ct;
    }
    Result<Bytes, CipherError> decrypt(ByteSpan key, ByteSpan ciphertext) const override {
        instr_.on_decrypt(key);
        return inner_.decrypt(key, ciphertext);
    }
    MacTag32 mac(const MacKey& key, ByteSpan data) const override {
        instr_.on_mac(key, data);
        return inner_.mac(key, data);
    }
    bool verify_mac(const MacKey& key, ByteSpan data, const MacTag32& tag) const override {
        instr_.on_verify_mac(key, data);
        return inner_.verify_mac(key, data, tag);
    }
    SignatureKeyPair gen_signature_keypair(Rng& rng, std::string owner) const override {
        return inner_.gen_signature_keypair(rng, std::move(owner));
    }
    Bytes sign(const SignatureKeyPair& keypair, ByteSpan data) const override {
        return inner_.sign(keypair, data);
    }
    bool verify_sig(ByteSpan verifying_key, ByteSpan data, ByteSpan signature) const override {
        return inner_.verify_sig(verifying_key, data, signature);
    }
    Bytes gen_random(Rng& rng, std::size_t n_bits) const override {
        return inner_.gen_random(rng, n_bits);
    }

private:
    const CryptoProvider& inner_;
    Instrumentation& instr_;
};

}  // namespace nfcpay
