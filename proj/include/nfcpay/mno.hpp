#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "nfcpay/crypto.hpp"
#include "nfcpay/errors.hpp"
#include "nfcpay/observer.hpp"
#include "nfcpay/wire.hpp"

namespace nfcpay {

enum class TxnError {
    mac_invalid,
    rs_mismatch,
    tc_replay,
    ts_stale,
    invalid_amount,
    over_cap,
    insufficient_funds,
};

inline const char* to_string(TxnError e) {
    switch (e) {
        case TxnError::mac_invalid: return "mac-invalid";
        case TxnError::rs_mismatch: return "rs-mismatch";
        case TxnError::tc_replay: return "tc-replay";
        case TxnError::ts_stale: return "ts-stale";
        case TxnError::invalid_amount: return "invalid-amount";
        case TxnError::over_cap: return "over-cap";
        case TxnError::insufficient_funds: return "insufficient-funds";
    }
    return "?";
}

struct SubscriberRecord {
    Imsi imsi;
    Tmsi tmsi;
    SubscriberKey k_i;
    std::uint64_t tc_expected = 0;
    std::uint64_t balance = 0;  // minor units
    enum class Status { active, suspended } status = Status::active;
    std::vector<Tmsi> tmsi_history;  // every identity this subscriber has held
};

struct ShopRecord {
    ShopId shop_id;
    WideKey k_p;
    std::string bank_ref;
    Bytes verifying_key;  // POS public key
    std::uint64_t credited = 0;  // total settled into this shop's account
};

struct LedgerEntry {
    TxnSerial txn_serial;
    Imsi debit_imsi;
    std::string credit_bank_ref;
    std::uint64_t amount = 0;
    std::uint64_t ts_tr = 0;
};

struct MnoPolicy {
    std::uint64_t ts_window_ms = 120'000;  // "defined time window" for TS_U
    std::uint64_t txn_cap = 5'000;         // micropayment ceiling, minor units
    bool rotate_tmsi_on_settlement = true;
};

using SessionId = std::uint64_t;

/// The network operator: AuC (triplet generation against the subscriber
/// registry), MSC-side mutual authentication, per-session key chain,
/// POS key delivery under K_p, and the wallet ledger.
class MnoCore {
public:
    enum class Phase { awaiting_response, authenticated, keyed, settled, aborted };

    struct Session {
        SessionId id = 0;
        Imsi imsi;
        ShopId shop_id;
        LaiBytes lai;
        AuthTriplet triplet;
        bool triplet_consumed = false;
        std::optional<Nonce128> r_s_seen;  // captured in step 9
        std::optional<KeySet> keyset;
        bool auth_success_received = false;  // step 12 landed
        Phase phase = Phase::awaiting_response;
    };

    MnoCore(const CryptoProvider& crypto, Rng rng, MnoPolicy policy = {},
            KeyObserver* keys = nullptr)
        : crypto_(crypto), rng_(std::move(rng)), policy_(policy), keys_(keys) {
        keypair_ = crypto_.gen_signature_keypair(rng_, "mno");
        note_key("sign.private", keypair_.signing_key);
    }

    // --- registry -----------------------------------------------------------

    const SubscriberRecord& register_subscriber(const Imsi& imsi, const SubscriberKey& k_i,
                                                std::uint64_t initial_balance) {
        if (subscribers_.count(imsi)) throw DuplicateIdentity("subscriber already registered");
        SubscriberRecord rec;
        rec.imsi = imsi;
        rec.k_i = k_i;
        rec.balance = initial_balance;
        rec.tmsi = fresh_tmsi();
        rec.tmsi_history.push_back(rec.tmsi);
        note_key("k_i." + imsi.hex(), k_i.span());
        tmsi_index_[rec.tmsi] = imsi;
        return subscribers_.emplace(imsi, std::move(rec)).first->second;
    }

    /// Registers the shop and returns K_p. The key is handed out exactly
    /// here; afterwards only the record (without a getter for K_p misuse)
    /// is consulted internally.
    WideKey register_shop(const ShopId& shop_id, std::string bank_ref, Bytes pos_verifying_key) {
        if (shops_.count(shop_id)) throw DuplicateIdentity("shop already registered");
        ShopRecord rec;
        rec.shop_id = shop_id;
        rec.k_p = WideKey::from_bytes(rng_.draw(32));
        rec.bank_ref = std::move(bank_ref);
        rec.verifying_key = std::move(pos_verifying_key);
        note_key("k_p." + shop_id.hex(), rec.k_p.span());
        WideKey out = rec.k_p;
        shops_.emplace(shop_id, std::move(rec));
        return out;
    }

    Tmsi rotate_tmsi(const Imsi& imsi) {
        auto it = subscribers_.find(imsi);
        if (it == subscribers_.end()) throw UnknownIdentity("unknown imsi");
        tmsi_index_.erase(it->second.tmsi);
        it->second.tmsi = fresh_tmsi();
        it->second.tmsi_history.push_back(it->second.tmsi);
        tmsi_index_[it->second.tmsi] = imsi;
        return it->second.tmsi;
    }

    // --- protocol handlers ----------------------------------------------------

    struct AuthRequestOutcome {
        std::optional<SessionId> session_id;  // present iff a challenge was issued
        std::variant<ChallengeMsg, Declined> reply;
    };

    /// Steps 4-6. A known TMSI gets a fresh triplet and a challenge; an
    /// unknown one gets Declined. An unregistered shop is a configuration
    /// fault, not a protocol outcome.
    AuthRequestOutcome handle_auth_request(const Tmsi& tmsi, const LaiBytes& lai,
                                           const ShopId& shop_id) {
        if (!shops_.count(shop_id)) throw UnknownIdentity("shop not registered");
        auto idx = tmsi_index_.find(tmsi);
        if (idx == tmsi_index_.end()) return {std::nullopt, Declined{}};
        const SubscriberRecord& sub = subscribers_.at(idx->second);

        Session s;
        s.id = next_session_id_++;
        s.imsi = sub.imsi;
        s.shop_id = shop_id;
        s.lai = lai;
        s.triplet.r = Nonce128::from_bytes(crypto_.gen_random(rng_, 128));
        s.triplet.s = crypto_.a3_signed_response(sub.k_i, s.triplet.r);
        s.triplet.k_c = crypto_.a8_session_key(sub.k_i, s.triplet.r);
        note_key("k_c.session" + std::to_string(s.id), s.triplet.k_c.span());
        ChallengeMsg challenge{s.triplet.r};
        SessionId id = s.id;
        sessions_.emplace(id, std::move(s));
        return {id, challenge};
    }

    /// Steps 9-10: decrypt E_Kc(R || R_s); echo back swapped on a match,
    /// Stop on anything else.
    std::variant<AuthConfirmMsg, StopMsg> handle_auth_response(SessionId id, ByteSpan enc_r_rs) {
        Session& s = session_in_phase(id, Phase::awaiting_response, "handle_auth_response");
        s.triplet_consumed = true;
        auto plain = crypto_.decrypt(s.triplet.k_c, enc_r_rs);
        if (!plain) return abort_session(s);
        auto pair = decode_nonce_pair(plain.value());
        if (!pair) return abort_session(s);
        const auto& [r_echo, r_s] = pair.value();
        if (r_echo != s.triplet.r) return abort_session(s);
        s.r_s_seen = r_s;
        s.phase = Phase::authenticated;
        return AuthConfirmMsg{crypto_.encrypt(s.triplet.k_c, encode_nonce_pair(r_s, s.triplet.r))};
    }

    /// Step 12 is fire-and-forget from the device; it gates key delivery.
    void handle_auth_success(SessionId id) {
        Session& s = session_in_phase(id, Phase::authenticated, "handle_auth_success");
        s.auth_success_received = true;
    }

    /// Steps 13-14: derive the chain and release k_c2 (only k_c2) under K_p.
    KeyDeliveryMsg deliver_pos_key(SessionId id, const ShopId& shop_id) {
        Session& s = find_session(id);
        auto shop = shops_.find(shop_id);
        if (shop == shops_.end()) throw UnknownIdentity("shop not registered");
        if (s.phase != Phase::authenticated || !s.auth_success_received)
            throw PhaseError("deliver_pos_key requires a completed authentication");
        if (shop_id != s.shop_id) throw PhaseError("key delivery to a different shop");
        s.keyset = crypto_.derive_key_chain(s.triplet.k_c);
        note_key("k_c1.session" + std::to_string(s.id), s.keyset->k_c1.span());
        note_key("k_c2.session" + std::to_string(s.id), s.keyset->k_c2.span());
        s.phase = Phase::keyed;
        return KeyDeliveryMsg{crypto_.encrypt(shop->second.k_p, s.keyset->k_c2.span())};
    }

    /// Step 22. Check order: MAC (before any decryption), R_s, TC, TS_U,
    /// amount sanity, cap, funds. Every rejection leaves the registry,
    /// ledger and counters untouched.
    Result<TransactionResultMsg, TxnError> handle_transaction(SessionId id, ByteSpan enc_trm,
                                                              const MacTag32& trm_mac,
                                                              std::uint64_t ts_u,
                                                              std::uint64_t now_ms) {
        Session& s = find_session(id);
        if (s.phase != Phase::keyed && s.phase != Phase::settled)
            throw PhaseError("handle_transaction requires a keyed session");
        if (!crypto_.verify_mac(s.keyset->k_c1, enc_trm, trm_mac)) return TxnError::mac_invalid;

        auto plain = crypto_.decrypt(s.keyset->k_c, enc_trm);
        if (!plain) throw std::runtime_error("TRM undecodable under a valid MAC");
        auto trm_r = decode_transaction_request(plain.value());
        if (!trm_r) throw std::runtime_error("TRM undecodable under a valid MAC");
        const TransactionRequest& trm = trm_r.value();

        if (!s.r_s_seen || trm.r_s != *s.r_s_seen) return TxnError::rs_mismatch;

        SubscriberRecord& sub = subscribers_.at(s.imsi);
        if (trm.tc != sub.tc_expected + 1) return TxnError::tc_replay;
        // Both the relayed timestamp and the authenticated copy inside the
        // TRM must sit in the window; the authenticated one is decisive.
        if (!within_window(trm.pi.ts_u, now_ms) || !within_window(ts_u, now_ms))
            return TxnError::ts_stale;
        if (trm.pi.total_price == 0) return TxnError::invalid_amount;
        if (trm.pi.total_price > policy_.txn_cap) return TxnError::over_cap;
        if (trm.pi.total_price > sub.balance) return TxnError::insufficient_funds;

        // Execute: debit, credit, ledger, counter.
        ShopRecord& shop = shops_.at(s.shop_id);
        TransactionInfo ti;
        ti.txn_serial = TxnSerial::from_bytes(u64_be(next_txn_serial_++));
        ti.amount = trm.pi.total_price;
        ti.ts_tr = now_ms;
        sub.balance -= ti.amount;
        shop.credited += ti.amount;
        sub.tc_expected = trm.tc;
        ledger_.push_back({ti.txn_serial, sub.imsi, shop.bank_ref, ti.amount, ti.ts_tr});
        s.phase = Phase::settled;

        if (policy_.rotate_tmsi_on_settlement) rotate_tmsi(sub.imsi);

        TransactionResultMsg out;
        out.enc_ti = crypto_.encrypt(s.keyset->k_c2, encode_transaction_info(ti));
        out.mno_signature = crypto_.sign(keypair_, out.enc_ti);
        return out;
    }

    // --- accessors -------------------------------------------------------------

    const Bytes& verifying_key() const { return keypair_.verifying_key; }
    const MnoPolicy& policy() const { return policy_; }
    const std::vector<LedgerEntry>& ledger() const { return ledger_; }

    const SubscriberRecord& subscriber(const Imsi& imsi) const {
        auto it = subscribers_.find(imsi);
        if (it == subscribers_.end()) throw UnknownIdentity("unknown imsi");
        return it->second;
    }

    const ShopRecord& shop(const ShopId& id) const {
        auto it = shops_.find(id);
        if (it == shops_.end()) throw UnknownIdentity("unknown shop");
        return it->second;
    }

    std::optional<Imsi> imsi_for_tmsi(const Tmsi& tmsi) const {
        auto it = tmsi_index_.find(tmsi);
        if (it == tmsi_index_.end()) return std::nullopt;
        return it->second;
    }

    const Session& session(SessionId id) const {
        return const_cast<MnoCore*>(this)->find_session(id);
    }

    std::uint64_t total_debits() const {
        std::uint64_t s = 0;
        for (const auto& e : ledger_) s += e.amount;
        return s;
    }

    std::uint64_t total_credits() const {
        std::uint64_t s = 0;
        for (const auto& [id, shop] : shops_) s += shop.credited;
        return s;
    }

private:
    Session& find_session(SessionId id) {
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw UnknownIdentity("unknown session");
        return it->second;
    }

    Session& session_in_phase(SessionId id, Phase expect, const char* op) {
        Session& s = find_session(id);
        if (s.phase != expect) throw PhaseError(std::string(op) + ": wrong session phase");
        return s;
    }

    StopMsg abort_session(Session& s) {
        s.phase = Phase::aborted;
        return StopMsg{};
    }

    bool within_window(std::uint64_t ts, std::uint64_t now) const {
        std::uint64_t skew = ts > now ? ts - now : now - ts;
        return skew <= policy_.ts_window_ms;
    }

    Tmsi fresh_tmsi() {
        for (;;) {
            Tmsi t = Tmsi::from_bytes(rng_.draw(4));
            if (!tmsi_index_.count(t)) return t;
        }
    }

    void note_key(const std::string& label, ByteSpan bytes) {
        if (keys_) keys_->note_key("mno", label, bytes);
    }

    const CryptoProvider& crypto_;
    Rng rng_;
    MnoPolicy policy_;
    KeyObserver* keys_;
    SignatureKeyPair keypair_;

    std::map<Imsi, SubscriberRecord> subscribers_;
    std::map<ShopId, ShopRecord> shops_;
    std::map<Tmsi, Imsi> tmsi_index_;
    std::map<SessionId, Session> sessions_;
    std::vector<LedgerEntry> ledger_;
    SessionId next_session_id_ = 1;
    std::uint64_t next_txn_serial_ = 1;
};

}  // namespace nfcpay
