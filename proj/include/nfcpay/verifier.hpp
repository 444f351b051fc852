#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nfcpay/config.hpp"
#include "nfcpay/crypto.hpp"
#include "nfcpay/mobile.hpp"  // settlement_signing_payload only
#include "nfcpay/transcript.hpp"
#include "nfcpay/wire.hpp"

namespace nfcpay {

// ---------------------------------------------------------------------------
// Offline transcript verifier. Given only the wire codec, the crypto suite
// and the deployment config (subscriber keys, shops, balances), it replays
// a recorded transcript and checks every honest record cryptographically
// and every outcome arithmetically. It never instantiates a party state
// machine — everything is reconstructed from bytes on the wire.
//
// Records the adversary touched are exempt from semantic checks (they are
// the documented attack inputs) but still feed state tracking where they
// parse, so the honest reactions that follow can be judged in context.
// ---------------------------------------------------------------------------

struct VerifyIssue {
    std::uint64_t seq = 0;
    std::string message;
};

struct VerifyReport {
    std::vector<VerifyIssue> issues;
    std::size_t records = 0;
    std::size_t wire_records = 0;
    std::size_t outcomes = 0;
    std::size_t sessions = 0;  // authentication bindings reconstructed

    bool ok() const { return issues.empty(); }
};

class TranscriptVerifier {
public:
    TranscriptVerifier(const Config& cfg, const CryptoProvider& crypto)
        : cfg_(cfg), crypto_(crypto) {}

    VerifyReport verify(const std::vector<TranscriptRecord>& records) {
        report_ = VerifyReport{};
        reset_run_state();
        header_seen_ = false;

        for (std::size_t i = 0; i < records.size(); ++i) {
            const TranscriptRecord& r = records[i];
            ++report_.records;
            if (r.seq != i)
                issue(r.seq, "sequence number out of order (expected " + std::to_string(i) + ")");
            if (i == 0 && r.kind != "header") issue(r.seq, "transcript does not start with a header");

            if (r.kind == "header")
                check_header(r);
            else if (r.kind == "wire")
                check_wire(r);
            else if (r.kind == "link")
                check_link(r);
            else if (r.kind == "note")
                ;  // free-form commentary
            else if (r.kind == "outcome")
                check_outcome(r);
            else
                issue(r.seq, "unknown record kind: " + r.kind);
        }
        if (!header_seen_) issue(0, "transcript has no header record");
        if (report_.outcomes == 0) issue(0, "transcript has no outcome record");
        return report_;
    }

private:
    // --- record checks -------------------------------------------------------

    void check_header(const TranscriptRecord& r) {
        if (header_seen_) {
            issue(r.seq, "duplicate header record");
            return;
        }
        header_seen_ = true;
        if (r.scenario.empty()) issue(r.seq, "header names no scenario");
        mno_vkey_ = from_hex(r.mno_verifying_key);
        if (mno_vkey_.size() != 32) issue(r.seq, "operator verifying key is not 32 bytes");
        shop_vkeys_.clear();
        for (const auto& [shop_hex, key_hex] : r.shop_verifying_keys) {
            Bytes key = from_hex(key_hex);
            if (key.size() != 32) issue(r.seq, "shop verifying key is not 32 bytes");
            shop_vkeys_[shop_hex] = std::move(key);
        }
        if (shop_vkeys_.empty()) issue(r.seq, "header lists no shop verifying keys");
    }

    void check_link(const TranscriptRecord& r) {
        if (r.status != "up" && r.status != "down")
            issue(r.seq, "link record with status " + r.status);
    }

    void check_wire(const TranscriptRecord& r) {
        ++report_.wire_records;
        const bool honest = r.adversary.empty();

        if (r.step < 1 || r.step > 26) issue(r.seq, "wire record outside protocol steps 1-26");
        if (r.link != "nfc" && r.link != "backhaul")
            issue(r.seq, "wire record on unknown link " + r.link);
        if (r.time_ms < time_watermark_)
            issue(r.seq, "wire record travels back in time");
        time_watermark_ = r.time_ms;

        // The stored summary must be exactly what the bytes decode to —
        // any mutation of either field shows up here.
        auto decoded = decode(r.bytes);
        std::string expect_summary = decoded.ok()
                                         ? summarize(decoded.value())
                                         : std::string("undecodable:") + to_string(decoded.error());
        if (r.summary != expect_summary)
            issue(r.seq, "stored summary does not match the wire bytes");

        if (!decoded.ok()) {
            if (honest) issue(r.seq, "honest wire record does not decode");
            return;
        }
        const Message& msg = decoded.value();

        if (auto* m = std::get_if<AuthForward>(&msg)) {
            if (honest) {
                bool known = false;
                for (const auto& s : cfg_.shops) known = known || s.shop_id == m->shop_id;
                if (!known) issue(r.seq, "authentication forward names an unconfigured shop");
                Lai lai;
                if (!Lai::unpack(m->lai.span(), lai))
                    issue(r.seq, "authentication forward carries an unparseable location area");
            }
        } else if (auto* m = std::get_if<ChallengeMsg>(&msg)) {
            pending_r_ = m->r;  // state, honest or not
        } else if (auto* m = std::get_if<AuthResponseMsg>(&msg)) {
            check_auth_response(r, *m, honest);
        } else if (auto* m = std::get_if<AuthConfirmMsg>(&msg)) {
            check_auth_confirm(r, *m, honest);
        } else if (auto* m = std::get_if<PriceOfferMsg>(&msg)) {
            check_price_offer(r, *m, honest);
        } else if (auto* m = std::get_if<PaymentMessageMsg>(&msg)) {
            check_payment_message(r, *m, honest);
        } else if (auto* m = std::get_if<TransactionForwardMsg>(&msg)) {
            check_transaction_forward(r, *m, honest);
        } else if (auto* m = std::get_if<TransactionResultMsg>(&msg)) {
            check_transaction_result(r, *m, honest);
        } else if (auto* m = std::get_if<SettlementBundleMsg>(&msg)) {
            check_settlement_bundle(r, *m, honest);
        }
        // IdRequest, IdResponse, Declined, Stop, AuthSuccess, KeyDelivery:
        // nothing further is checkable from outside. In particular the
        // key-delivery ciphertext is under k_p, which never crosses a wire
        // and is not part of the deployment config given to the verifier.
    }

    /// The one identification step: the response must decrypt under the
    /// session key a8(k_i, R) of some configured subscriber, to exactly
    /// (R || R_s). That binding reconstructs every key the rest of the
    /// transcript uses. The same response legitimately appears twice (the
    /// terminal relays it on the other link), so a copy matching the
    /// current session is accepted idempotently.
    void check_auth_response(const TranscriptRecord& r, const AuthResponseMsg& m, bool honest) {
        if (session_) {
            auto plain = crypto_.decrypt(session_->k_c, m.enc_r_rs);
            if (plain.ok()) {
                auto pair = decode_nonce_pair(plain.value());
                if (pair.ok() && pair.value().first == session_->r &&
                    pair.value().second == session_->r_s)
                    return;  // faithful relay of the bound response
            }
        }
        if (!pending_r_) {
            if (honest) issue(r.seq, "authentication response without an outstanding challenge");
            return;
        }
        for (const auto& sub : cfg_.subscribers) {
            SessionKey k_c = crypto_.a8_session_key(sub.k_i, *pending_r_);
            auto plain = crypto_.decrypt(k_c, m.enc_r_rs);
            if (!plain) continue;
            auto pair = decode_nonce_pair(plain.value());
            if (!pair.ok() || pair.value().first != *pending_r_) continue;
            session_ = Session{sub.imsi, k_c, crypto_.derive_key_chain(k_c), *pending_r_,
                               pair.value().second};
            ++report_.sessions;
            pending_r_.reset();
            return;
        }
        if (honest)
            issue(r.seq, "authentication response verifies under no configured subscriber key");
    }

    void check_auth_confirm(const TranscriptRecord& r, const AuthConfirmMsg& m, bool honest) {
        if (!honest || !session_) return;
        auto plain = crypto_.decrypt(session_->k_c, m.enc_rs_r);
        if (!plain) {
            issue(r.seq, "authentication confirm does not decrypt under the session key");
            return;
        }
        auto pair = decode_nonce_pair(plain.value());
        if (!pair.ok() || pair.value().first != session_->r_s || pair.value().second != session_->r)
            issue(r.seq, "authentication confirm is not the swapped nonce pair");
    }

    void check_price_offer(const TranscriptRecord& r, const PriceOfferMsg& m, bool honest) {
        if (!session_) return;
        auto plain = crypto_.decrypt(session_->keys.k_c2, m.enc_offer);
        if (!plain.ok() || !decode_price_offer_body(plain.value()).ok()) {
            if (honest) issue(r.seq, "price offer does not decrypt under k_c2");
            return;
        }
        last_offer_ = decode_price_offer_body(plain.value()).value();
    }

    void check_payment_message(const TranscriptRecord& r, const PaymentMessageMsg& m,
                               bool honest) {
        last_pm_ = m;  // the terminal's relay is judged against what it saw
        if (!session_) {
            if (honest) issue(r.seq, "payment message without an authenticated session");
            return;
        }
        if (!honest) return;
        if (!crypto_.verify_mac(session_->keys.k_c1, m.enc_trm, m.trm_mac))
            issue(r.seq, "payment message MAC invalid under k_c1");

        auto pi_plain = crypto_.decrypt(session_->keys.k_c2, m.enc_pi);
        auto trm_plain = crypto_.decrypt(session_->k_c, m.enc_trm);
        if (!pi_plain.ok() || !decode_payment_info(pi_plain.value()).ok()) {
            issue(r.seq, "readable payment info does not decrypt under k_c2");
            return;
        }
        if (!trm_plain.ok() || !decode_transaction_request(trm_plain.value()).ok()) {
            issue(r.seq, "transaction request does not decrypt under k_c");
            return;
        }
        PaymentInfo pi = decode_payment_info(pi_plain.value()).value();
        TransactionRequest trm = decode_transaction_request(trm_plain.value()).value();
        if (!(trm.pi == pi))
            issue(r.seq, "sealed transaction request disagrees with the readable payment info");
        if (trm.r_s != session_->r_s)
            issue(r.seq, "transaction request carries a foreign session nonce");
        if (last_offer_ && (pi.receipt_no != last_offer_->receipt_no ||
                            pi.total_price != last_offer_->total_price))
            issue(r.seq, "payment info does not match the accepted offer");
    }

    void check_transaction_forward(const TranscriptRecord& r, const TransactionForwardMsg& m,
                                   bool honest) {
        if (!honest) return;
        if (session_ && !crypto_.verify_mac(session_->keys.k_c1, m.enc_trm, m.trm_mac))
            issue(r.seq, "forwarded transaction request MAC invalid under k_c1");
        if (last_pm_) {
            // Relay fidelity: the terminal must forward the opaque half
            // byte-identically, whoever authored it.
            if (m.enc_trm != last_pm_->enc_trm || m.trm_mac != last_pm_->trm_mac)
                issue(r.seq, "terminal did not relay the sealed transaction request verbatim");
            if (session_) {
                auto pi_plain = crypto_.decrypt(session_->keys.k_c2, last_pm_->enc_pi);
                if (pi_plain.ok()) {
                    auto pi = decode_payment_info(pi_plain.value());
                    if (pi.ok() && pi.value().ts_u != m.ts_u)
                        issue(r.seq, "forwarded timestamp differs from the payment info");
                }
            }
        }
    }

    void check_transaction_result(const TranscriptRecord& r, const TransactionResultMsg& m,
                                  bool honest) {
        if (!honest) return;
        if (!crypto_.verify_sig(mno_vkey_, m.enc_ti, m.mno_signature))
            issue(r.seq, "transaction result signature invalid");
        if (session_) {
            auto plain = crypto_.decrypt(session_->keys.k_c2, m.enc_ti);
            if (!plain.ok() || !decode_transaction_info(plain.value()).ok())
                issue(r.seq, "transaction info does not decrypt under k_c2");
        }
    }

    void check_settlement_bundle(const TranscriptRecord& r, const SettlementBundleMsg& m,
                                 bool honest) {
        if (!honest) return;
        if (!crypto_.verify_sig(mno_vkey_, m.result.enc_ti, m.result.mno_signature))
            issue(r.seq, "settlement bundle carries an invalid operator signature");
        Bytes payload = settlement_signing_payload(m.result, m.sd);
        bool countersigned = false;
        for (const auto& [shop_hex, key] : shop_vkeys_)
            countersigned = countersigned || crypto_.verify_sig(key, payload, m.pos_signature);
        if (!countersigned)
            issue(r.seq, "settlement bundle countersignature verifies under no shop key");
        if (m.sd.total != m.sd.sum())
            issue(r.seq, "settlement shopping details do not sum to their total");
    }

    /// Money conservation for one sub-run, judged purely against the
    /// config's initial balances and the outcome's own ledger.
    void check_outcome(const TranscriptRecord& r) {
        ++report_.outcomes;
        if (r.verdict != "settled" && r.verdict != "aborted" && r.verdict != "dispute")
            issue(r.seq, "unknown verdict: " + r.verdict);

        std::uint64_t debited = 0, credited = 0;
        std::map<std::string, std::uint64_t> debit_by_imsi, count_by_imsi;
        std::map<std::string, std::uint64_t> credit_by_bank;
        for (const auto& e : r.ledger) {
            debited += e.amount;
            debit_by_imsi[e.debit_imsi.hex()] += e.amount;
            count_by_imsi[e.debit_imsi.hex()] += 1;
            credit_by_bank[e.credit_bank_ref] += e.amount;
        }
        for (const auto& [shop, amount] : r.credited) credited += amount;
        if (debited != credited)
            issue(r.seq, "ledger debits and shop credits do not balance");

        for (const auto& sub : cfg_.subscribers) {
            const std::string imsi = sub.imsi.hex();
            auto bal = r.balances.find(imsi);
            if (bal == r.balances.end()) {
                issue(r.seq, "outcome is missing a balance for subscriber " + imsi);
                continue;
            }
            if (bal->second + debit_by_imsi[imsi] != sub.balance)
                issue(r.seq, "balance of " + imsi + " does not equal initial minus ledger debits");
            auto tc = r.tc.find(imsi);
            if (tc == r.tc.end() || tc->second != count_by_imsi[imsi])
                issue(r.seq, "transaction counter of " + imsi +
                                 " does not equal its settled-transaction count");
        }
        for (const auto& shop : cfg_.shops) {
            auto credit = r.credited.find(shop.shop_id.hex());
            if (credit == r.credited.end()) {
                issue(r.seq, "outcome is missing credits for shop " + shop.shop_id.hex());
                continue;
            }
            if (credit->second != credit_by_bank[shop.bank_ref])
                issue(r.seq, "credits of shop " + shop.shop_id.hex() +
                                 " do not match the ledger entries to its bank reference");
        }

        // An outcome closes a sub-run; a following record starts a fresh
        // world sharing only the header.
        reset_run_state();
    }

    // --- state ---------------------------------------------------------------

    struct Session {
        Imsi imsi;
        SessionKey k_c;
        KeySet keys;
        Nonce128 r;
        Nonce128 r_s;
    };

    void reset_run_state() {
        pending_r_.reset();
        session_.reset();
        last_pm_.reset();
        last_offer_.reset();
        time_watermark_ = 0;
    }

    void issue(std::uint64_t seq, std::string message) {
        report_.issues.push_back({seq, std::move(message)});
    }

    const Config& cfg_;
    const CryptoProvider& crypto_;
    VerifyReport report_;

    bool header_seen_ = false;
    Bytes mno_vkey_;
    std::map<std::string, Bytes> shop_vkeys_;

    std::optional<Nonce128> pending_r_;
    std::optional<Session> session_;
    std::optional<PaymentMessageMsg> last_pm_;
    std::optional<PriceOfferBody> last_offer_;
    std::uint64_t time_watermark_ = 0;
};

inline VerifyReport verify_transcript(const std::vector<TranscriptRecord>& records,
                                      const Config& cfg, const CryptoProvider& crypto) {
    return TranscriptVerifier(cfg, crypto).verify(records);
}

inline VerifyReport verify_transcript(const std::vector<TranscriptRecord>& records,
                                      const Config& cfg) {
    DeterministicSuite suite;
    return verify_transcript(records, cfg, suite);
}

}  // namespace nfcpay
