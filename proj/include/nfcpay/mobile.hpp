#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "nfcpay/crypto.hpp"
#include "nfcpay/errors.hpp"
#include "nfcpay/observer.hpp"
#include "nfcpay/wire.hpp"

namespace nfcpay {

/// Scripted stand-in for the human: whether they agree to the displayed
/// price, and the PIN digits they type. No interactive I/O anywhere.
struct UserAction {
    bool agree = true;
    std::string pin;
};

struct SettlementReceipt {
    std::optional<TransactionInfo> ti;
    ShoppingDetails sd;
    Bytes mno_signature;
    Bytes pos_signature;
    bool accepted = false;
    std::string reject_reason;  // empty when accepted
};

/// Signing payload for the POS countersignature in steps 24-25: the MNO's
/// result message followed by the shopping details, both length-delimited
/// so the concatenation cannot be reparsed ambiguously.
inline Bytes settlement_signing_payload(const TransactionResultMsg& result,
                                        const ShoppingDetails& sd) {
    Bytes out;
    detail::put_var(out, result.enc_ti);
    detail::put_var(out, result.mno_signature);
    encode_shopping_details_into(out, sd);
    return out;
}

/// The customer handset plus SIM. K_i and the PIN live here and are never
/// serialized; everything that leaves goes through the returned messages.
class MobileDevice {
public:
    enum class Phase {
        idle,
        identified,    // answered an ID request, no challenge yet
        challenged,    // response sent, waiting for the operator's confirm
        authenticated, // mutual authentication done, key chain derived
        pin_verified,  // offer accepted and PIN checked
        paid,          // payment message emitted
        settled,
        aborted,
    };

    struct Config {
        Imsi imsi;
        Tmsi tmsi;
        Lai lai;
        SubscriberKey k_i;
        std::string pin;            // 4-6 digits
        int pin_retry_limit = 3;
        std::uint64_t tc = 0;
        Bytes mno_verifying_key;    // trust anchors provisioned at setup
        Bytes pos_verifying_key;
    };

    MobileDevice(const CryptoProvider& crypto, Rng rng, Config cfg, KeyObserver* keys = nullptr)
        : crypto_(crypto),
          rng_(std::move(rng)),
          cfg_(std::move(cfg)),
          keys_(keys),
          pin_retries_left_(cfg_.pin_retry_limit) {
        if (cfg_.pin.size() < 4 || cfg_.pin.size() > 6 || !Lai::all_digits(cfg_.pin))
            throw ConfigError("PIN must be 4-6 decimal digits");
        note_key("k_i", cfg_.k_i.span());
        note_key("pin", ByteSpan(reinterpret_cast<const std::uint8_t*>(cfg_.pin.data()),
                                 cfg_.pin.size()));
    }

    // --- protocol handlers ------------------------------------------------

    /// Step 2-3. Opens a fresh session; only the temporary identity and the
    /// location area leave the device.
    IdResponse handle_id_request() {
        session_ = Session{};
        session_.phase = Phase::identified;
        return IdResponse{cfg_.tmsi, cfg_.lai.pack()};
    }

    /// Steps 7-8: derive k_c from the challenge, draw a fresh R_s, answer
    /// with E_Kc(R || R_s).
    AuthResponseMsg handle_challenge(const Nonce128& r) {
        if (session_.phase != Phase::identified && session_.phase != Phase::idle)
            throw PhaseError("challenge repeated within one session");
        session_.r = r;
        session_.k_c = crypto_.a8_session_key(cfg_.k_i, r);
        session_.r_s = Nonce128::from_bytes(crypto_.gen_random(rng_, 128));
        session_.phase = Phase::challenged;
        note_key("k_c", session_.k_c->span());
        return AuthResponseMsg{
            crypto_.encrypt(*session_.k_c, encode_nonce_pair(r, *session_.r_s))};
    }

    /// Steps 11-12: the operator is authentic iff the confirm decrypts to
    /// exactly (R_s || R). On success the key chain is derived.
    Result<AuthSuccessMsg, std::string> handle_auth_confirm(ByteSpan enc_rs_r) {
        if (session_.phase != Phase::challenged)
            throw PhaseError("auth confirm without an outstanding challenge");
        auto plain = crypto_.decrypt(*session_.k_c, enc_rs_r);
        if (!plain) return abort("confirm undecodable");
        auto pair = decode_nonce_pair(plain.value());
        if (!pair) return abort("confirm malformed");
        if (pair.value().first != *session_.r_s || pair.value().second != *session_.r)
            return abort("confirm nonce mismatch");
        session_.keyset = crypto_.derive_key_chain(*session_.k_c);
        note_key("k_c1", session_.keyset->k_c1.span());
        note_key("k_c2", session_.keyset->k_c2.span());
        session_.phase = Phase::authenticated;
        return AuthSuccessMsg{};
    }

    enum class OfferOutcome { proceed, pin_fail, user_decline, aborted };

    /// Steps 15-17. Decrypts the displayed offer and gates on the PIN; the
    /// check is SIM-local, so it works with the NFC link down. Retries are
    /// limited; exhaustion kills the session.
    OfferOutcome handle_price_offer(ByteSpan enc_offer, const UserAction& action) {
        if (session_.phase != Phase::authenticated)
            throw PhaseError("price offer before key agreement");
        auto plain = crypto_.decrypt(session_.keyset->k_c2, enc_offer);
        if (!plain) {
            abort("offer undecodable");
            return OfferOutcome::aborted;
        }
        auto offer = decode_price_offer_body(plain.value());
        if (!offer) {
            abort("offer malformed");
            return OfferOutcome::aborted;
        }
        if (!action.agree) {
            abort("user declined");
            return OfferOutcome::user_decline;
        }
        if (action.pin != cfg_.pin) {
            if (--pin_retries_left_ <= 0) {
                abort("pin retries exhausted");
                return OfferOutcome::aborted;
            }
            return OfferOutcome::pin_fail;
        }
        session_.offer = offer.value();
        session_.phase = Phase::pin_verified;
        return OfferOutcome::proceed;
    }

    /// Steps 18-19: PI under k_c2 for the shop, TRM under k_c for the
    /// operator, MAC over the TRM ciphertext (encrypt-then-MAC).
    PaymentMessageMsg build_payment_message(std::uint64_t ts_u) {
        if (session_.phase != Phase::pin_verified)
            throw PhaseError("payment before PIN verification");
        PaymentInfo pi{session_.offer->receipt_no, session_.offer->total_price, ts_u};
        TransactionRequest trm{pi, *session_.r_s, cfg_.tc + 1};
        PaymentMessageMsg msg;
        msg.enc_pi = crypto_.encrypt(session_.keyset->k_c2, encode_payment_info(pi));
        msg.enc_trm = crypto_.encrypt(session_.keyset->k_c, encode_transaction_request(trm));
        msg.trm_mac = crypto_.mac(session_.keyset->k_c1, msg.enc_trm);
        session_.pi = pi;
        session_.phase = Phase::paid;
        return msg;
    }

    /// Step 26: both signatures must verify and all three totals (TI, PI,
    /// SD) must agree before the SIM counts the transaction.
    SettlementReceipt verify_settlement(const SettlementBundleMsg& bundle) {
        if (session_.phase != Phase::paid) throw PhaseError("settlement before payment");
        SettlementReceipt receipt;
        receipt.sd = bundle.sd;
        receipt.mno_signature = bundle.result.mno_signature;
        receipt.pos_signature = bundle.pos_signature;

        auto reject = [&](std::string reason) {
            receipt.accepted = false;
            receipt.reject_reason = std::move(reason);
            abort("settlement rejected: " + receipt.reject_reason);
            return receipt;
        };

        if (!crypto_.verify_sig(cfg_.mno_verifying_key, bundle.result.enc_ti,
                                bundle.result.mno_signature))
            return reject("mno-signature");
        if (!crypto_.verify_sig(cfg_.pos_verifying_key,
                                settlement_signing_payload(bundle.result, bundle.sd),
                                bundle.pos_signature))
            return reject("pos-signature");

        auto plain = crypto_.decrypt(session_.keyset->k_c2, bundle.result.enc_ti);
        if (!plain) return reject("ti-undecodable");
        auto ti = decode_transaction_info(plain.value());
        if (!ti) return reject("ti-malformed");
        receipt.ti = ti.value();

        if (ti.value().amount != session_.pi->total_price) return reject("ti-amount-mismatch");
        if (bundle.sd.total != session_.pi->total_price) return reject("sd-total-mismatch");
        if (bundle.sd.total != bundle.sd.sum()) return reject("sd-sum-mismatch");

        cfg_.tc += 1;
        session_.phase = Phase::settled;
        receipt.accepted = true;
        return receipt;
    }

    /// A Stop from the operator (relayed by the terminal) kills the session
    /// in whatever phase it is in.
    void handle_stop() { abort("stopped by operator"); }

    /// Out-of-protocol identity refresh (GSM TMSI reallocation is outside
    /// this payment flow).
    void update_tmsi(const Tmsi& tmsi) { cfg_.tmsi = tmsi; }

    // --- inspection ---------------------------------------------------------

    Phase phase() const { return session_.phase; }
    std::uint64_t tc() const { return cfg_.tc; }
    const Tmsi& tmsi() const { return cfg_.tmsi; }
    const Imsi& imsi() const { return cfg_.imsi; }
    int pin_retries_left() const { return pin_retries_left_; }

    struct SessionView {
        std::optional<Nonce128> r, r_s;
        std::optional<KeySet> keyset;
        std::optional<PriceOfferBody> offer;
    };
    SessionView inspect_session() const {
        return {session_.r, session_.r_s, session_.keyset, session_.offer};
    }

private:
    struct Session {
        Phase phase = Phase::idle;
        std::optional<Nonce128> r;
        std::optional<Nonce128> r_s;
        std::optional<SessionKey> k_c;
        std::optional<KeySet> keyset;
        std::optional<PriceOfferBody> offer;
        std::optional<PaymentInfo> pi;
    };

    std::string abort(std::string reason) {
        session_.phase = Phase::aborted;
        return reason;
    }

    void note_key(const std::string& label, ByteSpan bytes) {
        if (keys_) keys_->note_key("mobile." + cfg_.imsi.hex(), label, bytes);
    }

    const CryptoProvider& crypto_;
    Rng rng_;
    Config cfg_;
    KeyObserver* keys_;
    Session session_;
    int pin_retries_left_;
};

}  // namespace nfcpay
