#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>

#include "nfcpay/crypto.hpp"
#include "nfcpay/errors.hpp"
#include "nfcpay/mobile.hpp"
#include "nfcpay/observer.hpp"
#include "nfcpay/wire.hpp"

namespace nfcpay {

/// Non-repudiable mismatch evidence: the operator-signed transaction info
/// against the shop's own records for the same receipt.
struct Dispute {
    TransactionInfo ti;          // what the operator settled
    std::uint64_t expected = 0;  // what the shop offered
    ShoppingDetails sd;
    Bytes enc_ti;         // signed ciphertext, replayable to an arbiter
    Bytes mno_signature;  // operator signature over enc_ti
    std::string reason;
};

/// The shop-side terminal. It holds K_p and, per purchase, k_c2 — never
/// k_c or k_c1 — so the customer-operator leg stays opaque to it: the
/// encrypted transaction request is relayed byte-identical.
class PosTerminal {
public:
    enum class Phase {
        idle,
        awaiting_id,   // step 1 sent
        awaiting_key,  // step 4 sent, authentication in flight
        offered,       // step 16 sent
        forwarded,     // step 21 sent
        settled,
        disputed,
        aborted,
    };

    struct Config {
        ShopId shop_id;
        std::set<std::string> home_networks;  // "mcc/mnc" codes it can route to
        std::uint64_t ts_window_ms = 120'000;
    };

    PosTerminal(const CryptoProvider& crypto, Rng rng, Config cfg, KeyObserver* keys = nullptr)
        : crypto_(crypto), cfg_(std::move(cfg)), keys_(keys) {
        keypair_ = crypto_.gen_signature_keypair(rng, "pos." + cfg_.shop_id.hex());
        note_key("sign.private", keypair_.signing_key);
    }

    /// One-time setup after registration with the operator: the shared key
    /// K_p and the operator's signature-verification key.
    void provision(const WideKey& k_p, Bytes mno_verifying_key) {
        if (provisioned_) throw PhaseError("terminal already provisioned");
        k_p_ = k_p;
        mno_verifying_key_ = std::move(mno_verifying_key);
        provisioned_ = true;
        note_key("k_p", k_p_.span());
        note_key("mno.verifying", mno_verifying_key_);
    }

    const Bytes& verifying_key() const { return keypair_.verifying_key; }

    // --- protocol handlers ------------------------------------------------

    /// Step 1. Fixes the basket and allocates the receipt number for this
    /// purchase, then asks the handset for its identity.
    IdRequest start_purchase(ShoppingDetails sd) {
        if (!provisioned_) throw PhaseError("terminal not provisioned");
        if (sd.total == 0 || sd.total != sd.sum())
            throw std::invalid_argument("shopping details must sum to a positive total");
        purchase_ = Purchase{};
        purchase_.sd = std::move(sd);
        purchase_.receipt_no = next_receipt();
        purchase_.phase = Phase::awaiting_id;
        return IdRequest{};
    }

    /// Steps 3-4: read the claimed location area, pick the operator to
    /// route to, forward identity plus own shop id. A LAI this terminal
    /// cannot route is a dead end, not a protocol message.
    Result<AuthForward, std::string> handle_id_response(const IdResponse& id) {
        require_phase(Phase::awaiting_id, "handle_id_response");
        Lai lai;
        if (!Lai::unpack(id.lai.span(), lai)) return abort_purchase("lai-unparseable");
        if (!cfg_.home_networks.count(lai.network_code()))
            return abort_purchase("network-unroutable:" + lai.network_code());
        purchase_.phase = Phase::awaiting_key;
        return AuthForward{id.tmsi, id.lai, cfg_.shop_id};
    }

    /// The operator declined the identity (step 5.1) or tore the session
    /// down (step 10); either ends the purchase.
    void handle_declined() { abort_purchase("declined-by-operator"); }
    void handle_stop() { abort_purchase("stopped-by-operator"); }

    /// Steps 14-16: unwrap k_c2 from under K_p and answer with the offer
    /// (total and receipt number) encrypted for the customer.
    Result<PriceOfferMsg, std::string> handle_key_delivery(const KeyDeliveryMsg& kd) {
        require_phase(Phase::awaiting_key, "handle_key_delivery");
        auto plain = crypto_.decrypt(k_p_, kd.enc_k_c2);
        if (!plain || plain.value().size() != WideKey::width)
            return abort_purchase("key-delivery-undecodable");
        purchase_.k_c2 = WideKey::from_bytes(plain.value());
        note_key("k_c2", purchase_.k_c2->span());
        purchase_.phase = Phase::offered;
        PriceOfferBody body{purchase_.sd.total, purchase_.receipt_no};
        return PriceOfferMsg{crypto_.encrypt(*purchase_.k_c2, encode_price_offer_body(body))};
    }

    /// Steps 20-21: check the readable half (PI) against the offer, then
    /// relay the opaque half untouched. enc_trm and its MAC are copied
    /// byte-for-byte into the forward — this terminal cannot read them.
    Result<TransactionForwardMsg, std::string> handle_payment_message(const PaymentMessageMsg& pm,
                                                                      std::uint64_t now_ms) {
        require_phase(Phase::offered, "handle_payment_message");
        auto plain = crypto_.decrypt(*purchase_.k_c2, pm.enc_pi);
        if (!plain) return abort_purchase("pi-undecodable");
        auto pi = decode_payment_info(plain.value());
        if (!pi) return abort_purchase("pi-undecodable");
        if (pi.value().receipt_no != purchase_.receipt_no ||
            pi.value().total_price != purchase_.sd.total)
            return abort_purchase("pi-mismatch");
        std::uint64_t skew = pi.value().ts_u > now_ms ? pi.value().ts_u - now_ms
                                                      : now_ms - pi.value().ts_u;
        if (skew > cfg_.ts_window_ms) return abort_purchase("ts-stale");
        purchase_.phase = Phase::forwarded;
        return TransactionForwardMsg{pm.enc_trm, pm.trm_mac, pi.value().ts_u};
    }

    struct SettleOutcome {
        enum class Kind { settled, dispute, rejected } kind = Kind::rejected;
        std::optional<SettlementBundleMsg> bundle;  // kind == settled
        std::optional<Dispute> dispute;             // kind == dispute
        std::string reason;                         // kind == rejected
    };

    /// Steps 23-25: verify the operator's signature, read the settled
    /// amount, countersign and hand the customer the full bundle. A
    /// signed amount that contradicts the offer becomes a dispute record
    /// instead of a receipt.
    SettleOutcome handle_transaction_result(const TransactionResultMsg& result) {
        require_phase(Phase::forwarded, "handle_transaction_result");
        SettleOutcome out;
        if (!crypto_.verify_sig(mno_verifying_key_, result.enc_ti, result.mno_signature)) {
            out.reason = abort_purchase("result-signature-invalid");
            return out;
        }
        auto plain = crypto_.decrypt(*purchase_.k_c2, result.enc_ti);
        if (!plain) {
            out.reason = abort_purchase("ti-undecodable");
            return out;
        }
        auto ti = decode_transaction_info(plain.value());
        if (!ti) {
            out.reason = abort_purchase("ti-undecodable");
            return out;
        }
        if (ti.value().amount != purchase_.sd.total) {
            out.kind = SettleOutcome::Kind::dispute;
            out.dispute = Dispute{ti.value(),    purchase_.sd.total,    purchase_.sd,
                                  result.enc_ti, result.mno_signature, "settled-amount-mismatch"};
            purchase_.phase = Phase::disputed;
            return out;
        }
        SettlementBundleMsg bundle;
        bundle.result = result;
        bundle.sd = purchase_.sd;
        bundle.pos_signature =
            crypto_.sign(keypair_, settlement_signing_payload(result, purchase_.sd));
        purchase_.phase = Phase::settled;
        out.kind = SettleOutcome::Kind::settled;
        out.bundle = std::move(bundle);
        return out;
    }

    // --- inspection ---------------------------------------------------------

    Phase phase() const { return purchase_.phase; }
    const ShopId& shop_id() const { return cfg_.shop_id; }
    const ReceiptNo& receipt_no() const { return purchase_.receipt_no; }
    const ShoppingDetails& shopping_details() const { return purchase_.sd; }
    const std::string& abort_reason() const { return purchase_.abort_reason; }

private:
    struct Purchase {
        Phase phase = Phase::idle;
        ShoppingDetails sd;
        ReceiptNo receipt_no;
        std::optional<WideKey> k_c2;
        std::string abort_reason;
    };

    /// Receipt numbers are sequential per terminal: "RCPT0001", ...
    ReceiptNo next_receipt() {
        char buf[9];
        std::snprintf(buf, sizeof buf, "RCPT%04u", receipt_counter_++);
        return ReceiptNo::from_bytes(
            ByteSpan(reinterpret_cast<const std::uint8_t*>(buf), 8));
    }

    std::string abort_purchase(std::string reason) {
        purchase_.phase = Phase::aborted;
        purchase_.abort_reason = reason;
        return reason;
    }

    void require_phase(Phase expect, const char* op) const {
        if (purchase_.phase != expect) throw PhaseError(std::string(op) + ": wrong purchase phase");
    }

    void note_key(const std::string& label, ByteSpan bytes) {
        if (keys_) keys_->note_key("pos." + cfg_.shop_id.hex(), label, bytes);
    }

    const CryptoProvider& crypto_;
    Config cfg_;
    KeyObserver* keys_;
    SignatureKeyPair keypair_;
    WideKey k_p_;
    Bytes mno_verifying_key_;
    bool provisioned_ = false;
    Purchase purchase_;
    unsigned receipt_counter_ = 1;
};

}  // namespace nfcpay
