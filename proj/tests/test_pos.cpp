#include <catch2/catch_amalgamated.hpp>

#include "nfcpay/instrumentation.hpp"
#include "nfcpay/pos.hpp"

using namespace nfcpay;

namespace {

/// Terminal under test with a hand-rolled operator side: K_p, the
/// operator's signing keys, and a session key chain the customer would
/// share with the operator.
struct Rig {
    DeterministicSuite suite;
    Instrumentation instr;
    InstrumentedProvider crypto{suite, instr};
    Rng keygen{3, "testkeys"};
    SignatureKeyPair mno_keys;
    WideKey k_p = WideKey::from_hex(
        "9f8e7d6c5b4a39281716050403020100ffeeddccbbaa99887766554433221100");
    KeySet chain;
    PosTerminal pos;

    Rig()
        : mno_keys(crypto.gen_signature_keypair(keygen, "mno")),
          chain(crypto.derive_key_chain(SessionKey::from_hex("0102030405060708"))),
          pos(crypto, Rng(3, "pos"),
              PosTerminal::Config{ShopId::from_hex("0000beef"), {"262/01"}, 120'000}, &instr) {
        pos.provision(k_p, mno_keys.verifying_key);
    }

    static ShoppingDetails basket(std::uint64_t a = 250, std::uint64_t b = 200) {
        return ShoppingDetails{{{"espresso", a}, {"croissant", b}}, a + b};
    }

    IdResponse customer_id() {
        return IdResponse{Tmsi::from_hex("0a0b0c0d"), Lai{"262", "01", 4821}.pack()};
    }

    /// start → id exchange → key delivery; returns the offer the customer
    /// would see.
    PriceOfferBody to_offered() {
        pos.start_purchase(basket());
        REQUIRE(pos.handle_id_response(customer_id()).ok());
        auto offer = pos.handle_key_delivery(KeyDeliveryMsg{crypto.encrypt(k_p, chain.k_c2.span())});
        REQUIRE(offer.ok());
        auto body = decode_price_offer_body(
            crypto.decrypt(chain.k_c2, offer.value().enc_offer).value());
        REQUIRE(body.ok());
        return body.value();
    }

    /// A step-19 payment message for the given offer. The opaque half is
    /// arbitrary bytes: the terminal must not interpret it.
    PaymentMessageMsg payment_for(const PriceOfferBody& offer, std::uint64_t ts_u,
                                  Bytes opaque = {0xde, 0xad, 0xbe, 0xef}) {
        PaymentMessageMsg pm;
        pm.enc_pi = crypto.encrypt(chain.k_c2,
                                   encode_payment_info({offer.receipt_no, offer.total_price, ts_u}));
        pm.enc_trm = std::move(opaque);
        pm.trm_mac = MacTag32::from_hex(
            "00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff");
        return pm;
    }

    TransactionResultMsg result_for(std::uint64_t amount) {
        TransactionInfo ti{TxnSerial::from_hex("0000000000000001"), amount, 5000};
        TransactionResultMsg result;
        result.enc_ti = crypto.encrypt(chain.k_c2, encode_transaction_info(ti));
        result.mno_signature = crypto.sign(mno_keys, result.enc_ti);
        return result;
    }
};

}  // namespace

TEST_CASE("terminal must be provisioned exactly once", "[pos]") {
    DeterministicSuite suite;
    PosTerminal pos(suite, Rng(3, "pos"),
                    PosTerminal::Config{ShopId::from_hex("0000beef"), {"262/01"}, 120'000});
    CHECK_THROWS_AS(pos.start_purchase(Rig::basket()), PhaseError);  // not provisioned
    WideKey k_p = WideKey::from_hex(
        "9f8e7d6c5b4a39281716050403020100ffeeddccbbaa99887766554433221100");
    pos.provision(k_p, Bytes(32, 0x11));
    CHECK_THROWS_AS(pos.provision(k_p, Bytes(32, 0x11)), PhaseError);  // twice
    CHECK_NOTHROW(pos.start_purchase(Rig::basket()));
}

TEST_CASE("baskets must sum to a positive total", "[pos]") {
    Rig rig;
    CHECK_THROWS_AS(rig.pos.start_purchase(ShoppingDetails{{}, 0}), std::invalid_argument);
    CHECK_THROWS_AS(rig.pos.start_purchase(ShoppingDetails{{{"water", 100}}, 99}),
                    std::invalid_argument);
    CHECK_NOTHROW(rig.pos.start_purchase(ShoppingDetails{{{"water", 100}}, 100}));
}

TEST_CASE("receipt numbers are sequential per terminal", "[pos]") {
    Rig rig;
    rig.pos.start_purchase(Rig::basket());
    CHECK(rig.pos.receipt_no() == ReceiptNo::from_hex("5243505430303031"));  // RCPT0001
    rig.pos.start_purchase(Rig::basket());
    CHECK(rig.pos.receipt_no() == ReceiptNo::from_hex("5243505430303032"));  // RCPT0002
}

TEST_CASE("identity routing reads the claimed location area", "[pos]") {
    SECTION("routable network forwards identity plus shop id") {
        Rig rig;
        rig.pos.start_purchase(Rig::basket());
        auto fwd = rig.pos.handle_id_response(rig.customer_id());
        REQUIRE(fwd.ok());
        CHECK(fwd.value().tmsi == Tmsi::from_hex("0a0b0c0d"));
        CHECK(fwd.value().shop_id == ShopId::from_hex("0000beef"));
        CHECK(fwd.value().lai == Lai{"262", "01", 4821}.pack());
    }
    SECTION("foreign network is a dead end") {
        Rig rig;
        rig.pos.start_purchase(Rig::basket());
        IdResponse id{Tmsi::from_hex("0a0b0c0d"), Lai{"310", "410", 7}.pack()};
        auto fwd = rig.pos.handle_id_response(id);
        REQUIRE_FALSE(fwd.ok());
        CHECK(fwd.error() == "network-unroutable:310/410");
        CHECK(rig.pos.phase() == PosTerminal::Phase::aborted);
    }
    SECTION("garbage location bytes are a dead end") {
        Rig rig;
        rig.pos.start_purchase(Rig::basket());
        LaiBytes bad;
        bad.v = {0xab, 0xcd, 0xef, 0x00, 0x01};  // BCD nibbles above 9
        auto fwd = rig.pos.handle_id_response(IdResponse{Tmsi::from_hex("0a0b0c0d"), bad});
        REQUIRE_FALSE(fwd.ok());
        CHECK(fwd.error() == "lai-unparseable");
    }
}

TEST_CASE("key delivery unwraps k_c2 and produces the offer", "[pos]") {
    SECTION("the offer carries the basket total and the receipt number") {
        Rig rig;
        PriceOfferBody offer = rig.to_offered();
        CHECK(offer.total_price == 450);
        CHECK(offer.receipt_no == ReceiptNo::from_hex("5243505430303031"));
        CHECK(rig.pos.phase() == PosTerminal::Phase::offered);
    }
    SECTION("a wrapped key of the wrong width is rejected") {
        Rig rig;
        rig.pos.start_purchase(Rig::basket());
        REQUIRE(rig.pos.handle_id_response(rig.customer_id()).ok());
        Bytes short_key(31, 0x22);
        auto offer = rig.pos.handle_key_delivery(KeyDeliveryMsg{rig.crypto.encrypt(rig.k_p, short_key)});
        REQUIRE_FALSE(offer.ok());
        CHECK(offer.error() == "key-delivery-undecodable");
        CHECK(rig.pos.phase() == PosTerminal::Phase::aborted);
    }
    SECTION("broken ciphertext framing is rejected") {
        Rig rig;
        rig.pos.start_purchase(Rig::basket());
        REQUIRE(rig.pos.handle_id_response(rig.customer_id()).ok());
        Bytes ct = rig.crypto.encrypt(rig.k_p, rig.chain.k_c2.span());
        ct.pop_back();
        auto offer = rig.pos.handle_key_delivery(KeyDeliveryMsg{ct});
        REQUIRE_FALSE(offer.ok());
        CHECK(offer.error() == "key-delivery-undecodable");
    }
    SECTION("key delivery before the id exchange is a phase error") {
        Rig rig;
        rig.pos.start_purchase(Rig::basket());
        CHECK_THROWS_AS(rig.pos.handle_key_delivery(KeyDeliveryMsg{Bytes{}}), PhaseError);
    }
}

TEST_CASE("payment relay checks the readable half and copies the opaque half", "[pos]") {
    SECTION("matching payment info is forwarded byte-identically") {
        Rig rig;
        PriceOfferBody offer = rig.to_offered();
        Bytes opaque = {0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07};
        PaymentMessageMsg pm = rig.payment_for(offer, 1000, opaque);
        auto fwd = rig.pos.handle_payment_message(pm, 1000);
        REQUIRE(fwd.ok());
        CHECK(fwd.value().enc_trm == opaque);          // relayed untouched
        CHECK(fwd.value().trm_mac == pm.trm_mac);      // MAC relayed untouched
        CHECK(fwd.value().ts_u == 1000);               // timestamp lifted from PI
        CHECK(rig.pos.phase() == PosTerminal::Phase::forwarded);
    }
    SECTION("wrong total is a mismatch") {
        Rig rig;
        PriceOfferBody offer = rig.to_offered();
        offer.total_price -= 1;
        auto fwd = rig.pos.handle_payment_message(rig.payment_for(offer, 1000), 1000);
        REQUIRE_FALSE(fwd.ok());
        CHECK(fwd.error() == "pi-mismatch");
        CHECK(rig.pos.abort_reason() == "pi-mismatch");
    }
    SECTION("wrong receipt number is a mismatch") {
        Rig rig;
        PriceOfferBody offer = rig.to_offered();
        offer.receipt_no = ReceiptNo::from_hex("5243505430303939");  // RCPT0099
        auto fwd = rig.pos.handle_payment_message(rig.payment_for(offer, 1000), 1000);
        REQUIRE_FALSE(fwd.ok());
        CHECK(fwd.error() == "pi-mismatch");
    }
    SECTION("payment info that does not decrypt is rejected") {
        Rig rig;
        PriceOfferBody offer = rig.to_offered();
        PaymentMessageMsg pm = rig.payment_for(offer, 1000);
        pm.enc_pi.pop_back();
        auto fwd = rig.pos.handle_payment_message(pm, 1000);
        REQUIRE_FALSE(fwd.ok());
        CHECK(fwd.error() == "pi-undecodable");
    }
    SECTION("timestamp skew is tolerated up to the window, inclusive") {
        Rig rig;
        PriceOfferBody offer = rig.to_offered();
        auto fwd = rig.pos.handle_payment_message(rig.payment_for(offer, 0), 120'000);
        CHECK(fwd.ok());  // skew == window passes
    }
    SECTION("timestamp one past the window is stale") {
        Rig rig;
        PriceOfferBody offer = rig.to_offered();
        auto fwd = rig.pos.handle_payment_message(rig.payment_for(offer, 0), 120'001);
        REQUIRE_FALSE(fwd.ok());
        CHECK(fwd.error() == "ts-stale");
    }
    SECTION("payment before the offer is a phase error") {
        Rig rig;
        rig.pos.start_purchase(Rig::basket());
        CHECK_THROWS_AS(rig.pos.handle_payment_message(PaymentMessageMsg{}, 0), PhaseError);
    }
}

TEST_CASE("transaction result ends in settlement, dispute or rejection", "[pos]") {
    auto to_forwarded = [](Rig& rig) {
        PriceOfferBody offer = rig.to_offered();
        REQUIRE(rig.pos.handle_payment_message(rig.payment_for(offer, 1000), 1000).ok());
    };

    SECTION("matching signed amount settles with a countersignature") {
        Rig rig;
        to_forwarded(rig);
        auto out = rig.pos.handle_transaction_result(rig.result_for(450));
        REQUIRE(out.kind == PosTerminal::SettleOutcome::Kind::settled);
        REQUIRE(out.bundle.has_value());
        CHECK(out.bundle->sd == Rig::basket());
        CHECK(rig.crypto.verify_sig(rig.pos.verifying_key(),
                                    settlement_signing_payload(out.bundle->result, out.bundle->sd),
                                    out.bundle->pos_signature));
        CHECK(rig.pos.phase() == PosTerminal::Phase::settled);
    }
    SECTION("signed amount that contradicts the offer becomes a dispute") {
        Rig rig;
        to_forwarded(rig);
        auto result = rig.result_for(449);
        auto out = rig.pos.handle_transaction_result(result);
        REQUIRE(out.kind == PosTerminal::SettleOutcome::Kind::dispute);
        REQUIRE(out.dispute.has_value());
        CHECK(out.dispute->ti.amount == 449);
        CHECK(out.dispute->expected == 450);
        CHECK(out.dispute->reason == "settled-amount-mismatch");
        // The evidence is replayable: signed ciphertext plus signature.
        CHECK(out.dispute->enc_ti == result.enc_ti);
        CHECK(rig.crypto.verify_sig(rig.mno_keys.verifying_key, out.dispute->enc_ti,
                                    out.dispute->mno_signature));
        CHECK(rig.pos.phase() == PosTerminal::Phase::disputed);
        CHECK_FALSE(out.bundle.has_value());
    }
    SECTION("a result that is not operator-signed is rejected") {
        Rig rig;
        to_forwarded(rig);
        auto result = rig.result_for(450);
        result.mno_signature[0] ^= 0x01;
        auto out = rig.pos.handle_transaction_result(result);
        CHECK(out.kind == PosTerminal::SettleOutcome::Kind::rejected);
        CHECK(out.reason == "result-signature-invalid");
        CHECK(rig.pos.phase() == PosTerminal::Phase::aborted);
    }
    SECTION("signed transaction info that does not decode is rejected") {
        Rig rig;
        to_forwarded(rig);
        TransactionResultMsg result;
        result.enc_ti = rig.crypto.encrypt(rig.chain.k_c2, Bytes(23, 0x77));
        result.mno_signature = rig.crypto.sign(rig.mno_keys, result.enc_ti);
        auto out = rig.pos.handle_transaction_result(result);
        CHECK(out.kind == PosTerminal::SettleOutcome::Kind::rejected);
        CHECK(out.reason == "ti-undecodable");
    }
}

TEST_CASE("operator declines and stops end the purchase", "[pos]") {
    Rig rig;
    rig.pos.start_purchase(Rig::basket());
    REQUIRE(rig.pos.handle_id_response(rig.customer_id()).ok());
    rig.pos.handle_declined();
    CHECK(rig.pos.phase() == PosTerminal::Phase::aborted);
    CHECK(rig.pos.abort_reason() == "declined-by-operator");

    rig.pos.start_purchase(Rig::basket());  // terminal recovers for the next sale
    REQUIRE(rig.pos.handle_id_response(rig.customer_id()).ok());
    rig.pos.handle_stop();
    CHECK(rig.pos.abort_reason() == "stopped-by-operator");
}

TEST_CASE("terminal never holds k_c or k_c1", "[pos]") {
    Rig rig;
    PriceOfferBody offer = rig.to_offered();
    REQUIRE(rig.pos.handle_payment_message(rig.payment_for(offer, 1000), 1000).ok());
    (void)rig.pos.handle_transaction_result(rig.result_for(450));

    auto labels = rig.instr.labels_for("pos.");
    CHECK(labels == std::set<std::string>{"k_p", "mno.verifying", "sign.private", "k_c2"});
}
