#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nfcpay/config.hpp"
#include "nfcpay/crypto.hpp"
#include "nfcpay/errors.hpp"
#include "nfcpay/instrumentation.hpp"
#include "nfcpay/mno.hpp"
#include "nfcpay/mobile.hpp"
#include "nfcpay/pos.hpp"
#include "nfcpay/transcript.hpp"
#include "nfcpay/wire.hpp"
#include "nfcpay/world.hpp"

namespace nfcpay {

// ---------------------------------------------------------------------------
// Scenario harness. Each scenario drives the three party machines over a
// World, lets an adversary interfere at the wire level where the attack
// calls for it, and reduces the result to a verdict plus a list of named
// assertions. Attack scenarios that need a clean control run (device-swap,
// link-break, identity rotation) build a second Cast from the same seed —
// determinism makes the control comparable hop by hop.
// ---------------------------------------------------------------------------

struct AssertionResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ScenarioOutcome {
    std::string scenario;
    std::string verdict;     // settled | aborted | dispute
    std::string abort_step;  // protocol step where the run halted
    std::string reason;
    std::vector<AssertionResult> assertions;
    std::vector<TranscriptRecord> transcript;

    // Final state of the primary world, mirrored into final_state.json.
    std::map<std::string, std::uint64_t> balances;  // imsi hex → balance
    std::map<std::string, std::uint64_t> credited;  // shop hex → credited
    std::map<std::string, std::uint64_t> tc;        // imsi hex → tc_expected
    std::vector<LedgerEntry> ledger;

    bool all_passed() const {
        for (const auto& a : assertions)
            if (!a.pass) return false;
        return true;
    }

    void expect(std::string name, bool pass, std::string detail = "") {
        assertions.push_back({std::move(name), pass, std::move(detail)});
    }
};

/// Where and why a flow stopped short of settlement.
struct Halt {
    std::string step;
    std::string reason;
};

/// One world's cast: instrumented crypto shared by everyone, the three
/// parties registered with each other, per-party deterministic rng streams
/// derived from (seed, label).
class Cast {
public:
    Cast(const Config& cfg, std::uint64_t seed, std::optional<MnoPolicy> policy = std::nullopt)
        : config_(cfg),
          seed_(seed),
          crypto_(suite_, instr_),
          world_(cfg.policy.hop_ms),
          mno_(crypto_, Rng(seed, "mno"), policy.value_or(cfg.mno_policy()), &instr_) {
        const ShopConfig& sc = cfg.shops.at(0);
        pos_.emplace(crypto_, Rng(seed, "pos." + sc.shop_id.hex()),
                     PosTerminal::Config{sc.shop_id, sc.networks, cfg.policy.ts_window_ms},
                     &instr_);
        for (const auto& s : cfg.subscribers) mno_.register_subscriber(s.imsi, s.k_i, s.balance);
        WideKey k_p = mno_.register_shop(sc.shop_id, sc.bank_ref, pos_->verifying_key());
        pos_->provision(k_p, mno_.verifying_key());
        mobiles_.reserve(cfg.subscribers.size());
        for (const auto& s : cfg.subscribers) {
            MobileDevice::Config mc;
            mc.imsi = s.imsi;
            mc.tmsi = mno_.subscriber(s.imsi).tmsi;
            mc.lai = s.lai;
            mc.k_i = s.k_i;
            mc.pin = s.pin;
            mc.pin_retry_limit = cfg.policy.pin_retries;
            mc.mno_verifying_key = mno_.verifying_key();
            mc.pos_verifying_key = pos_->verifying_key();
            mobiles_.emplace_back(crypto_, Rng(seed, "mobile." + s.imsi.hex()), mc, &instr_);
        }
    }

    void write_header(const std::string& scenario) {
        world_.header(scenario, seed_, to_hex(mno_.verifying_key()),
                      {{pos_->shop_id().hex(), to_hex(pos_->verifying_key())}});
    }

    /// Appends the outcome record summarizing this world's final state.
    void write_outcome(const std::string& verdict, const std::string& abort_step,
                       const std::string& reason) {
        TranscriptRecord r;
        r.verdict = verdict;
        r.abort_step = abort_step;
        r.reason = reason;
        r.ledger = mno_.ledger();
        for (const auto& s : config_.subscribers) {
            r.balances[s.imsi.hex()] = mno_.subscriber(s.imsi).balance;
            r.tc[s.imsi.hex()] = mno_.subscriber(s.imsi).tc_expected;
        }
        for (const auto& s : config_.shops)
            r.credited[s.shop_id.hex()] = mno_.shop(s.shop_id).credited;
        world_.outcome(std::move(r));
    }

    const Config& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }
    World& world() { return world_; }
    Instrumentation& instr() { return instr_; }
    const CryptoProvider& crypto() const { return crypto_; }
    MnoCore& mno() { return mno_; }
    PosTerminal& pos() { return *pos_; }
    MobileDevice& mobile(std::size_t i = 0) { return mobiles_.at(i); }

    std::uint64_t balance(std::size_t i = 0) {
        return mno_.subscriber(config_.subscribers.at(i).imsi).balance;
    }

private:
    const Config& config_;
    std::uint64_t seed_;
    DeterministicSuite suite_;
    Instrumentation instr_;
    InstrumentedProvider crypto_;
    World world_;
    MnoCore mno_;
    std::optional<PosTerminal> pos_;
    std::vector<MobileDevice> mobiles_;
};

/// Passive recorder: the dishonest party's tape of everything that crossed
/// the links, addressable by protocol message number.
struct WireLog {
    std::vector<std::pair<HopInfo, Bytes>> hops;

    World::Tap tap() {
        return [this](const HopInfo& hop, ByteSpan bytes) -> std::optional<TapDecision> {
            hops.push_back({hop, Bytes(bytes.begin(), bytes.end())});
            return std::nullopt;  // observe only
        };
    }

    const Bytes& first(int step) const {
        for (const auto& [hop, bytes] : hops)
            if (hop.step == step) return bytes;
        throw std::logic_error("no recorded hop for step " + std::to_string(step));
    }
};

namespace detail {
template <typename T>
std::optional<T> as(const std::optional<Bytes>& wire) {
    if (!wire) return std::nullopt;
    auto m = decode(*wire);
    if (!m.ok()) return std::nullopt;
    if (auto* body = std::get_if<T>(&m.value())) return *body;
    return std::nullopt;
}
}  // namespace detail

/// Drives one purchase across the world, hop by hop, reacting to whatever
/// actually arrives (the tap may have rewritten or swallowed any hop).
class FlowDriver {
public:
    explicit FlowDriver(Cast& cast, std::size_t subscriber = 0)
        : c_(cast), sub_index_(subscriber) {}

    std::optional<SessionId> session_id;

    /// Steps 1-12: identification, routing, mutual authentication.
    std::optional<Halt> run_auth(const ShoppingDetails& sd) {
        World& w = c_.world();
        MobileDevice& mob = c_.mobile(sub_index_);
        PosTerminal& pos = c_.pos();
        MnoCore& mno = c_.mno();

        auto m1 = w.deliver({1, LinkId::nfc, "pos", "mobile"}, encode(pos.start_purchase(sd)));
        if (!m1) return Halt{"1", "dropped"};

        auto m2 = w.deliver({2, LinkId::nfc, "mobile", "pos"}, encode(mob.handle_id_request()));
        auto idr = detail::as<IdResponse>(m2);
        if (!idr) return Halt{"2", "dropped"};
        auto fwd = pos.handle_id_response(*idr);
        if (!fwd) return Halt{"3", fwd.error()};

        auto m4 = w.deliver({4, LinkId::backhaul, "pos", "mno"}, encode(Message(fwd.value())));
        auto af = detail::as<AuthForward>(m4);
        if (!af) return Halt{"4", "dropped"};
        auto auth = mno.handle_auth_request(af->tmsi, af->lai, af->shop_id);
        if (auto* declined = std::get_if<Declined>(&auth.reply)) {
            w.deliver({5, LinkId::backhaul, "mno", "pos"}, encode(Message(*declined)));
            pos.handle_declined();
            return Halt{"5.1", "declined"};
        }
        session_id = *auth.session_id;
        const auto& challenge = std::get<ChallengeMsg>(auth.reply);

        auto m5 = w.deliver({5, LinkId::backhaul, "mno", "pos"}, encode(Message(challenge)));
        if (!m5) return Halt{"5", "dropped"};
        auto m6 = w.deliver({6, LinkId::nfc, "pos", "mobile"}, *m5);  // POS relays
        auto ch = detail::as<ChallengeMsg>(m6);
        if (!ch) return Halt{"6", "dropped"};
        auto response = mob.handle_challenge(ch->r);

        auto m8 = w.deliver({8, LinkId::nfc, "mobile", "pos"}, encode(Message(response)));
        if (!m8) return Halt{"8", "dropped"};
        auto m9 = w.deliver({9, LinkId::backhaul, "pos", "mno"}, *m8);  // POS relays
        auto ar = detail::as<AuthResponseMsg>(m9);
        if (!ar) return Halt{"9", "dropped"};
        auto confirm = mno.handle_auth_response(*session_id, ar->enc_r_rs);
        if (auto* stop = std::get_if<StopMsg>(&confirm)) {
            auto m10 = w.deliver({10, LinkId::backhaul, "mno", "pos"}, encode(Message(*stop)));
            pos.handle_stop();
            if (m10) {
                w.deliver({11, LinkId::nfc, "pos", "mobile"}, *m10);
                mob.handle_stop();
            }
            return Halt{"9-10", "stop"};
        }

        auto m10 = w.deliver({10, LinkId::backhaul, "mno", "pos"},
                             encode(Message(std::get<AuthConfirmMsg>(confirm))));
        if (!m10) return Halt{"10", "dropped"};
        auto m11 = w.deliver({11, LinkId::nfc, "pos", "mobile"}, *m10);  // POS relays
        auto cf = detail::as<AuthConfirmMsg>(m11);
        if (!cf) return Halt{"11", "dropped"};
        auto success = mob.handle_auth_confirm(cf->enc_rs_r);
        if (!success.ok()) {
            auto stop = w.deliver({12, LinkId::nfc, "mobile", "pos"}, encode(Message(StopMsg{})));
            pos.handle_stop();
            (void)stop;
            return Halt{"11-12", success.error()};
        }
        auto m12 = w.deliver({12, LinkId::nfc, "mobile", "pos"}, encode(Message(success.value())));
        if (!m12) return Halt{"12", "dropped"};
        auto m12b = w.deliver({12, LinkId::backhaul, "pos", "mno"}, *m12);  // POS relays
        if (detail::as<AuthSuccessMsg>(m12b)) mno.handle_auth_success(*session_id);
        return std::nullopt;
    }

    /// Steps 13-17: key delivery, price offer, local consent and PIN. The
    /// attempts are tried in order against the single delivered offer;
    /// PIN checking needs no link.
    std::optional<Halt> run_key_offer(const std::vector<UserAction>& attempts) {
        World& w = c_.world();
        MobileDevice& mob = c_.mobile(sub_index_);
        PosTerminal& pos = c_.pos();
        MnoCore& mno = c_.mno();

        auto m14 = w.deliver({14, LinkId::backhaul, "mno", "pos"},
                             encode(Message(mno.deliver_pos_key(*session_id, pos.shop_id()))));
        auto kd = detail::as<KeyDeliveryMsg>(m14);
        if (!kd) return Halt{"14", "dropped"};
        auto offer = pos.handle_key_delivery(*kd);
        if (!offer) return Halt{"14", offer.error()};

        auto m15 = w.deliver({15, LinkId::nfc, "pos", "mobile"}, encode(Message(offer.value())));
        auto po = detail::as<PriceOfferMsg>(m15);
        if (!po) return Halt{"15", "dropped"};

        for (const auto& action : attempts) {
            switch (mob.handle_price_offer(po->enc_offer, action)) {
                case MobileDevice::OfferOutcome::proceed: return std::nullopt;
                case MobileDevice::OfferOutcome::pin_fail: continue;  // retry allowed
                case MobileDevice::OfferOutcome::user_decline:
                    notify_stop_after_pin();
                    return Halt{"17", "user-declined"};
                case MobileDevice::OfferOutcome::aborted:
                    notify_stop_after_pin();
                    return Halt{"17", "pin-retries-exhausted"};
            }
        }
        notify_stop_after_pin();
        return Halt{"17", "pin-attempts-not-completed"};
    }

    struct PaymentResult {
        enum class Kind { settled, halted, dispute } kind = Kind::halted;
        Halt halt;                                 // kind == halted
        std::optional<Dispute> dispute;            // kind == dispute
        std::optional<SettlementReceipt> receipt;  // kind == settled
    };

    /// Steps 18-26: payment message, opaque relay, execution, signed
    /// result, countersigned bundle, customer verification.
    PaymentResult run_payment() {
        World& w = c_.world();
        MobileDevice& mob = c_.mobile(sub_index_);
        PosTerminal& pos = c_.pos();
        MnoCore& mno = c_.mno();
        PaymentResult out;

        auto m19 = w.deliver({19, LinkId::nfc, "mobile", "pos"},
                             encode(Message(mob.build_payment_message(w.now()))));
        auto pm = detail::as<PaymentMessageMsg>(m19);
        if (!pm) {
            out.halt = {"19", "dropped"};
            return out;
        }
        auto tf = pos.handle_payment_message(*pm, w.now());
        if (!tf) {
            out.halt = {"20", tf.error()};
            return out;
        }

        auto m21 = w.deliver({21, LinkId::backhaul, "pos", "mno"}, encode(Message(tf.value())));
        auto fwd = detail::as<TransactionForwardMsg>(m21);
        if (!fwd) {
            out.halt = {"21", "dropped"};
            return out;
        }
        auto result =
            mno.handle_transaction(*session_id, fwd->enc_trm, fwd->trm_mac, fwd->ts_u, w.now());
        if (!result.ok()) {
            w.deliver({23, LinkId::backhaul, "mno", "pos"}, encode(Message(StopMsg{})));
            pos.handle_stop();
            out.halt = {"22", to_string(result.error())};
            return out;
        }

        auto m23 =
            w.deliver({23, LinkId::backhaul, "mno", "pos"}, encode(Message(result.value())));
        auto tr = detail::as<TransactionResultMsg>(m23);
        if (!tr) {
            out.halt = {"23", "dropped"};
            return out;
        }
        auto settle = pos.handle_transaction_result(*tr);
        if (settle.kind == PosTerminal::SettleOutcome::Kind::rejected) {
            out.halt = {"24", settle.reason};
            return out;
        }
        if (settle.kind == PosTerminal::SettleOutcome::Kind::dispute) {
            out.kind = PaymentResult::Kind::dispute;
            out.dispute = settle.dispute;
            return out;
        }

        auto m25 =
            w.deliver({25, LinkId::nfc, "pos", "mobile"}, encode(Message(*settle.bundle)));
        auto sb = detail::as<SettlementBundleMsg>(m25);
        if (!sb) {
            out.halt = {"25", "dropped"};
            return out;
        }
        auto receipt = mob.verify_settlement(*sb);
        if (!receipt.accepted) {
            out.halt = {"26", receipt.reject_reason};
            return out;
        }
        // The operator may have reallocated the temporary identity on
        // settlement; the SIM learns it out of protocol.
        mob.update_tmsi(mno.subscriber(mob.imsi()).tmsi);
        out.kind = PaymentResult::Kind::settled;
        out.receipt = std::move(receipt);
        return out;
    }

    /// The whole 26-step flow with the given PIN entries.
    PaymentResult run_purchase(const ShoppingDetails& sd, const std::vector<UserAction>& attempts) {
        PaymentResult out;
        if (auto halt = run_auth(sd)) {
            out.halt = *halt;
            return out;
        }
        if (auto halt = run_key_offer(attempts)) {
            out.halt = *halt;
            return out;
        }
        return run_payment();
    }

private:
    /// A post-PIN abort happens on the handset; the terminal learns of it
    /// by a Stop over NFC.
    void notify_stop_after_pin() {
        c_.world().deliver({17, LinkId::nfc, "mobile", "pos"}, encode(Message(StopMsg{})));
        c_.pos().handle_stop();
    }

    Cast& c_;
    std::size_t sub_index_;
};

// --- forged-message builders -------------------------------------------------
// The harness plays the white-box attackers of the analysis: a dishonest
// customer owns its session keys outright; a cloned SIM shares k_i and can
// overhear R on the contactless link. Both are expressed as direct key
// derivations — no party code is bent.

/// Payment message whose sealed half carries a different payment info than
/// the readable half (the dishonest customer of the analysis, PI' < PI).
inline PaymentMessageMsg forge_payment_message(const CryptoProvider& crypto, const KeySet& keys,
                                               const PaymentInfo& pi_readable,
                                               const PaymentInfo& pi_sealed, const Nonce128& r_s,
                                               std::uint64_t tc) {
    PaymentMessageMsg msg;
    msg.enc_pi = crypto.encrypt(keys.k_c2, encode_payment_info(pi_readable));
    msg.enc_trm =
        crypto.encrypt(keys.k_c, encode_transaction_request(TransactionRequest{pi_sealed, r_s, tc}));
    msg.trm_mac = crypto.mac(keys.k_c1, msg.enc_trm);
    return msg;
}

/// Key material a cloned SIM reconstructs from k_i plus the challenge R it
/// overheard in the clear on the contactless link.
inline KeySet clone_key_chain(const CryptoProvider& crypto, const SubscriberKey& k_i,
                              const Nonce128& r) {
    return crypto.derive_key_chain(crypto.a8_session_key(k_i, r));
}

// --- common assertions -------------------------------------------------------

/// Invariants every scenario must observe, appended per world: no secret
/// bytes on any wire, POS key set within its need-to-know envelope, MAC
/// only ever over ciphertext, MAC verifies at least as often as decrypts
/// on the operator side.
inline void append_common_assertions(Cast& cast, ScenarioOutcome& out,
                                     const std::string& world_label) {
    auto tag = [&](const std::string& name) { return name + "[" + world_label + "]"; };

    std::string leak;
    for (const auto& rec : cast.world().transcript()) {
        if (rec.kind != "wire") continue;
        for (const auto& [label, secret] : cast.instr().wire_forbidden_secrets())
            if (Instrumentation::contains(rec.bytes, secret))
                leak = label + " found in wire record seq " + std::to_string(rec.seq);
    }
    out.expect(tag("no-secret-on-wire"), leak.empty(), leak);

    auto pos_labels = cast.instr().labels_for("pos.");
    std::set<std::string> allowed{"k_p", "k_c2", "mno.verifying", "sign.private"};
    bool confined = true;
    std::string extra;
    for (const auto& l : pos_labels)
        if (!allowed.count(l)) {
            confined = false;
            extra = "unexpected POS key: " + l;
        }
    for (const auto& must : {"k_p", "mno.verifying", "sign.private"})
        if (!pos_labels.count(must)) {
            confined = false;
            extra = std::string("missing POS key: ") + must;
        }
    out.expect(tag("pos-key-confinement"), confined, extra);

    out.expect(tag("mac-only-over-ciphertext"), cast.instr().etm_violations().empty(),
               cast.instr().etm_violations().empty() ? "" : cast.instr().etm_violations().front());
    out.expect(tag("mac-verify-before-decrypt-volume"),
               cast.instr().total_mac_verifies() <= cast.instr().total_decrypts() + 64,
               "sanity bound only");
}

namespace detail {

inline void finish(Cast& primary, ScenarioOutcome& out) {
    primary.write_outcome(out.verdict, out.abort_step, out.reason);
    const auto& recs = primary.world().transcript();
    out.transcript.insert(out.transcript.end(), recs.begin(), recs.end());
    for (const auto& r : recs) {
        if (r.kind != "outcome") continue;
        out.balances = r.balances;
        out.credited = r.credited;
        out.tc = r.tc;
        out.ledger = r.ledger;
        break;  // primary world's outcome is the first one
    }
}

inline UserAction good_pin(const Config& cfg, std::size_t i = 0) {
    return UserAction{true, cfg.subscribers.at(i).pin};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// Baseline: every configured purchase settles in sequence.
inline ScenarioOutcome scenario_happy_path(const Config& cfg, std::uint64_t seed) {
    ScenarioOutcome out;
    out.scenario = "happy-path";
    Cast cast(cfg, seed);
    cast.write_header(out.scenario);
    std::uint64_t initial = cast.balance();
    std::uint64_t expected_total = 0;
    bool all_settled = true;
    bool all_verified = true;

    for (const auto& sd : cfg.purchases) {
        FlowDriver flow(cast);
        auto result = flow.run_purchase(sd, {detail::good_pin(cfg)});
        if (result.kind != FlowDriver::PaymentResult::Kind::settled) {
            all_settled = false;
            out.verdict = "aborted";
            out.abort_step = result.halt.step;
            out.reason = result.halt.reason;
            break;
        }
        expected_total += sd.total;
        all_verified = all_verified && result.receipt->accepted;
    }
    if (all_settled) out.verdict = "settled";

    const auto& imsi = cfg.subscribers.at(0).imsi;
    out.expect("verdict-settled", all_settled, out.reason);
    out.expect("debit-equals-total", initial - cast.balance() == expected_total);
    out.expect("credit-equals-total",
               cast.mno().shop(cast.pos().shop_id()).credited == expected_total);
    out.expect("both-signatures-verified", all_verified);
    out.expect("sim-tc-advance", cast.mobile().tc() == cfg.purchases.size());
    out.expect("mno-tc-advance",
               cast.mno().subscriber(imsi).tc_expected == cfg.purchases.size());
    out.expect("one-ledger-entry-per-purchase",
               cast.mno().ledger().size() == cfg.purchases.size());
    append_common_assertions(cast, out, "main");
    detail::finish(cast, out);
    return out;
}

/// The dishonest terminal replays the recorded identity forward (message
/// 4). Pre-rotation it gets a fresh challenge it cannot answer (Stop at
/// steps 9-10); once the identity has rotated, the stale TMSI is simply
/// declined (step 5.1).
inline ScenarioOutcome scenario_pos_impersonates_customer(const Config& cfg, std::uint64_t seed) {
    ScenarioOutcome out;
    out.scenario = "pos-impersonates-customer";

    // Sub-run A: identity rotation switched off, so the replayed TMSI is
    // still valid and the attack reaches the challenge.
    MnoPolicy frozen = cfg.mno_policy();
    frozen.rotate_tmsi_on_settlement = false;
    Cast a(cfg, seed, frozen);
    a.write_header(out.scenario);
    WireLog logbook;
    a.world().set_tap(logbook.tap());

    FlowDriver honest(a);
    auto first = honest.run_purchase(cfg.purchases.at(0), {detail::good_pin(cfg)});
    out.expect("target-purchase-settles",
               first.kind == FlowDriver::PaymentResult::Kind::settled);
    std::uint64_t balance_after_honest = a.balance();
    a.world().set_tap(nullptr);

    a.world().note("attack: terminal replays recorded messages 4 and 8");
    auto m4 = a.world().deliver({4, LinkId::backhaul, "adversary", "mno"}, logbook.first(4),
                                "replay of message 4");
    auto af = detail::as<AuthForward>(m4);
    auto auth = a.mno().handle_auth_request(af->tmsi, af->lai, af->shop_id);
    bool challenged = std::holds_alternative<ChallengeMsg>(auth.reply);
    out.expect("pre-rotation-replay-draws-fresh-challenge", challenged);
    bool stopped = false;
    if (challenged) {
        a.world().deliver({5, LinkId::backhaul, "mno", "adversary"},
                          encode(Message(std::get<ChallengeMsg>(auth.reply))));
        auto m9 = a.world().deliver({9, LinkId::backhaul, "adversary", "mno"}, logbook.first(8),
                                    "replay of message 8");
        auto ar = detail::as<AuthResponseMsg>(m9);
        auto confirm = a.mno().handle_auth_response(*auth.session_id, ar->enc_r_rs);
        stopped = std::holds_alternative<StopMsg>(confirm);
        a.world().deliver({10, LinkId::backhaul, "mno", "adversary"}, encode(Message(StopMsg{})));
    }
    out.expect("pre-rotation-replay-stopped-at-9-10", stopped);
    out.expect("pre-rotation-no-balance-change", a.balance() == balance_after_honest);
    append_common_assertions(a, out, "pre-rotation");
    out.verdict = "aborted";
    out.abort_step = "9-10";
    out.reason = "stop";

    // Sub-run B: rotation on (the shipped default); the recorded TMSI has
    // been replaced by the time of the replay.
    Cast b(cfg, seed);
    WireLog logbook_b;
    b.world().set_tap(logbook_b.tap());
    FlowDriver honest_b(b);
    auto first_b = honest_b.run_purchase(cfg.purchases.at(0), {detail::good_pin(cfg)});
    out.expect("rotation-run-settles", first_b.kind == FlowDriver::PaymentResult::Kind::settled);
    std::uint64_t balance_after_b = b.balance();
    b.world().set_tap(nullptr);

    b.world().note("attack: terminal replays recorded message 4 after identity rotation");
    auto m4b = b.world().deliver({4, LinkId::backhaul, "adversary", "mno"}, logbook_b.first(4),
                                 "replay of message 4");
    auto afb = detail::as<AuthForward>(m4b);
    auto auth_b = b.mno().handle_auth_request(afb->tmsi, afb->lai, afb->shop_id);
    bool declined = std::holds_alternative<Declined>(auth_b.reply);
    if (declined)
        b.world().deliver({5, LinkId::backhaul, "mno", "adversary"}, encode(Message(Declined{})));
    out.expect("post-rotation-replay-declined-at-5.1", declined);
    out.expect("post-rotation-no-balance-change", b.balance() == balance_after_b);
    append_common_assertions(b, out, "post-rotation");
    b.write_outcome("aborted", "5.1", "declined");

    detail::finish(a, out);
    out.transcript.reserve(out.transcript.size() + b.world().transcript().size());
    // Renumber sub-run B's records so seq stays strictly increasing.
    std::uint64_t next_seq = out.transcript.back().seq + 1;
    for (TranscriptRecord r : b.world().transcript()) {
        r.seq = next_seq++;
        out.transcript.push_back(std::move(r));
    }
    return out;
}

/// The dishonest terminal never contacts the operator: it replays a
/// recorded challenge (message 6) and then the recorded confirm. The fresh
/// R_s makes the old confirm unacceptable at steps 11-12.
inline ScenarioOutcome scenario_pos_impersonates_mno(const Config& cfg, std::uint64_t seed) {
    ScenarioOutcome out;
    out.scenario = "pos-impersonates-mno";
    Cast cast(cfg, seed);
    cast.write_header(out.scenario);
    WireLog logbook;
    cast.world().set_tap(logbook.tap());

    FlowDriver honest(cast);
    auto first = honest.run_purchase(cfg.purchases.at(0), {detail::good_pin(cfg)});
    out.expect("target-purchase-settles", first.kind == FlowDriver::PaymentResult::Kind::settled);
    std::uint64_t settled_balance = cast.balance();
    std::size_t settled_ledger = cast.mno().ledger().size();
    cast.world().set_tap(nullptr);

    World& w = cast.world();
    MobileDevice& mob = cast.mobile();

    // Attack, variant 1: replay the recorded confirm verbatim.
    w.note("attack: terminal replays recorded challenge and confirm, operator never contacted");
    w.deliver({1, LinkId::nfc, "adversary", "mobile"}, encode(Message(IdRequest{})));
    w.deliver({2, LinkId::nfc, "mobile", "adversary"}, encode(Message(mob.handle_id_request())));
    auto m6 = w.deliver({6, LinkId::nfc, "adversary", "mobile"}, logbook.first(6),
                        "replay of message 6");
    auto ch = detail::as<ChallengeMsg>(m6);
    auto response = mob.handle_challenge(ch->r);
    w.deliver({8, LinkId::nfc, "mobile", "adversary"}, encode(Message(response)));
    auto m11 = w.deliver({11, LinkId::nfc, "adversary", "mobile"}, logbook.first(11),
                         "replay of message 10");
    auto cf = detail::as<AuthConfirmMsg>(m11);
    auto verdict1 = mob.handle_auth_confirm(cf->enc_rs_r);
    w.deliver({12, LinkId::nfc, "mobile", "adversary"}, encode(Message(StopMsg{})));
    out.expect("replayed-confirm-rejected-at-11-12", !verdict1.ok(),
               verdict1.ok() ? "" : verdict1.error());
    out.expect("mobile-aborted", mob.phase() == MobileDevice::Phase::aborted);

    // Attack, variant 2: tamper one ciphertext byte of the confirm instead.
    w.note("attack variant: tampered confirm");
    w.deliver({1, LinkId::nfc, "adversary", "mobile"}, encode(Message(IdRequest{})));
    w.deliver({2, LinkId::nfc, "mobile", "adversary"}, encode(Message(mob.handle_id_request())));
    auto m6b = w.deliver({6, LinkId::nfc, "adversary", "mobile"}, logbook.first(6),
                         "replay of message 6");
    auto chb = detail::as<ChallengeMsg>(m6b);
    auto response2 = mob.handle_challenge(chb->r);
    w.deliver({8, LinkId::nfc, "mobile", "adversary"}, encode(Message(response2)));
    Bytes tampered = logbook.first(11);
    tampered.back() ^= 0x01;  // inside the ciphertext body
    auto m11b = w.deliver({11, LinkId::nfc, "adversary", "mobile"}, tampered,
                          "tamper: last ciphertext byte flipped");
    auto cfb = detail::as<AuthConfirmMsg>(m11b);
    auto verdict2 = mob.handle_auth_confirm(cfb->enc_rs_r);
    w.deliver({12, LinkId::nfc, "mobile", "adversary"}, encode(Message(StopMsg{})));
    out.expect("tampered-confirm-rejected-at-11-12", !verdict2.ok());

    out.expect("no-balance-change", cast.balance() == settled_balance);
    out.expect("no-new-ledger-entry", cast.mno().ledger().size() == settled_ledger);
    append_common_assertions(cast, out, "main");
    out.verdict = "aborted";
    out.abort_step = "11-12";
    out.reason = verdict1.ok() ? "unexpected-acceptance" : verdict1.error();
    detail::finish(cast, out);
    return out;
}

/// The customer's own device seals PI' = PI − 1 inside the TRM while
/// showing the terminal a legitimate PI. The operator executes the lesser
/// amount; the signed result exposes the fraud at the terminal (step 24).
inline ScenarioOutcome scenario_dishonest_customer_trm(const Config& cfg, std::uint64_t seed) {
    ScenarioOutcome out;
    out.scenario = "dishonest-customer-trm";
    Cast cast(cfg, seed);
    cast.write_header(out.scenario);
    const ShoppingDetails& sd = cfg.purchases.at(0);
    std::uint64_t initial = cast.balance();

    FlowDriver flow(cast);
    if (auto halt = flow.run_auth(sd)) {
        out.verdict = "aborted";
        out.abort_step = halt->step;
        out.reason = halt->reason;
        out.expect("auth-completes", false, halt->reason);
        detail::finish(cast, out);
        return out;
    }
    if (auto halt = flow.run_key_offer({detail::good_pin(cfg)})) {
        out.verdict = "aborted";
        out.abort_step = halt->step;
        out.reason = halt->reason;
        out.expect("key-offer-completes", false, halt->reason);
        detail::finish(cast, out);
        return out;
    }

    // The dishonest customer builds message 19 directly from its own
    // session keys: readable half legitimate, sealed half one unit short.
    World& w = cast.world();
    MobileDevice& mob = cast.mobile();
    auto session = mob.inspect_session();
    PaymentInfo pi{cast.pos().receipt_no(), sd.total, w.now()};
    PaymentInfo pi_prime = pi;
    pi_prime.total_price = sd.total - 1;
    auto forged = forge_payment_message(cast.crypto(), *session.keyset, pi, pi_prime,
                                        *session.r_s, mob.tc() + 1);
    auto m19 = w.deliver({19, LinkId::nfc, "mobile", "pos"}, encode(Message(forged)),
                         "substitute: sealed TRM carries PI' = PI - 1");
    auto pm = detail::as<PaymentMessageMsg>(m19);
    auto tf = cast.pos().handle_payment_message(*pm, w.now());
    out.expect("readable-half-passes-terminal-checks", tf.ok(), tf.ok() ? "" : tf.error());

    auto m21 = w.deliver({21, LinkId::backhaul, "pos", "mno"}, encode(Message(tf.value())));
    auto fwd = detail::as<TransactionForwardMsg>(m21);
    auto result = cast.mno().handle_transaction(*flow.session_id, fwd->enc_trm, fwd->trm_mac,
                                                fwd->ts_u, w.now());
    out.expect("operator-executes-sealed-amount",
               result.ok() && cast.mno().ledger().size() == 1 &&
                   cast.mno().ledger().back().amount == sd.total - 1);

    auto m23 = w.deliver({23, LinkId::backhaul, "mno", "pos"}, encode(Message(result.value())));
    auto tr = detail::as<TransactionResultMsg>(m23);
    auto settle = cast.pos().handle_transaction_result(*tr);
    bool disputed = settle.kind == PosTerminal::SettleOutcome::Kind::dispute;
    out.expect("terminal-raises-dispute-at-24", disputed);
    if (disputed) {
        const Dispute& d = *settle.dispute;
        out.expect("dispute-carries-signed-evidence",
                   cast.crypto().verify_sig(cast.mno().verifying_key(), d.enc_ti,
                                            d.mno_signature));
        out.expect("evidence-names-lesser-amount",
                   d.ti.amount == sd.total - 1 && d.expected == sd.total);
    }
    out.expect("ledger-shows-lesser-debit", initial - cast.balance() == sd.total - 1);
    bool no_bundle = true;
    for (const auto& r : cast.world().transcript())
        if (r.kind == "wire" && r.step == 25) no_bundle = false;
    out.expect("transcript-has-no-step-25", no_bundle);
    append_common_assertions(cast, out, "main");
    out.verdict = "dispute";
    out.abort_step = "24";
    out.reason = disputed ? settle.dispute->reason : "dispute-not-raised";
    detail::finish(cast, out);
    return out;
}

/// After PIN entry the device on the pad is swapped for a clone (same SIM
/// secret, overheard challenge, its own fresh R_s'). The operator's R_s
/// comparison rejects it at step 22. The control world runs the identical
/// flow without the swap and settles.
inline ScenarioOutcome scenario_device_swap(const Config& cfg, std::uint64_t seed) {
    ScenarioOutcome out;
    out.scenario = "device-swap";
    Cast attack(cfg, seed);
    attack.write_header(out.scenario);
    WireLog logbook;
    attack.world().set_tap(logbook.tap());
    const ShoppingDetails& sd = cfg.purchases.at(0);
    std::uint64_t initial = attack.balance();

    FlowDriver flow(attack);
    auto halted = flow.run_auth(sd);
    if (!halted) halted = flow.run_key_offer({detail::good_pin(cfg)});
    out.expect("honest-flow-reaches-step-17", !halted, halted ? halted->reason : "");
    attack.world().set_tap(nullptr);

    // The clone: same k_i (cloned SIM), challenge R overheard in clear on
    // the contactless link, price offer decrypted with the derived k_c2,
    // but a fresh R_s' — it never saw the real one, which only ever
    // traveled encrypted.
    World& w = attack.world();
    w.note("attack: device swapped for a clone after PIN entry");
    auto overheard = decode(logbook.first(6));
    const Nonce128& r = std::get<ChallengeMsg>(overheard.value()).r;
    KeySet clone_keys =
        clone_key_chain(attack.crypto(), cfg.subscribers.at(0).k_i, r);
    auto offer_bytes = decode(logbook.first(15));
    auto offer_plain = attack.crypto().decrypt(
        clone_keys.k_c2, std::get<PriceOfferMsg>(offer_bytes.value()).enc_offer);
    auto offer = decode_price_offer_body(offer_plain.value());
    out.expect("clone-reads-offer", offer.ok());
    Rng clone_rng(seed, "adversary.clone");
    Nonce128 r_s_prime = clone_rng.draw_nonce128();
    PaymentInfo pi{offer.value().receipt_no, offer.value().total_price, w.now()};
    auto forged = forge_payment_message(attack.crypto(), clone_keys, pi, pi, r_s_prime,
                                        attack.mobile().tc() + 1);
    auto m19 = w.deliver({19, LinkId::nfc, "mobile", "pos"}, encode(Message(forged)),
                         "substitute: cloned device with fresh R_s'");
    auto pm = detail::as<PaymentMessageMsg>(m19);
    auto tf = attack.pos().handle_payment_message(*pm, w.now());
    out.expect("terminal-cannot-tell-clone", tf.ok(), tf.ok() ? "" : tf.error());
    auto m21 = w.deliver({21, LinkId::backhaul, "pos", "mno"}, encode(Message(tf.value())));
    auto fwd = detail::as<TransactionForwardMsg>(m21);
    auto result = attack.mno().handle_transaction(*flow.session_id, fwd->enc_trm, fwd->trm_mac,
                                                  fwd->ts_u, w.now());
    bool rejected = !result.ok() && result.error() == TxnError::rs_mismatch;
    w.deliver({23, LinkId::backhaul, "mno", "pos"}, encode(Message(StopMsg{})));
    attack.pos().handle_stop();
    out.expect("swap-rejected-rs-mismatch-at-22", rejected,
               result.ok() ? "accepted" : to_string(result.error()));
    out.expect("no-balance-change", attack.balance() == initial);
    out.expect("no-ledger-entry", attack.mno().ledger().empty());
    append_common_assertions(attack, out, "attack");

    // Control: same seed, same steps 1-17, the original device resumes.
    Cast control(cfg, seed);
    FlowDriver cflow(control);
    auto chalt = cflow.run_auth(sd);
    if (!chalt) chalt = cflow.run_key_offer({detail::good_pin(cfg)});
    FlowDriver::PaymentResult cresult;
    if (!chalt) cresult = cflow.run_payment();
    out.expect("control-resumption-settles",
               cresult.kind == FlowDriver::PaymentResult::Kind::settled);

    // Determinism makes the two worlds comparable: everything before the
    // swap must be byte-identical.
    const auto& at = attack.world().transcript();
    const auto& ct = control.world().transcript();
    bool prefix_equal = true;
    std::size_t wire_count = 0;
    for (std::size_t i = 0, j = 0; i < at.size() && j < ct.size();) {
        if (at[i].kind != "wire") { ++i; continue; }
        if (ct[j].kind != "wire") { ++j; continue; }
        if (at[i].step == 19) break;  // the swap point
        if (at[i].bytes != ct[j].bytes) prefix_equal = false;
        ++i, ++j, ++wire_count;
    }
    out.expect("attack-and-control-identical-before-swap", prefix_equal && wire_count > 0);
    control.write_outcome("settled", "", "");

    out.verdict = "aborted";
    out.abort_step = "22";
    out.reason = "rs-mismatch";
    detail::finish(attack, out);
    std::uint64_t next_seq = out.transcript.back().seq + 1;
    for (TranscriptRecord r : control.world().transcript()) {
        r.seq = next_seq++;
        out.transcript.push_back(std::move(r));
    }
    return out;
}

/// A settled transaction's message 21 is replayed to the operator: the
/// transaction counter rejects it. The stale-timestamp variant forges a
/// counter-correct request after the window to show the TS_U defense.
inline ScenarioOutcome scenario_replay_transaction(const Config& cfg, std::uint64_t seed) {
    ScenarioOutcome out;
    out.scenario = "replay-transaction";
    Cast cast(cfg, seed);
    cast.write_header(out.scenario);
    WireLog logbook;
    cast.world().set_tap(logbook.tap());
    const ShoppingDetails& sd = cfg.purchases.at(0);
    std::uint64_t initial = cast.balance();

    FlowDriver flow(cast);
    auto first = flow.run_purchase(sd, {detail::good_pin(cfg)});
    out.expect("first-transaction-settles",
               first.kind == FlowDriver::PaymentResult::Kind::settled);
    cast.world().set_tap(nullptr);
    std::uint64_t ts_original = 0;

    World& w = cast.world();
    w.note("attack: message 21 replayed verbatim");
    auto m21 = w.deliver({21, LinkId::backhaul, "adversary", "mno"}, logbook.first(21),
                         "replay of message 21");
    auto fwd = detail::as<TransactionForwardMsg>(m21);
    ts_original = fwd->ts_u;
    auto replayed = cast.mno().handle_transaction(*flow.session_id, fwd->enc_trm, fwd->trm_mac,
                                                  fwd->ts_u, w.now());
    w.deliver({23, LinkId::backhaul, "mno", "adversary"}, encode(Message(StopMsg{})));
    out.expect("replay-rejected-tc-replay",
               !replayed.ok() && replayed.error() == TxnError::tc_replay,
               replayed.ok() ? "accepted" : to_string(replayed.error()));
    out.expect("exactly-one-ledger-entry", cast.mno().ledger().size() == 1);
    out.expect("balance-debited-once", initial - cast.balance() == sd.total);

    // Variant: long after the window, even a counter-correct request (the
    // harness forges one with the subscriber's own keys — strictly more
    // power than the wire adversary has) fails on the stale timestamp.
    w.note("attack variant: window elapsed; forged counter-correct request, stale TS_U");
    std::uint64_t window = cast.mno().policy().ts_window_ms;
    w.advance(window + 1);
    auto session = cast.mno().session(*flow.session_id);
    PaymentInfo stale_pi{cast.pos().receipt_no(), sd.total, ts_original};
    auto forged = forge_payment_message(cast.crypto(), *session.keyset, stale_pi, stale_pi,
                                        *session.r_s_seen, 2);
    auto m21b = w.deliver({21, LinkId::backhaul, "adversary", "mno"},
                          encode(Message(TransactionForwardMsg{forged.enc_trm, forged.trm_mac,
                                                               ts_original})),
                          "tamper: counter advanced to 2, timestamp left stale");
    auto fwdb = detail::as<TransactionForwardMsg>(m21b);
    auto stale = cast.mno().handle_transaction(*flow.session_id, fwdb->enc_trm, fwdb->trm_mac,
                                               fwdb->ts_u, w.now());
    w.deliver({23, LinkId::backhaul, "mno", "adversary"}, encode(Message(StopMsg{})));
    out.expect("stale-variant-rejected-ts-stale",
               !stale.ok() && stale.error() == TxnError::ts_stale,
               stale.ok() ? "accepted" : to_string(stale.error()));
    out.expect("still-one-ledger-entry", cast.mno().ledger().size() == 1);

    append_common_assertions(cast, out, "main");
    out.verdict = "aborted";
    out.abort_step = "22";
    out.reason = "tc-replay";
    detail::finish(cast, out);
    return out;
}

/// Three wrong PIN entries exhaust the SIM's retry budget and kill the
/// session at step 17; a control world shows a wrong-then-correct entry
/// still settles.
inline ScenarioOutcome scenario_wrong_pin_lockout(const Config& cfg, std::uint64_t seed) {
    ScenarioOutcome out;
    out.scenario = "wrong-pin-lockout";
    Cast cast(cfg, seed);
    cast.write_header(out.scenario);
    const ShoppingDetails& sd = cfg.purchases.at(0);
    std::uint64_t initial = cast.balance();

    std::string wrong = cfg.subscribers.at(0).pin;
    wrong[0] = wrong[0] == '9' ? '0' : wrong[0] + 1;  // guaranteed mismatch
    std::vector<UserAction> attempts(static_cast<std::size_t>(cfg.policy.pin_retries),
                                     UserAction{true, wrong});

    FlowDriver flow(cast);
    auto result = flow.run_purchase(sd, attempts);
    bool locked = result.kind == FlowDriver::PaymentResult::Kind::halted &&
                  result.halt.reason == "pin-retries-exhausted";
    out.expect("lockout-after-retry-budget", locked,
               result.kind == FlowDriver::PaymentResult::Kind::halted ? result.halt.reason
                                                                      : "not halted");
    out.expect("mobile-session-aborted",
               cast.mobile().phase() == MobileDevice::Phase::aborted);
    out.expect("retries-exhausted", cast.mobile().pin_retries_left() == 0);
    out.expect("terminal-informed", cast.pos().phase() == PosTerminal::Phase::aborted);
    out.expect("no-balance-change", cast.balance() == initial);
    out.expect("no-ledger-entry", cast.mno().ledger().empty());
    append_common_assertions(cast, out, "lockout");

    // Control: one mistyped PIN followed by the correct one settles.
    Cast control(cfg, seed);
    FlowDriver cflow(control);
    auto cresult = cflow.run_purchase(
        sd, {UserAction{true, wrong}, UserAction{true, cfg.subscribers.at(0).pin}});
    out.expect("control-retry-then-settle",
               cresult.kind == FlowDriver::PaymentResult::Kind::settled);
    control.write_outcome("settled", "", "");

    out.verdict = "aborted";
    out.abort_step = "17";
    out.reason = "pin-retries-exhausted";
    detail::finish(cast, out);
    std::uint64_t next_seq = out.transcript.back().seq + 1;
    for (TranscriptRecord r : control.world().transcript()) {
        r.seq = next_seq++;
        out.transcript.push_back(std::move(r));
    }
    return out;
}

/// The customer lifts the device off the pad to type the PIN (NFC down),
/// then puts it back; the run settles and its wire records are identical
/// to an uninterrupted control run.
inline ScenarioOutcome scenario_link_break_resume(const Config& cfg, std::uint64_t seed) {
    ScenarioOutcome out;
    out.scenario = "link-break-resume";
    Cast cast(cfg, seed);
    cast.write_header(out.scenario);
    const ShoppingDetails& sd = cfg.purchases.at(0);

    FlowDriver flow(cast);
    auto halted = flow.run_auth(sd);
    std::optional<Halt> offer_halt;
    if (!halted) {
        // Deliver the offer (step 15) first, then break the link: the PIN
        // check is SIM-local and needs no radio.
        World& w = cast.world();
        auto m14 = w.deliver(
            {14, LinkId::backhaul, "mno", "pos"},
            encode(Message(cast.mno().deliver_pos_key(*flow.session_id, cast.pos().shop_id()))));
        auto kd = detail::as<KeyDeliveryMsg>(m14);
        auto offer = cast.pos().handle_key_delivery(*kd);
        auto m15 = w.deliver({15, LinkId::nfc, "pos", "mobile"}, encode(Message(offer.value())));
        auto po = detail::as<PriceOfferMsg>(m15);

        w.set_link(LinkId::nfc, false);
        auto pin_outcome =
            cast.mobile().handle_price_offer(po->enc_offer, detail::good_pin(cfg));
        w.set_link(LinkId::nfc, true);
        if (pin_outcome != MobileDevice::OfferOutcome::proceed)
            offer_halt = Halt{"17", "pin-rejected"};
    }
    FlowDriver::PaymentResult result;
    if (!halted && !offer_halt) result = flow.run_payment();
    bool settled = result.kind == FlowDriver::PaymentResult::Kind::settled;
    out.expect("settles-after-resume", settled);
    out.expect("tc-incremented-once", cast.mobile().tc() == 1);

    // Control run without the interruption.
    Cast control(cfg, seed);
    FlowDriver cflow(control);
    auto cresult = cflow.run_purchase(sd, {detail::good_pin(cfg)});
    out.expect("control-settles", cresult.kind == FlowDriver::PaymentResult::Kind::settled);

    auto wire_only = [](const std::vector<TranscriptRecord>& recs) {
        std::vector<const TranscriptRecord*> out_;
        for (const auto& r : recs)
            if (r.kind == "wire") out_.push_back(&r);
        return out_;
    };
    auto a = wire_only(cast.world().transcript());
    auto b = wire_only(control.world().transcript());
    bool same = a.size() == b.size();
    if (same)
        for (std::size_t i = 0; i < a.size(); ++i)
            same = same && a[i]->bytes == b[i]->bytes && a[i]->time_ms == b[i]->time_ms &&
                   a[i]->step == b[i]->step;
    out.expect("transcript-identical-modulo-link-events", same);
    int link_events = 0;
    for (const auto& r : cast.world().transcript())
        if (r.kind == "link") ++link_events;
    out.expect("two-link-events-recorded", link_events == 2);

    append_common_assertions(cast, out, "main");
    out.verdict = settled ? "settled" : "aborted";
    if (!settled) {
        out.abort_step = halted ? halted->step : (offer_halt ? offer_halt->step : result.halt.step);
        out.reason = halted ? halted->reason : (offer_halt ? offer_halt->reason : result.halt.reason);
    }
    detail::finish(cast, out);
    return out;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

struct ScenarioInfo {
    std::string name;
    std::string description;
    ScenarioOutcome (*run)(const Config&, std::uint64_t);
};

inline const std::vector<ScenarioInfo>& scenario_registry() {
    static const std::vector<ScenarioInfo> registry = {
        {"happy-path",
         "Full 26-step purchase; settles with both settlement signatures verified.",
         &scenario_happy_path},
        {"pos-impersonates-customer",
         "Terminal replays the recorded identity forward (message 4); fresh challenge stops it "
         "at steps 9-10, identity rotation declines it at step 5.1.",
         &scenario_pos_impersonates_customer},
        {"pos-impersonates-mno",
         "Terminal replays a recorded challenge (message 6) without contacting the operator; "
         "the fresh R_s defeats the replayed confirm at steps 11-12.",
         &scenario_pos_impersonates_mno},
        {"dishonest-customer-trm",
         "Customer seals PI' = PI - 1 inside the transaction request; the operator-signed "
         "amount exposes it as a dispute at step 24.",
         &scenario_dishonest_customer_trm},
        {"device-swap",
         "A cloned device is swapped in after PIN entry; the R_s binding rejects it at step 22 "
         "(control: the original device resumes and settles).",
         &scenario_device_swap},
        {"replay-transaction",
         "Message 21 replayed to the operator; the transaction counter rejects it, and a "
         "stale-timestamp variant shows the TS_U window.",
         &scenario_replay_transaction},
        {"wrong-pin-lockout",
         "Wrong PIN entries exhaust the SIM retry budget; session aborts at step 17 (control: "
         "retry then correct PIN settles).",
         &scenario_wrong_pin_lockout},
        {"link-break-resume",
         "NFC link drops for PIN entry between steps 16-17 and resumes; the run settles "
         "identically to the uninterrupted control.",
         &scenario_link_break_resume},
    };
    return registry;
}

inline ScenarioOutcome run_scenario(const std::string& name, const Config& cfg,
                                    std::uint64_t seed) {
    for (const auto& info : scenario_registry())
        if (info.name == name) return info.run(cfg, seed);
    throw ConfigError("unknown scenario: " + name);
}

}  // namespace nfcpay
