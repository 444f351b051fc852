// Acceptance gate for the payment simulator. Each criterion prints exactly
// one PASS/FAIL line; the process exits 0 only if every criterion passes.
//
//   usage: acceptance <config.json>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nfcpay/config.hpp"
#include "nfcpay/scenarios.hpp"
#include "nfcpay/verifier.hpp"

using namespace nfcpay;

namespace {

struct Criterion {
    std::string name;
    std::function<bool(std::string&)> run;
};

std::string plural(std::size_t n, const char* noun) {
    return std::to_string(n) + " " + noun + (n == 1 ? "" : "s");
}

/// First failed assertion of a scenario outcome, for the detail column.
std::string first_failure(const ScenarioOutcome& out) {
    for (const auto& a : out.assertions)
        if (!a.pass) return out.scenario + ": " + a.name + " (" + a.detail + ")";
    return "";
}

bool outcome_matches(const ScenarioOutcome& out, const std::string& verdict,
                     const std::string& abort_step, const std::string& reason,
                     std::string& detail) {
    if (out.verdict != verdict || out.abort_step != abort_step || out.reason != reason) {
        detail = out.scenario + ": got verdict=" + out.verdict + " step=" + out.abort_step +
                 " reason=" + out.reason + ", want " + verdict + "/" + abort_step + "/" + reason;
        return false;
    }
    if (!out.all_passed()) {
        detail = first_failure(out);
        return false;
    }
    return true;
}

// --- 1. a full purchase settles, quickly -----------------------------------

bool settlement_under_one_second(const Config& cfg, std::string& detail) {
    auto t0 = std::chrono::steady_clock::now();
    ScenarioOutcome out = run_scenario("happy-path", cfg, cfg.seed);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    if (!outcome_matches(out, "settled", "", "", detail)) return false;
    if (out.ledger.size() != cfg.purchases.size()) {
        detail = "expected " + plural(cfg.purchases.size(), "ledger entry") + ", got " +
                 std::to_string(out.ledger.size());
        return false;
    }
    if (elapsed >= 1000) {
        detail = "took " + std::to_string(elapsed) + " ms";
        return false;
    }
    detail = plural(cfg.purchases.size(), "purchase") + " settled in " +
             std::to_string(elapsed) + " ms";
    return true;
}

// --- 2. impersonation aborts ------------------------------------------------

bool impersonation_aborts(const Config& cfg, std::string& detail) {
    ScenarioOutcome clone = run_scenario("pos-impersonates-customer", cfg, cfg.seed);
    if (!outcome_matches(clone, "aborted", "9-10", "stop", detail)) return false;

    // The replayed-identity sub-run must have been turned away before any
    // challenge was issued (Declined at 5.1) once the identity rotated.
    bool declined = false;
    for (const auto& r : clone.transcript)
        if (r.kind == "outcome" && r.abort_step == "5.1") declined = true;
    if (!declined) {
        detail = "no sub-run declined at 5.1 after identity rotation";
        return false;
    }

    ScenarioOutcome mno = run_scenario("pos-impersonates-mno", cfg, cfg.seed);
    if (!outcome_matches(mno, "aborted", "11-12", "confirm nonce mismatch", detail)) return false;

    detail = "customer-clone stopped at 9-10, stale identity declined at 5.1, "
             "operator forgery stopped at 11-12";
    return true;
}

// --- 3. MAC is checked before any decryption --------------------------------

bool bit_flips_rejected_before_decryption(const Config& cfg, std::string& detail) {
    Cast cast(cfg, cfg.seed);
    FlowDriver flow(cast);
    if (flow.run_auth(cfg.purchases.at(0))) {
        detail = "authentication did not complete";
        return false;
    }
    if (flow.run_key_offer({UserAction{true, cfg.subscribers.at(0).pin}})) {
        detail = "key delivery / offer did not complete";
        return false;
    }
    PaymentMessageMsg pm = cast.mobile().build_payment_message(cast.world().now());
    auto tf = cast.pos().handle_payment_message(pm, cast.world().now());
    if (!tf) {
        detail = "terminal rejected an honest payment message: " + tf.error();
        return false;
    }

    const KeySet& keys = *cast.mno().session(*flow.session_id).keyset;
    std::uint64_t decrypts_before = cast.instr().decrypt_count(keys.k_c.span());

    std::size_t flips = 0, rejected = 0;
    Bytes enc = tf.value().enc_trm;
    for (std::size_t byte = 0; byte < enc.size(); ++byte) {
        for (int bit = 0; bit < 8; ++bit) {
            enc[byte] ^= static_cast<std::uint8_t>(1u << bit);
            auto res = cast.mno().handle_transaction(*flow.session_id, enc, tf.value().trm_mac,
                                                     tf.value().ts_u, cast.world().now());
            if (!res.ok() && res.error() == TxnError::mac_invalid) ++rejected;
            ++flips;
            enc[byte] ^= static_cast<std::uint8_t>(1u << bit);
        }
    }
    MacTag32 tag = tf.value().trm_mac;
    for (std::size_t byte = 0; byte < MacTag32::width; ++byte) {
        for (int bit = 0; bit < 8; ++bit) {
            tag.v[byte] ^= static_cast<std::uint8_t>(1u << bit);
            auto res = cast.mno().handle_transaction(*flow.session_id, tf.value().enc_trm, tag,
                                                     tf.value().ts_u, cast.world().now());
            if (!res.ok() && res.error() == TxnError::mac_invalid) ++rejected;
            ++flips;
            tag.v[byte] ^= static_cast<std::uint8_t>(1u << bit);
        }
    }

    std::uint64_t decrypts_after = cast.instr().decrypt_count(keys.k_c.span());
    if (rejected != flips) {
        detail = std::to_string(flips - rejected) + " of " + std::to_string(flips) +
                 " corruptions were not rejected as mac-invalid";
        return false;
    }
    if (decrypts_after != decrypts_before) {
        detail = "operator decrypted under k_c during the sweep (" +
                 std::to_string(decrypts_after - decrypts_before) + " times)";
        return false;
    }
    // The untouched message still executes: the sweep rejected corruption,
    // not the transaction itself.
    auto clean = cast.mno().handle_transaction(*flow.session_id, tf.value().enc_trm,
                                               tf.value().trm_mac, tf.value().ts_u,
                                               cast.world().now());
    if (!clean.ok()) {
        detail = "pristine message rejected after the sweep: " + std::string(to_string(clean.error()));
        return false;
    }
    detail = std::to_string(flips) + " single-bit corruptions all mac-invalid, 0 decrypts under k_c";
    return true;
}

// --- 4. replayed transaction is booked once ---------------------------------

bool replay_booked_once(const Config& cfg, std::string& detail) {
    ScenarioOutcome out = run_scenario("replay-transaction", cfg, cfg.seed);
    if (!outcome_matches(out, "aborted", "22", "tc-replay", detail)) return false;
    if (out.ledger.size() != 1) {
        detail = "expected exactly one ledger entry, got " + std::to_string(out.ledger.size());
        return false;
    }
    if (out.ledger.at(0).amount != cfg.purchases.at(0).total) {
        detail = "booked amount " + std::to_string(out.ledger.at(0).amount) +
                 " differs from the purchase total";
        return false;
    }
    detail = "replay rejected as tc-replay, ledger holds the single original debit";
    return true;
}

// --- 5. inflated sealed amount raises a signed dispute -----------------------

bool dishonest_trm_disputed(const Config& cfg, std::string& detail) {
    ScenarioOutcome out = run_scenario("dishonest-customer-trm", cfg, cfg.seed);
    if (!outcome_matches(out, "dispute", "24", "settled-amount-mismatch", detail)) return false;

    // The attack world (records before the first outcome) must contain no
    // settlement bundle, and its step-23 result must verify under the
    // operator key taken from the transcript header — that signed result is
    // the replayable dispute evidence.
    std::string vkey_hex;
    bool bundle_seen = false, evidence_verified = false;
    DeterministicSuite suite;
    for (const auto& r : out.transcript) {
        if (r.kind == "outcome") break;
        if (r.kind == "header") vkey_hex = r.mno_verifying_key;
        if (r.kind != "wire") continue;
        if (r.step == 25) bundle_seen = true;
        if (r.step == 23) {
            auto m = decode(r.bytes);
            if (!m.ok()) continue;
            if (auto* tr = std::get_if<TransactionResultMsg>(&m.value()))
                evidence_verified =
                    suite.verify_sig(from_hex(vkey_hex), tr->enc_ti, tr->mno_signature);
        }
    }
    if (bundle_seen) {
        detail = "a settlement bundle crossed the link despite the dispute";
        return false;
    }
    if (!evidence_verified) {
        detail = "step-23 result in the transcript does not verify under the operator key";
        return false;
    }
    detail = "dispute at 24 with operator-signed result as evidence, no bundle issued";
    return true;
}

// --- 6. device swap detected by the session nonce ----------------------------

bool device_swap_detected(const Config& cfg, std::string& detail) {
    ScenarioOutcome out = run_scenario("device-swap", cfg, cfg.seed);
    if (!outcome_matches(out, "aborted", "22", "rs-mismatch", detail)) return false;
    std::string last_verdict;
    for (const auto& r : out.transcript)
        if (r.kind == "outcome") last_verdict = r.verdict;
    if (last_verdict != "settled") {
        detail = "control run did not settle (verdict: " + last_verdict + ")";
        return false;
    }
    detail = "swapped device stopped at 22 as rs-mismatch; same-seed control settled";
    return true;
}

// --- 7. a thousand sessions, a thousand key sets -----------------------------

bool thousand_sessions_distinct(const Config& cfg, std::string& detail) {
    const SubscriberConfig& sub = cfg.subscribers.at(0);
    const ShopConfig& shop = cfg.shops.at(0);
    DeterministicSuite suite;
    Rng keygen(0, "acceptance.keys");
    SignatureKeyPair anchor = suite.gen_signature_keypair(keygen, "acceptance");

    std::set<std::string> challenges, nonce_pairs, keysets;
    const std::size_t sessions = 1000;
    for (std::uint64_t seed = 0; seed < sessions; ++seed) {
        MnoCore mno(suite, Rng(seed, "mno"));
        mno.register_subscriber(sub.imsi, sub.k_i, sub.balance);
        mno.register_shop(shop.shop_id, shop.bank_ref, anchor.verifying_key);
        Tmsi tmsi = mno.subscriber(sub.imsi).tmsi;

        auto auth = mno.handle_auth_request(tmsi, sub.lai.pack(), shop.shop_id);
        auto* ch = std::get_if<ChallengeMsg>(&auth.reply);
        if (!ch) {
            detail = "seed " + std::to_string(seed) + ": operator declined a fresh identity";
            return false;
        }

        MobileDevice::Config mc;
        mc.imsi = sub.imsi;
        mc.tmsi = tmsi;
        mc.lai = sub.lai;
        mc.k_i = sub.k_i;
        mc.pin = sub.pin;
        mc.mno_verifying_key = anchor.verifying_key;
        mc.pos_verifying_key = anchor.verifying_key;
        MobileDevice dev(suite, Rng(seed, "mobile." + sub.imsi.hex()), mc);
        dev.handle_id_request();
        AuthResponseMsg resp = dev.handle_challenge(ch->r);

        SessionKey k_c = suite.a8_session_key(sub.k_i, ch->r);
        auto plain = suite.decrypt(k_c.span(), resp.enc_r_rs);
        if (!plain) {
            detail = "seed " + std::to_string(seed) + ": response undecryptable";
            return false;
        }
        auto pair = decode_nonce_pair(plain.value());
        if (!pair.ok()) {
            detail = "seed " + std::to_string(seed) + ": response malformed";
            return false;
        }
        KeySet ks = suite.derive_key_chain(k_c);
        challenges.insert(ch->r.hex());
        nonce_pairs.insert(ch->r.hex() + pair.value().second.hex());
        keysets.insert(ks.k_c.hex() + ks.k_c1.hex() + ks.k_c2.hex());
    }
    if (challenges.size() != sessions || nonce_pairs.size() != sessions ||
        keysets.size() != sessions) {
        detail = "collisions: " + std::to_string(sessions - challenges.size()) + " challenges, " +
                 std::to_string(sessions - nonce_pairs.size()) + " nonce pairs, " +
                 std::to_string(sessions - keysets.size()) + " key sets";
        return false;
    }
    detail = "1000 seeded sessions: all challenges, (R, R_s) pairs and key sets distinct";
    return true;
}

// --- 8. terminal knows only what it needs; secrets stay off the wire ---------

bool pos_key_confinement(const Config& cfg, std::string& detail) {
    Cast cast(cfg, cfg.seed);
    FlowDriver flow(cast);
    auto res = flow.run_purchase(cfg.purchases.at(0), {UserAction{true, cfg.subscribers.at(0).pin}});
    if (res.kind != FlowDriver::PaymentResult::Kind::settled) {
        detail = "purchase did not settle (halt at " + res.halt.step + ": " + res.halt.reason + ")";
        return false;
    }
    const std::set<std::string> expected = {"k_p", "k_c2", "mno.verifying", "sign.private"};
    std::set<std::string> actual = cast.instr().labels_for("pos.");
    if (actual != expected) {
        detail = "terminal key set is {";
        for (const auto& l : actual) detail += " " + l;
        detail += " }, want exactly { k_c2 k_p mno.verifying sign.private }";
        return false;
    }
    for (const auto& rec : cast.world().transcript()) {
        if (rec.kind != "wire") continue;
        for (const auto& [label, secret] : cast.instr().wire_forbidden_secrets()) {
            if (Instrumentation::contains(rec.bytes, secret)) {
                detail = label + " appeared on the wire at step " + std::to_string(rec.step);
                return false;
            }
        }
    }
    detail = "terminal holds exactly {k_p, k_c2, signing key, operator key}; "
             "k_i, PIN, k_c1 never on the wire";
    return true;
}

// --- 9. transcripts are reproducible and tamper-evident ----------------------

bool deterministic_and_tamper_evident(const Config& cfg, std::string& detail) {
    for (const auto& info : scenario_registry()) {
        ScenarioOutcome a = run_scenario(info.name, cfg, cfg.seed);
        ScenarioOutcome b = run_scenario(info.name, cfg, cfg.seed);
        if (to_jsonl(a.transcript) != to_jsonl(b.transcript)) {
            detail = info.name + ": two runs with the same seed differ";
            return false;
        }
    }

    ScenarioOutcome out = run_scenario("happy-path", cfg, cfg.seed);
    VerifyReport pristine = verify_transcript(out.transcript, cfg);
    if (!pristine.ok()) {
        detail = "verifier rejects a pristine transcript: " +
                 (pristine.issues.empty() ? std::string("?") : pristine.issues.front().message);
        return false;
    }

    // Flip one hex digit deep inside each signed record (result and bundle);
    // the mutation lands in the signature tail, past the summarized prefix,
    // so only signature verification can catch it.
    std::size_t mutated = 0, caught = 0;
    for (std::size_t i = 0; i < out.transcript.size(); ++i) {
        const TranscriptRecord& r = out.transcript[i];
        if (r.kind != "wire" || (r.step != 23 && r.step != 25) || r.bytes.size() < 2) continue;
        std::vector<TranscriptRecord> copy = out.transcript;
        copy[i].bytes[copy[i].bytes.size() - 2] ^= 0x01;
        VerifyReport rep = verify_transcript(copy, cfg);
        ++mutated;
        bool flagged = false;
        for (const auto& issue : rep.issues)
            if (issue.seq == r.seq) flagged = true;
        if (!rep.ok() && flagged) ++caught;
    }
    if (mutated == 0) {
        detail = "no signed records found to mutate";
        return false;
    }
    if (caught != mutated) {
        detail = std::to_string(mutated - caught) + " of " + std::to_string(mutated) +
                 " signature mutations went undetected";
        return false;
    }
    detail = "8 scenarios byte-identical across reruns; " + std::to_string(mutated) +
             "/" + std::to_string(mutated) + " signed-record mutations flagged";
    return true;
}

// --- 10. the codec never crashes and never loses a round-trip ----------------

Message random_message(MsgTag tag, Rng& rng) {
    auto nonce = [&] { return Nonce128::from_bytes(rng.draw(16)); };
    auto blob = [&](std::size_t max) {
        return rng.draw(1 + rng.draw(1).at(0) % max);
    };
    auto tag32 = [&] { return MacTag32::from_bytes(rng.draw(32)); };
    auto u64 = [&] {
        std::uint64_t x = 0;
        for (std::uint8_t b : rng.draw(8)) x = (x << 8) | b;
        return x;
    };
    auto details = [&] {
        ShoppingDetails sd;
        std::size_t n = rng.draw(1).at(0) % 4;
        for (std::size_t i = 0; i < n; ++i)
            sd.items.push_back({to_hex(rng.draw(1 + i)), u64()});
        sd.total = u64();
        return sd;
    };
    switch (tag) {
        case MsgTag::id_request: return IdRequest{};
        case MsgTag::id_response:
            return IdResponse{Tmsi::from_bytes(rng.draw(4)), LaiBytes::from_bytes(rng.draw(5))};
        case MsgTag::auth_forward:
            return AuthForward{Tmsi::from_bytes(rng.draw(4)), LaiBytes::from_bytes(rng.draw(5)),
                               ShopId::from_bytes(rng.draw(4))};
        case MsgTag::declined: return Declined{};
        case MsgTag::challenge: return ChallengeMsg{nonce()};
        case MsgTag::auth_response: return AuthResponseMsg{blob(64)};
        case MsgTag::stop: return StopMsg{};
        case MsgTag::auth_confirm: return AuthConfirmMsg{blob(64)};
        case MsgTag::auth_success: return AuthSuccessMsg{};
        case MsgTag::key_delivery: return KeyDeliveryMsg{blob(48)};
        case MsgTag::price_offer: return PriceOfferMsg{blob(48)};
        case MsgTag::payment_message: return PaymentMessageMsg{blob(64), blob(80), tag32()};
        case MsgTag::transaction_forward: return TransactionForwardMsg{blob(80), tag32(), u64()};
        case MsgTag::transaction_result: return TransactionResultMsg{blob(48), blob(64)};
        case MsgTag::settlement_bundle:
            return SettlementBundleMsg{TransactionResultMsg{blob(48), blob(64)}, details(),
                                       blob(64)};
    }
    return StopMsg{};
}

bool codec_total_on_arbitrary_input(const Config&, std::string& detail) {
    Rng fuzz(20260814, "acceptance.fuzz");
    const std::size_t fuzz_rounds = 100000;
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < fuzz_rounds; ++i) {
        Bytes len_bytes = fuzz.draw(2);
        std::size_t len = ((len_bytes[0] << 8) | len_bytes[1]) % 321;
        Bytes buf = fuzz.draw(len);
        auto d = decode(buf);
        if (!d.ok()) continue;
        ++accepted;
        if (encode(d.value()) != buf) {
            detail = "round " + std::to_string(i) + ": accepted bytes re-encode differently";
            return false;
        }
    }

    Rng gen(20260815, "acceptance.roundtrip");
    const std::size_t per_tag = 10000;
    std::size_t trips = 0;
    for (int t = 1; t <= 15; ++t) {
        for (std::size_t i = 0; i < per_tag; ++i) {
            Message m = random_message(static_cast<MsgTag>(t), gen);
            auto d = decode(encode(m));
            if (!d.ok() || !(d.value() == m)) {
                detail = "tag " + std::to_string(t) + ": round-trip mismatch at iteration " +
                         std::to_string(i);
                return false;
            }
            ++trips;
        }
    }
    detail = std::to_string(fuzz_rounds) + " random buffers decoded without fault (" +
             std::to_string(accepted) + " accepted canonically), " + std::to_string(trips) +
             " round-trips exact";
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: acceptance <config.json>\n");
        return 2;
    }
    Config cfg;
    try {
        cfg = load_config(argv[1]);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance: %s\n", e.what());
        return 2;
    }

    const std::vector<Criterion> criteria = {
        {"settlement completes under one second",
         [&](std::string& d) { return settlement_under_one_second(cfg, d); }},
        {"impersonation attempts abort",
         [&](std::string& d) { return impersonation_aborts(cfg, d); }},
        {"bit flips rejected before decryption",
         [&](std::string& d) { return bit_flips_rejected_before_decryption(cfg, d); }},
        {"replayed transaction booked exactly once",
         [&](std::string& d) { return replay_booked_once(cfg, d); }},
        {"inflated sealed amount raises signed dispute",
         [&](std::string& d) { return dishonest_trm_disputed(cfg, d); }},
        {"device swap detected by session nonce",
         [&](std::string& d) { return device_swap_detected(cfg, d); }},
        {"1000 sessions yield distinct keys and nonces",
         [&](std::string& d) { return thousand_sessions_distinct(cfg, d); }},
        {"terminal key confinement, secrets off the wire",
         [&](std::string& d) { return pos_key_confinement(cfg, d); }},
        {"deterministic transcripts, tamper-evident records",
         [&](std::string& d) { return deterministic_and_tamper_evident(cfg, d); }},
        {"codec total on arbitrary input",
         [&](std::string& d) { return codec_total_on_arbitrary_input(cfg, d); }},
    };

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        bool pass = false;
        try {
            pass = criteria[i].run(detail);
        } catch (const std::exception& e) {
            detail = std::string("unhandled exception: ") + e.what();
        }
        all = all && pass;
        std::printf("[%2zu/%zu] %s  %-48s %s\n", i + 1, criteria.size(), pass ? "PASS" : "FAIL",
                    criteria[i].name.c_str(), detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%s\n", all ? "acceptance: all criteria passed"
                            : "acceptance: FAILURES (see above)");
    return all ? 0 : 1;
}
