#include <catch2/catch_amalgamated.hpp>

#include "nfcpay/config.hpp"
#include "nfcpay/scenarios.hpp"
#include "nfcpay/verifier.hpp"
#include "test_support.hpp"

using namespace nfcpay;
using nfcpay::test::small_config;

namespace {

Json base_json() {
    return Json{
        {"seed", 7},
        {"scenario", "happy-path"},
        {"policy",
         {{"ts_window_ms", 120000},
          {"txn_cap", 5000},
          {"pin_retries", 3},
          {"rotate_tmsi_on_settlement", true},
          {"hop_ms", 10}}},
        {"subscribers",
         Json::array({{{"imsi", "90f1020304050607"},
                       {"k_i", "000102030405060708090a0b0c0d0e0f"},
                       {"pin", "4711"},
                       {"balance", 10000},
                       {"lai", {{"mcc", "262"}, {"mnc", "01"}, {"location", 4821}}}}})},
        {"shops",
         Json::array({{{"shop_id", "0000beef"},
                       {"bank_ref", "DE02120300000000202051"},
                       {"networks", Json::array({"262/01"})}}})},
        {"purchases",
         Json::array({{{"items", Json::array({{{"description", "espresso"}, {"price", 250}},
                                              {{"description", "croissant"}, {"price", 200}}})},
                       {"total", 450}}})},
    };
}

/// The config error message for a given mutation of the base document.
std::string config_error(const std::function<void(Json&)>& mutate) {
    Json j = base_json();
    mutate(j);
    try {
        (void)parse_config(j);
        return "";
    } catch (const ConfigError& e) {
        return e.what();
    }
}

}  // namespace

TEST_CASE("a well-formed config parses", "[store]") {
    Config cfg = parse_config(base_json());
    CHECK(cfg.seed == 7);
    CHECK(cfg.scenario == "happy-path");
    CHECK(cfg.policy.txn_cap == 5000);
    CHECK(cfg.policy.hop_ms == 10);
    REQUIRE(cfg.subscribers.size() == 1);
    CHECK(cfg.subscribers[0].imsi == Imsi::from_hex("90f1020304050607"));
    CHECK(cfg.subscribers[0].lai.network_code() == "262/01");
    REQUIRE(cfg.shops.size() == 1);
    CHECK(cfg.shops[0].networks.count("262/01") == 1);
    REQUIRE(cfg.purchases.size() == 1);
    CHECK(cfg.purchases[0].total == 450);
    CHECK(cfg.mno_policy().txn_cap == 5000);
}

TEST_CASE("defaults apply when optional fields are absent", "[store]") {
    Json j = base_json();
    j.erase("policy");
    j.erase("seed");
    j.erase("scenario");
    Config cfg = parse_config(j);
    CHECK(cfg.seed == 1);
    CHECK(cfg.scenario.empty());
    CHECK(cfg.policy.ts_window_ms == 120'000);
    CHECK(cfg.policy.pin_retries == 3);
}

TEST_CASE("config validation names the offending rule", "[store]") {
    using Catch::Matchers::ContainsSubstring;

    CHECK_THAT(config_error([](Json& j) { j.erase("subscribers"); }),
               ContainsSubstring("schema"));
    CHECK_THAT(config_error([](Json& j) { j["subscribers"][0].erase("k_i"); }),
               ContainsSubstring("missing field: k_i"));
    CHECK_THAT(config_error([](Json& j) { j["subscribers"][0]["imsi"] = "abcd"; }),
               ContainsSubstring("expected 8 bytes"));
    CHECK_THAT(config_error([](Json& j) { j["subscribers"][0]["k_i"] = "zz"; }),
               ContainsSubstring("k_i"));
    CHECK_THAT(config_error([](Json& j) {
                   j["subscribers"].push_back(j["subscribers"][0]);
               }),
               ContainsSubstring("duplicate imsi"));
    CHECK_THAT(config_error([](Json& j) { j["subscribers"][0]["pin"] = "12"; }),
               ContainsSubstring("pin"));
    CHECK_THAT(config_error([](Json& j) { j["subscribers"][0]["lai"]["mcc"] = "26"; }),
               ContainsSubstring("MCC"));
    CHECK_THAT(config_error([](Json& j) { j["shops"] = Json::array(); }),
               ContainsSubstring("at least one shop"));
    CHECK_THAT(config_error([](Json& j) { j["shops"][0]["networks"] = Json::array(); }),
               ContainsSubstring("routes to no network"));
    CHECK_THAT(config_error([](Json& j) { j["shops"].push_back(j["shops"][0]); }),
               ContainsSubstring("duplicate shop_id"));
    CHECK_THAT(config_error([](Json& j) { j["purchases"] = Json::array(); }),
               ContainsSubstring("at least one purchase"));
    CHECK_THAT(config_error([](Json& j) { j["purchases"][0]["total"] = 449; }),
               ContainsSubstring("total must equal the sum"));
    CHECK_THAT(config_error([](Json& j) { j["purchases"][0]["items"][0]["price"] = 0; }),
               ContainsSubstring("price must be positive"));
    CHECK_THAT(config_error([](Json& j) { j["policy"]["pin_retries"] = 0; }),
               ContainsSubstring("pin_retries"));
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("transcripts survive the jsonl round trip byte for byte", "[store]") {
    Config cfg = small_config();
    for (const auto& info : scenario_registry()) {
        ScenarioOutcome out = run_scenario(info.name, cfg, cfg.seed);
        std::string once = to_jsonl(out.transcript);
        std::vector<TranscriptRecord> parsed = parse_jsonl(once);
        REQUIRE(parsed.size() == out.transcript.size());
        INFO(info.name);
        CHECK(to_jsonl(parsed) == once);
    }
}

TEST_CASE("parsed records preserve every field", "[store]") {
    Config cfg = small_config();
    ScenarioOutcome out = run_scenario("happy-path", cfg, cfg.seed);
    auto parsed = parse_jsonl(to_jsonl(out.transcript));

    const TranscriptRecord& header = parsed.front();
    CHECK(header.kind == "header");
    CHECK(header.seed == cfg.seed);
    CHECK(header.scenario == "happy-path");
    CHECK(header.shop_verifying_keys.count("0000beef") == 1);

    bool saw_wire = false;
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        if (parsed[i].kind != "wire") continue;
        saw_wire = true;
        CHECK(parsed[i].bytes == out.transcript[i].bytes);
        CHECK(parsed[i].summary == out.transcript[i].summary);
        CHECK(parsed[i].step == out.transcript[i].step);
    }
    CHECK(saw_wire);

    const TranscriptRecord& outcome = parsed.back();
    CHECK(outcome.kind == "outcome");
    CHECK(outcome.verdict == "settled");
    REQUIRE(outcome.ledger.size() == 1);
    CHECK(outcome.ledger[0].amount == 450);
    CHECK(outcome.balances.at(cfg.subscribers[0].imsi.hex()) == 10'000 - 450);
}

TEST_CASE("the offline verifier accepts every scenario transcript", "[store]") {
    Config cfg = small_config();
    for (const auto& info : scenario_registry()) {
        ScenarioOutcome out = run_scenario(info.name, cfg, cfg.seed);
        // Through serialization, as the CLI would read it back.
        auto records = parse_jsonl(to_jsonl(out.transcript));
        VerifyReport report = verify_transcript(records, cfg);
        INFO(info.name << ": " << (report.ok() ? "" : report.issues.front().message));
        CHECK(report.ok());
        CHECK(report.records == out.transcript.size());
        CHECK(report.sessions >= 1);
        CHECK(report.outcomes >= 1);
    }
}

TEST_CASE("the verifier counts one binding per authentication", "[store]") {
    Config cfg = small_config();
    cfg.purchases.push_back(ShoppingDetails{{{"newspaper", 320}}, 320});
    ScenarioOutcome out = run_scenario("happy-path", cfg, cfg.seed);
    VerifyReport report = verify_transcript(out.transcript, cfg);
    CHECK(report.ok());
    CHECK(report.sessions == 2);  // one per purchase
    CHECK(report.outcomes == 1);
}

TEST_CASE("flipping one wire byte is detected at that record", "[store]") {
    Config cfg = small_config();
    ScenarioOutcome out = run_scenario("happy-path", cfg, cfg.seed);

    for (std::size_t i = 0; i < out.transcript.size(); ++i) {
        if (out.transcript[i].kind != "wire" || out.transcript[i].bytes.size() < 6) continue;
        auto mutated = out.transcript;
        mutated[i].bytes[5] ^= 0x10;  // one hex digit
        VerifyReport report = verify_transcript(mutated, cfg);
        INFO("record " << i << " (" << out.transcript[i].summary << ")");
        REQUIRE_FALSE(report.ok());
        bool named = false;
        for (const auto& issue : report.issues) named = named || issue.seq == mutated[i].seq;
        CHECK(named);
    }
}

TEST_CASE("re-signing-free forgery of a signed record is detected", "[store]") {
    Config cfg = small_config();
    ScenarioOutcome out = run_scenario("happy-path", cfg, cfg.seed);

    // Rewrite the settlement bundle so the shop nets one unit more, fixing
    // the summary so only the signature can give it away.
    auto mutated = out.transcript;
    bool found = false;
    for (auto& r : mutated) {
        if (r.kind != "wire" || r.step != 25) continue;
        auto msg = decode(r.bytes);
        REQUIRE(msg.ok());
        auto bundle = std::get<SettlementBundleMsg>(msg.value());
        bundle.sd.total += 1;
        bundle.sd.items[0].price += 1;
        r.bytes = encode(Message(bundle));
        r.summary = summarize(Message(bundle));
        found = true;
        break;
    }
    REQUIRE(found);
    VerifyReport report = verify_transcript(mutated, cfg);
    REQUIRE_FALSE(report.ok());
    bool mentions_signature = false;
    for (const auto& issue : report.issues)
        mentions_signature =
            mentions_signature || issue.message.find("signature") != std::string::npos ||
            issue.message.find("countersign") != std::string::npos;
    CHECK(mentions_signature);
}

TEST_CASE("books that do not balance are detected", "[store]") {
    Config cfg = small_config();
    ScenarioOutcome out = run_scenario("happy-path", cfg, cfg.seed);

    SECTION("a subscriber balance that ignores a debit") {
        auto mutated = out.transcript;
        mutated.back().balances[cfg.subscribers[0].imsi.hex()] += 450;
        CHECK_FALSE(verify_transcript(mutated, cfg).ok());
    }
    SECTION("a credit with no matching ledger entry") {
        auto mutated = out.transcript;
        mutated.back().credited[cfg.shops[0].shop_id.hex()] += 1;
        CHECK_FALSE(verify_transcript(mutated, cfg).ok());
    }
    SECTION("a transaction counter that ran ahead") {
        auto mutated = out.transcript;
        mutated.back().tc[cfg.subscribers[0].imsi.hex()] += 1;
        CHECK_FALSE(verify_transcript(mutated, cfg).ok());
    }
}

TEST_CASE("structural damage to the transcript is detected", "[store]") {
    Config cfg = small_config();
    ScenarioOutcome out = run_scenario("happy-path", cfg, cfg.seed);

    SECTION("a dropped record breaks the sequence") {
        auto mutated = out.transcript;
        mutated.erase(mutated.begin() + 3);
        CHECK_FALSE(verify_transcript(mutated, cfg).ok());
    }
    SECTION("a missing header") {
        auto mutated = out.transcript;
        mutated.erase(mutated.begin());
        CHECK_FALSE(verify_transcript(mutated, cfg).ok());
    }
    SECTION("a duplicated record") {
        auto mutated = out.transcript;
        mutated.insert(mutated.begin() + 5, mutated[5]);
        CHECK_FALSE(verify_transcript(mutated, cfg).ok());
    }
    SECTION("an empty transcript") {
        CHECK_FALSE(verify_transcript({}, cfg).ok());
    }
}

TEST_CASE("malformed jsonl lines are rejected", "[store]") {
    CHECK_THROWS(parse_jsonl("not json\n"));
    CHECK_THROWS(parse_jsonl(R"({"seq":0,"kind":"wormhole","time_ms":0})"
                             "\n"));
    CHECK(parse_jsonl("").empty());
}
