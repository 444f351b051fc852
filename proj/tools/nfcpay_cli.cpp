// Command-line front end: run a scenario and write its transcript, verify
// a transcript offline, or list the scenario catalog.
//
// Exit codes: 0 success, 1 a scenario assertion or verification failed,
// 2 usage or configuration error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nfcpay/scenarios.hpp"
#include "nfcpay/transcript.hpp"
#include "nfcpay/verifier.hpp"

namespace {

using namespace nfcpay;

Json final_state_json(const ScenarioOutcome& out) {
    Json j;
    j["scenario"] = out.scenario;
    j["verdict"] = out.verdict;
    j["abort_step"] = out.abort_step;
    j["reason"] = out.reason;
    j["balances"] = out.balances;
    j["credited"] = out.credited;
    j["tc"] = out.tc;
    Json ledger = Json::array();
    for (const auto& e : out.ledger) {
        Json entry;
        entry["txn_serial"] = e.txn_serial.hex();
        entry["debit_imsi"] = e.debit_imsi.hex();
        entry["credit_bank_ref"] = e.credit_bank_ref;
        entry["amount"] = e.amount;
        entry["ts_tr"] = e.ts_tr;
        ledger.push_back(std::move(entry));
    }
    j["ledger"] = std::move(ledger);
    Json assertions = Json::array();
    for (const auto& a : out.assertions) {
        Json one;
        one["name"] = a.name;
        one["pass"] = a.pass;
        one["detail"] = a.detail;
        assertions.push_back(std::move(one));
    }
    j["assertions"] = std::move(assertions);
    return j;
}

int cmd_run(const std::string& config_path, std::string scenario,
            std::optional<std::uint64_t> seed, const std::string& out_dir) {
    Config cfg = load_config(config_path);
    if (scenario.empty()) scenario = cfg.scenario;
    if (scenario.empty())
        throw ConfigError("no scenario given: pass --scenario or set one in the config");
    std::uint64_t effective_seed = seed.value_or(cfg.seed);

    ScenarioOutcome out = run_scenario(scenario, cfg, effective_seed);

    std::filesystem::create_directories(out_dir);
    const std::string transcript_path = out_dir + "/transcript.jsonl";
    const std::string state_path = out_dir + "/final_state.json";
    write_file(transcript_path, to_jsonl(out.transcript));
    write_file(state_path, final_state_json(out).dump(2) + "\n");

    std::cout << "scenario:   " << out.scenario << " (seed " << effective_seed << ")\n";
    std::cout << "verdict:    " << out.verdict;
    if (!out.abort_step.empty())
        std::cout << " at step " << out.abort_step << " (" << out.reason << ")";
    std::cout << "\n";
    bool all_pass = true;
    for (const auto& a : out.assertions) {
        std::cout << (a.pass ? "  ok   " : "  FAIL ") << a.name;
        if (!a.pass && !a.detail.empty()) std::cout << "  [" << a.detail << "]";
        std::cout << "\n";
        all_pass = all_pass && a.pass;
    }
    std::cout << "transcript: " << transcript_path << "\n";
    std::cout << "state:      " << state_path << "\n";
    return all_pass ? 0 : 1;
}

int cmd_verify(const std::string& transcript_path, const std::string& config_path) {
    Config cfg = load_config(config_path);
    auto records = parse_jsonl(read_file(transcript_path));
    VerifyReport report = verify_transcript(records, cfg);
    if (report.ok()) {
        std::cout << "transcript verified: " << report.records << " records, "
                  << report.wire_records << " wire messages, " << report.sessions
                  << " authentication binding(s), " << report.outcomes << " outcome(s)\n";
        return 0;
    }
    for (const auto& i : report.issues)
        std::cout << "issue at seq " << i.seq << ": " << i.message << "\n";
    std::cout << report.issues.size() << " issue(s) found\n";
    return 1;
}

int cmd_list() {
    for (const auto& info : scenario_registry())
        std::cout << info.name << "\n    " << info.description << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic simulator of a GSM-authenticated NFC payment protocol"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a scenario and write its transcript");
    std::string config_path, scenario, out_dir = "out";
    std::optional<std::uint64_t> seed;
    run->add_option("--config", config_path, "Config JSON path")->required();
    run->add_option("--scenario", scenario, "Scenario name (see list-scenarios)");
    run->add_option("--seed", seed, "Seed override (defaults to the config's)");
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();

    auto* verify = app.add_subcommand("verify", "Verify a transcript offline");
    std::string transcript_path, verify_config;
    verify->add_option("--transcript", transcript_path, "transcript.jsonl path")->required();
    verify->add_option("--config", verify_config, "Config JSON path")->required();

    app.add_subcommand("list-scenarios", "List the scenario catalog");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // --help exits 0; bad usage exits 2
    }

    try {
        if (app.got_subcommand("run")) return cmd_run(config_path, scenario, seed, out_dir);
        if (app.got_subcommand("verify")) return cmd_verify(transcript_path, verify_config);
        return cmd_list();
    } catch (const nfcpay::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
