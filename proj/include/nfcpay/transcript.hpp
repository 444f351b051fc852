#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nfcpay/bytes.hpp"
#include "nfcpay/errors.hpp"
#include "nfcpay/mno.hpp"
#include "nfcpay/wire.hpp"

namespace nfcpay {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Transcript: one JSON object per line, append-only, sequence-numbered.
// Record kinds:
//   header  — scenario name, seed, public verification keys
//   wire    — one message crossing one link (post-adversary bytes)
//   link    — a link going down or up
//   note    — free-text marker (sub-run boundaries and the like)
//   outcome — verdict, ledger, final balances
// Identical (config, seed) runs serialize to byte-identical files.
// ---------------------------------------------------------------------------

struct TranscriptRecord {
    std::uint64_t seq = 0;
    std::string kind;  // header | wire | link | note | outcome
    std::uint64_t time_ms = 0;

    // header
    std::string scenario;
    std::uint64_t seed = 0;
    std::string mno_verifying_key;                        // hex
    std::map<std::string, std::string> shop_verifying_keys;  // shop_id hex → key hex

    // wire
    int step = 0;           // protocol message number 1..26
    std::string link;        // "nfc" | "backhaul"
    std::string from, to;    // party names
    Bytes bytes;             // exact wire bytes as delivered
    std::string summary;     // decoded one-liner, recomputable from bytes
    std::string adversary;   // empty when the hop was untouched

    // link
    std::string status;      // "up" | "down"

    // note
    std::string text;

    // outcome
    std::string verdict;     // settled | aborted | dispute
    std::string abort_step;  // protocol step where the run halted ("9-10", "5.1", ...)
    std::string reason;
    std::vector<LedgerEntry> ledger;
    std::map<std::string, std::uint64_t> balances;   // imsi hex → final balance
    std::map<std::string, std::uint64_t> credited;   // shop hex → credited total
    std::map<std::string, std::uint64_t> tc;         // imsi hex → final counter
};

inline Json to_json(const TranscriptRecord& r) {
    Json j;
    j["seq"] = r.seq;
    j["kind"] = r.kind;
    if (r.kind == "header") {
        j["scenario"] = r.scenario;
        j["seed"] = r.seed;
        j["mno_verifying_key"] = r.mno_verifying_key;
        j["shop_verifying_keys"] = r.shop_verifying_keys;
        return j;
    }
    j["time_ms"] = r.time_ms;
    if (r.kind == "wire") {
        j["step"] = r.step;
        j["link"] = r.link;
        j["from"] = r.from;
        j["to"] = r.to;
        j["bytes"] = to_hex(r.bytes);
        j["summary"] = r.summary;
        j["adversary"] = r.adversary;
    } else if (r.kind == "link") {
        j["link"] = r.link;
        j["status"] = r.status;
    } else if (r.kind == "note") {
        j["text"] = r.text;
    } else if (r.kind == "outcome") {
        j["verdict"] = r.verdict;
        j["abort_step"] = r.abort_step;
        j["reason"] = r.reason;
        Json led = Json::array();
        for (const auto& e : r.ledger) {
            led.push_back(Json{{"txn_serial", e.txn_serial.hex()},
                               {"debit_imsi", e.debit_imsi.hex()},
                               {"credit_bank_ref", e.credit_bank_ref},
                               {"amount", e.amount},
                               {"ts_tr", e.ts_tr}});
        }
        j["ledger"] = led;
        j["balances"] = r.balances;
        j["credited"] = r.credited;
        j["tc"] = r.tc;
    }
    return j;
}

inline TranscriptRecord record_from_json(const Json& j) {
    TranscriptRecord r;
    r.seq = j.at("seq").get<std::uint64_t>();
    r.kind = j.at("kind").get<std::string>();
    if (r.kind == "header") {
        r.scenario = j.at("scenario").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.mno_verifying_key = j.at("mno_verifying_key").get<std::string>();
        for (const auto& [k, v] : j.at("shop_verifying_keys").items())
            r.shop_verifying_keys[k] = v.get<std::string>();
        return r;
    }
    r.time_ms = j.at("time_ms").get<std::uint64_t>();
    if (r.kind == "wire") {
        r.step = j.at("step").get<int>();
        r.link = j.at("link").get<std::string>();
        r.from = j.at("from").get<std::string>();
        r.to = j.at("to").get<std::string>();
        r.bytes = from_hex(j.at("bytes").get<std::string>());
        r.summary = j.at("summary").get<std::string>();
        r.adversary = j.at("adversary").get<std::string>();
    } else if (r.kind == "link") {
        r.link = j.at("link").get<std::string>();
        r.status = j.at("status").get<std::string>();
    } else if (r.kind == "note") {
        r.text = j.at("text").get<std::string>();
    } else if (r.kind == "outcome") {
        r.verdict = j.at("verdict").get<std::string>();
        r.abort_step = j.at("abort_step").get<std::string>();
        r.reason = j.at("reason").get<std::string>();
        for (const auto& e : j.at("ledger")) {
            LedgerEntry le;
            le.txn_serial = TxnSerial::from_hex(e.at("txn_serial").get<std::string>());
            le.debit_imsi = Imsi::from_hex(e.at("debit_imsi").get<std::string>());
            le.credit_bank_ref = e.at("credit_bank_ref").get<std::string>();
            le.amount = e.at("amount").get<std::uint64_t>();
            le.ts_tr = e.at("ts_tr").get<std::uint64_t>();
            r.ledger.push_back(std::move(le));
        }
        for (const auto& [k, v] : j.at("balances").items())
            r.balances[k] = v.get<std::uint64_t>();
        for (const auto& [k, v] : j.at("credited").items())
            r.credited[k] = v.get<std::uint64_t>();
        for (const auto& [k, v] : j.at("tc").items()) r.tc[k] = v.get<std::uint64_t>();
    } else {
        throw std::runtime_error("unknown transcript record kind: " + r.kind);
    }
    return r;
}

inline std::string to_jsonl(const std::vector<TranscriptRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<TranscriptRecord> parse_jsonl(const std::string& text) {
    std::vector<TranscriptRecord> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        out.push_back(record_from_json(Json::parse(line)));
    }
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace nfcpay
