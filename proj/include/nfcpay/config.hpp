#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nfcpay/errors.hpp"
#include "nfcpay/ids.hpp"
#include "nfcpay/mno.hpp"
#include "nfcpay/transcript.hpp"
#include "nfcpay/wire.hpp"

namespace nfcpay {

// ---------------------------------------------------------------------------
// Scenario configuration. One JSON document describes the cast (subscribers
// with their SIM secrets, shops), the basket(s) to purchase, the operator
// policy and the default seed/scenario. Secrets are hex — this is a
// simulator config, reproducibility outranks secret hygiene.
// ---------------------------------------------------------------------------

struct SubscriberConfig {
    Imsi imsi;
    SubscriberKey k_i;
    std::string pin;
    std::uint64_t balance = 0;
    Lai lai;
};

struct ShopConfig {
    ShopId shop_id;
    std::string bank_ref;
    std::set<std::string> networks;  // "mcc/mnc" codes the terminal routes to
};

struct PolicyConfig {
    std::uint64_t ts_window_ms = 120'000;
    std::uint64_t txn_cap = 5'000;
    int pin_retries = 3;
    bool rotate_tmsi_on_settlement = true;
    std::uint64_t hop_ms = 10;
};

struct Config {
    std::uint64_t seed = 1;
    std::string scenario;  // default scenario; the CLI flag overrides
    PolicyConfig policy;
    std::vector<SubscriberConfig> subscribers;
    std::vector<ShopConfig> shops;
    std::vector<ShoppingDetails> purchases;

    MnoPolicy mno_policy() const {
        return MnoPolicy{policy.ts_window_ms, policy.txn_cap, policy.rotate_tmsi_on_settlement};
    }
};

namespace detail {

inline Bytes hex_field(const Json& j, const char* key, std::size_t want_bytes) {
    if (!j.contains(key)) throw ConfigError(std::string("missing field: ") + key);
    std::string h = j.at(key).get<std::string>();
    Bytes b;
    try {
        b = from_hex(h);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
    if (b.size() != want_bytes)
        throw ConfigError(std::string(key) + ": expected " + std::to_string(want_bytes) +
                          " bytes of hex, got " + std::to_string(b.size()));
    return b;
}

}  // namespace detail

inline Config parse_config(const Json& j) {
    Config cfg;
    try {
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("scenario")) cfg.scenario = j.at("scenario").get<std::string>();

        if (j.contains("policy")) {
            const Json& p = j.at("policy");
            if (p.contains("ts_window_ms"))
                cfg.policy.ts_window_ms = p.at("ts_window_ms").get<std::uint64_t>();
            if (p.contains("txn_cap")) cfg.policy.txn_cap = p.at("txn_cap").get<std::uint64_t>();
            if (p.contains("pin_retries")) cfg.policy.pin_retries = p.at("pin_retries").get<int>();
            if (p.contains("rotate_tmsi_on_settlement"))
                cfg.policy.rotate_tmsi_on_settlement =
                    p.at("rotate_tmsi_on_settlement").get<bool>();
            if (p.contains("hop_ms")) cfg.policy.hop_ms = p.at("hop_ms").get<std::uint64_t>();
        }

        for (const Json& s : j.at("subscribers")) {
            SubscriberConfig sub;
            sub.imsi = Imsi::from_bytes(detail::hex_field(s, "imsi", Imsi::width));
            sub.k_i = SubscriberKey::from_bytes(detail::hex_field(s, "k_i", SubscriberKey::width));
            sub.pin = s.at("pin").get<std::string>();
            sub.balance = s.at("balance").get<std::uint64_t>();
            const Json& lai = s.at("lai");
            sub.lai.mcc = lai.at("mcc").get<std::string>();
            sub.lai.mnc = lai.at("mnc").get<std::string>();
            sub.lai.location = lai.at("location").get<std::uint16_t>();
            cfg.subscribers.push_back(std::move(sub));
        }

        for (const Json& s : j.at("shops")) {
            ShopConfig shop;
            shop.shop_id = ShopId::from_bytes(detail::hex_field(s, "shop_id", ShopId::width));
            shop.bank_ref = s.at("bank_ref").get<std::string>();
            for (const Json& n : s.at("networks"))
                shop.networks.insert(n.get<std::string>());
            cfg.shops.push_back(std::move(shop));
        }

        for (const Json& p : j.at("purchases")) {
            ShoppingDetails sd;
            for (const Json& item : p.at("items"))
                sd.items.push_back(
                    {item.at("description").get<std::string>(),
                     item.at("price").get<std::uint64_t>()});
            sd.total = p.at("total").get<std::uint64_t>();
            cfg.purchases.push_back(std::move(sd));
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config does not match schema: ") + e.what());
    }

    // --- cross-field validation -----------------------------------------
    if (cfg.subscribers.empty()) throw ConfigError("at least one subscriber required");
    if (cfg.shops.empty()) throw ConfigError("at least one shop required");
    if (cfg.purchases.empty()) throw ConfigError("at least one purchase required");

    std::set<Imsi> imsis;
    for (const auto& s : cfg.subscribers) {
        if (!imsis.insert(s.imsi).second) throw ConfigError("duplicate imsi: " + s.imsi.hex());
        if (s.pin.size() < 4 || s.pin.size() > 6 || !Lai::all_digits(s.pin))
            throw ConfigError("pin must be 4-6 decimal digits (imsi " + s.imsi.hex() + ")");
        try {
            s.lai.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("lai: ") + e.what());
        }
    }
    std::set<ShopId> shop_ids;
    for (const auto& s : cfg.shops) {
        if (!shop_ids.insert(s.shop_id).second)
            throw ConfigError("duplicate shop_id: " + s.shop_id.hex());
        if (s.networks.empty())
            throw ConfigError("shop " + s.shop_id.hex() + " routes to no network");
    }
    for (const auto& sd : cfg.purchases) {
        if (sd.items.empty()) throw ConfigError("purchase with no line items");
        for (const auto& item : sd.items)
            if (item.price == 0) throw ConfigError("line item price must be positive");
        if (sd.total == 0 || sd.total != sd.sum())
            throw ConfigError("purchase total must equal the sum of its line items");
    }
    if (cfg.policy.pin_retries < 1) throw ConfigError("pin_retries must be at least 1");
    return cfg;
}

inline Config load_config(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    return parse_config(j);
}

}  // namespace nfcpay
