#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "nfcpay/bytes.hpp"
#include "nfcpay/crypto.hpp"
#include "nfcpay/ids.hpp"

namespace nfcpay {

// ---------------------------------------------------------------------------
// Wire format
//
// Every protocol message is one canonical byte string:
//
//   tag (1 byte) || body
//
// Fixed-width fields are written raw, multi-byte integers big-endian.
// Variable-length fields carry a 4-byte big-endian length prefix. Decoding
// consumes the whole buffer; anything left over is an error. See
// docs/wire-format.md for a worked example.
// ---------------------------------------------------------------------------

enum class MsgTag : std::uint8_t {
    id_request = 0x01,
    id_response = 0x02,
    auth_forward = 0x03,
    declined = 0x04,
    challenge = 0x05,
    auth_response = 0x06,
    stop = 0x07,
    auth_confirm = 0x08,
    auth_success = 0x09,
    key_delivery = 0x0a,
    price_offer = 0x0b,
    payment_message = 0x0c,
    transaction_forward = 0x0d,
    transaction_result = 0x0e,
    settlement_bundle = 0x0f,
};

inline const char* tag_name(MsgTag t) {
    switch (t) {
        case MsgTag::id_request: return "IdRequest";
        case MsgTag::id_response: return "IdResponse";
        case MsgTag::auth_forward: return "AuthForward";
        case MsgTag::declined: return "Declined";
        case MsgTag::challenge: return "Challenge";
        case MsgTag::auth_response: return "AuthResponse";
        case MsgTag::stop: return "Stop";
        case MsgTag::auth_confirm: return "AuthConfirm";
        case MsgTag::auth_success: return "AuthSuccess";
        case MsgTag::key_delivery: return "KeyDelivery";
        case MsgTag::price_offer: return "PriceOffer";
        case MsgTag::payment_message: return "PaymentMessage";
        case MsgTag::transaction_forward: return "TransactionForward";
        case MsgTag::transaction_result: return "TransactionResult";
        case MsgTag::settlement_bundle: return "SettlementBundle";
    }
    return "?";
}

enum class DecodeError {
    unknown_tag,
    truncated,
    trailing_bytes,
    length_overflow,
};

inline const char* to_string(DecodeError e) {
    switch (e) {
        case DecodeError::unknown_tag: return "unknown_tag";
        case DecodeError::truncated: return "truncated";
        case DecodeError::trailing_bytes: return "trailing_bytes";
        case DecodeError::length_overflow: return "length_overflow";
    }
    return "?";
}

// --- message bodies --------------------------------------------------------

struct IdRequest {
    friend bool operator==(const IdRequest&, const IdRequest&) = default;
};

struct IdResponse {
    Tmsi tmsi;
    LaiBytes lai;  // packed; MCC/MNC interpretation happens at routing time
    friend bool operator==(const IdResponse&, const IdResponse&) = default;
};

struct AuthForward {
    Tmsi tmsi;
    LaiBytes lai;
    ShopId shop_id;
    friend bool operator==(const AuthForward&, const AuthForward&) = default;
};

struct Declined {
    friend bool operator==(const Declined&, const Declined&) = default;
};

struct ChallengeMsg {
    Nonce128 r;
    friend bool operator==(const ChallengeMsg&, const ChallengeMsg&) = default;
};

struct AuthResponseMsg {
    Bytes enc_r_rs;  // E_Kc(R || R_s)
    friend bool operator==(const AuthResponseMsg&, const AuthResponseMsg&) = default;
};

struct StopMsg {
    friend bool operator==(const StopMsg&, const StopMsg&) = default;
};

struct AuthConfirmMsg {
    Bytes enc_rs_r;  // E_Kc(R_s || R), the swapped pair
    friend bool operator==(const AuthConfirmMsg&, const AuthConfirmMsg&) = default;
};

struct AuthSuccessMsg {
    friend bool operator==(const AuthSuccessMsg&, const AuthSuccessMsg&) = default;
};

struct KeyDeliveryMsg {
    Bytes enc_k_c2;  // E_Kp(k_c2)
    friend bool operator==(const KeyDeliveryMsg&, const KeyDeliveryMsg&) = default;
};

struct PriceOfferMsg {
    Bytes enc_offer;  // E_Kc2(total_price || receipt_no)
    friend bool operator==(const PriceOfferMsg&, const PriceOfferMsg&) = default;
};

/// Step-19 message. The first half is readable by the POS terminal (under
/// k_c2); the second half plus its MAC is opaque to it and relayed to the
/// network operator untouched.
struct PaymentMessageMsg {
    Bytes enc_pi;    // E_Kc2(PI)
    Bytes enc_trm;   // E_Kc(TRM)
    MacTag32 trm_mac;  // MAC_Kc1(E_Kc(TRM))
    friend bool operator==(const PaymentMessageMsg&, const PaymentMessageMsg&) = default;
};

struct TransactionForwardMsg {
    Bytes enc_trm;
    MacTag32 trm_mac;
    std::uint64_t ts_u = 0;
    friend bool operator==(const TransactionForwardMsg&, const TransactionForwardMsg&) = default;
};

struct TransactionResultMsg {
    Bytes enc_ti;        // E_Kc2(TI)
    Bytes mno_signature;  // over enc_ti
    friend bool operator==(const TransactionResultMsg&, const TransactionResultMsg&) = default;
};

struct LineItem {
    std::string description;
    std::uint64_t price = 0;  // minor currency units
    friend bool operator==(const LineItem&, const LineItem&) = default;
};

struct ShoppingDetails {
    std::vector<LineItem> items;
    std::uint64_t total = 0;

    std::uint64_t sum() const {
        std::uint64_t s = 0;
        for (const auto& it : items) s += it.price;
        return s;
    }
    friend bool operator==(const ShoppingDetails&, const ShoppingDetails&) = default;
};

struct SettlementBundleMsg {
    TransactionResultMsg result;
    ShoppingDetails sd;
    Bytes pos_signature;  // over encode(result) || encode(sd)
    friend bool operator==(const SettlementBundleMsg&, const SettlementBundleMsg&) = default;
};

using Message =
    std::variant<IdRequest, IdResponse, AuthForward, Declined, ChallengeMsg, AuthResponseMsg,
                 StopMsg, AuthConfirmMsg, AuthSuccessMsg, KeyDeliveryMsg, PriceOfferMsg,
                 PaymentMessageMsg, TransactionForwardMsg, TransactionResultMsg,
                 SettlementBundleMsg>;

inline MsgTag tag_of(const Message& m) {
    return static_cast<MsgTag>(m.index() + 1);
}

// --- encrypted payload plaintexts -----------------------------------------

struct PaymentInfo {
    ReceiptNo receipt_no;
    std::uint64_t total_price = 0;  // minor units, must be positive
    std::uint64_t ts_u = 0;         // simulated ms
    friend bool operator==(const PaymentInfo&, const PaymentInfo&) = default;
};

struct TransactionRequest {
    PaymentInfo pi;
    Nonce128 r_s;  // must equal the nonce from step 7 of the same session
    std::uint64_t tc = 0;
    friend bool operator==(const TransactionRequest&, const TransactionRequest&) = default;
};

struct TransactionInfo {
    TxnSerial txn_serial;
    std::uint64_t amount = 0;
    std::uint64_t ts_tr = 0;
    friend bool operator==(const TransactionInfo&, const TransactionInfo&) = default;
};

struct PriceOfferBody {
    std::uint64_t total_price = 0;
    ReceiptNo receipt_no;
    friend bool operator==(const PriceOfferBody&, const PriceOfferBody&) = default;
};

// --- reader ----------------------------------------------------------------

namespace detail {

// Declared lengths above this are treated as hostile rather than merely
// truncated, so fuzzed input cannot request giant allocations.
inline constexpr std::uint32_t max_var_field = 1u << 20;

class ByteReader {
public:
    explicit ByteReader(ByteSpan data) : data_(data) {}

    std::uint8_t u8() {
        if (!need(1)) return 0;
        return data_[pos_++];
    }

    std::uint16_t u16() {
        if (!need(2)) return 0;
        std::uint16_t x = static_cast<std::uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
        pos_ += 2;
        return x;
    }

    std::uint32_t u32() {
        if (!need(4)) return 0;
        std::uint32_t x = 0;
        for (int i = 0; i < 4; ++i) x = x << 8 | data_[pos_ + i];
        pos_ += 4;
        return x;
    }

    std::uint64_t u64() {
        if (!need(8)) return 0;
        std::uint64_t x = 0;
        for (int i = 0; i < 8; ++i) x = x << 8 | data_[pos_ + i];
        pos_ += 8;
        return x;
    }

    template <typename F>
    F fixed() {
        if (!need(F::width)) return F{};
        F out = F::from_bytes(data_.subspan(pos_, F::width));
        pos_ += F::width;
        return out;
    }

    Bytes var_bytes() {
        std::uint32_t n = u32();
        if (err_) return {};
        if (n > max_var_field) {
            err_ = DecodeError::length_overflow;
            return {};
        }
        if (!need(n)) return {};
        Bytes out(data_.begin() + pos_, data_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }

    std::string var_string() {
        Bytes b = var_bytes();
        return std::string(b.begin(), b.end());
    }

    bool finish() {
        if (err_) return false;
        if (pos_ != data_.size()) {
            err_ = DecodeError::trailing_bytes;
            return false;
        }
        return true;
    }

    std::optional<DecodeError> error() const { return err_; }
    void fail(DecodeError e) {
        if (!err_) err_ = e;
    }

private:
    bool need(std::size_t n) {
        if (err_) return false;
        if (data_.size() - pos_ < n) {
            err_ = DecodeError::truncated;
            return false;
        }
        return true;
    }

    ByteSpan data_;
    std::size_t pos_ = 0;
    std::optional<DecodeError> err_;
};

inline void put_var(Bytes& out, ByteSpan b) {
    put_u32_be(out, static_cast<std::uint32_t>(b.size()));
    append(out, b);
}

inline void put_var(Bytes& out, const std::string& s) {
    put_u32_be(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

}  // namespace detail

// --- payload codecs ---------------------------------------------------------

inline Bytes encode_payment_info(const PaymentInfo& pi) {
    Bytes out;
    append(out, pi.receipt_no.span());
    put_u64_be(out, pi.total_price);
    put_u64_be(out, pi.ts_u);
    return out;
}

inline Result<PaymentInfo, DecodeError> decode_payment_info(ByteSpan b) {
    detail::ByteReader r(b);
    PaymentInfo pi;
    pi.receipt_no = r.fixed<ReceiptNo>();
    pi.total_price = r.u64();
    pi.ts_u = r.u64();
    if (!r.finish()) return *r.error();
    return pi;
}

inline Bytes encode_transaction_request(const TransactionRequest& trm) {
    Bytes out = encode_payment_info(trm.pi);
    append(out, trm.r_s.span());
    put_u64_be(out, trm.tc);
    return out;
}

inline Result<TransactionRequest, DecodeError> decode_transaction_request(ByteSpan b) {
    detail::ByteReader r(b);
    TransactionRequest trm;
    trm.pi.receipt_no = r.fixed<ReceiptNo>();
    trm.pi.total_price = r.u64();
    trm.pi.ts_u = r.u64();
    trm.r_s = r.fixed<Nonce128>();
    trm.tc = r.u64();
    if (!r.finish()) return *r.error();
    return trm;
}

inline Bytes encode_transaction_info(const TransactionInfo& ti) {
    Bytes out;
    append(out, ti.txn_serial.span());
    put_u64_be(out, ti.amount);
    put_u64_be(out, ti.ts_tr);
    return out;
}

inline Result<TransactionInfo, DecodeError> decode_transaction_info(ByteSpan b) {
    detail::ByteReader r(b);
    TransactionInfo ti;
    ti.txn_serial = r.fixed<TxnSerial>();
    ti.amount = r.u64();
    ti.ts_tr = r.u64();
    if (!r.finish()) return *r.error();
    return ti;
}

inline Bytes encode_price_offer_body(const PriceOfferBody& o) {
    Bytes out;
    put_u64_be(out, o.total_price);
    append(out, o.receipt_no.span());
    return out;
}

inline Result<PriceOfferBody, DecodeError> decode_price_offer_body(ByteSpan b) {
    detail::ByteReader r(b);
    PriceOfferBody o;
    o.total_price = r.u64();
    o.receipt_no = r.fixed<ReceiptNo>();
    if (!r.finish()) return *r.error();
    return o;
}

/// Challenge/response plaintexts: two 128-bit nonces back to back. The
/// order is load-bearing (the confirm swaps them).
inline Bytes encode_nonce_pair(const Nonce128& first, const Nonce128& second) {
    Bytes out;
    append(out, first.span());
    append(out, second.span());
    return out;
}

inline Result<std::pair<Nonce128, Nonce128>, DecodeError> decode_nonce_pair(ByteSpan b) {
    detail::ByteReader r(b);
    auto first = r.fixed<Nonce128>();
    auto second = r.fixed<Nonce128>();
    if (!r.finish()) return *r.error();
    return std::pair{first, second};
}

// --- shopping details -------------------------------------------------------

inline void encode_shopping_details_into(Bytes& out, const ShoppingDetails& sd) {
    put_u32_be(out, static_cast<std::uint32_t>(sd.items.size()));
    for (const auto& item : sd.items) {
        detail::put_var(out, item.description);
        put_u64_be(out, item.price);
    }
    put_u64_be(out, sd.total);
}

inline Bytes encode_shopping_details(const ShoppingDetails& sd) {
    Bytes out;
    encode_shopping_details_into(out, sd);
    return out;
}

namespace detail {
inline ShoppingDetails read_shopping_details(ByteReader& r) {
    ShoppingDetails sd;
    std::uint32_t count = r.u32();
    if (count > max_var_field) {
        r.fail(DecodeError::length_overflow);
        return sd;
    }
    for (std::uint32_t i = 0; i < count && !r.error(); ++i) {
        LineItem item;
        item.description = r.var_string();
        item.price = r.u64();
        sd.items.push_back(std::move(item));
    }
    sd.total = r.u64();
    return sd;
}
}  // namespace detail

// --- message codec ----------------------------------------------------------

inline Bytes encode(const Message& m) {
    Bytes out;
    out.push_back(static_cast<std::uint8_t>(tag_of(m)));
    std::visit(
        [&out](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, IdResponse>) {
                append(out, body.tmsi.span());
                append(out, body.lai.span());
            } else if constexpr (std::is_same_v<T, AuthForward>) {
                append(out, body.tmsi.span());
                append(out, body.lai.span());
                append(out, body.shop_id.span());
            } else if constexpr (std::is_same_v<T, ChallengeMsg>) {
                append(out, body.r.span());
            } else if constexpr (std::is_same_v<T, AuthResponseMsg>) {
                detail::put_var(out, body.enc_r_rs);
            } else if constexpr (std::is_same_v<T, AuthConfirmMsg>) {
                detail::put_var(out, body.enc_rs_r);
            } else if constexpr (std::is_same_v<T, KeyDeliveryMsg>) {
                detail::put_var(out, body.enc_k_c2);
            } else if constexpr (std::is_same_v<T, PriceOfferMsg>) {
                detail::put_var(out, body.enc_offer);
            } else if constexpr (std::is_same_v<T, PaymentMessageMsg>) {
                detail::put_var(out, body.enc_pi);
                detail::put_var(out, body.enc_trm);
                append(out, body.trm_mac.span());
            } else if constexpr (std::is_same_v<T, TransactionForwardMsg>) {
                detail::put_var(out, body.enc_trm);
                append(out, body.trm_mac.span());
                put_u64_be(out, body.ts_u);
            } else if constexpr (std::is_same_v<T, TransactionResultMsg>) {
                detail::put_var(out, body.enc_ti);
                detail::put_var(out, body.mno_signature);
            } else if constexpr (std::is_same_v<T, SettlementBundleMsg>) {
                detail::put_var(out, body.result.enc_ti);
                detail::put_var(out, body.result.mno_signature);
                encode_shopping_details_into(out, body.sd);
                detail::put_var(out, body.pos_signature);
            }
            // IdRequest, Declined, StopMsg, AuthSuccessMsg carry no body
        },
        m);
    return out;
}

inline Result<Message, DecodeError> decode(ByteSpan b) {
    if (b.empty()) return DecodeError::truncated;
    std::uint8_t raw_tag = b[0];
    if (raw_tag < 0x01 || raw_tag > 0x0f) return DecodeError::unknown_tag;
    auto tag = static_cast<MsgTag>(raw_tag);
    detail::ByteReader r(b.subspan(1));

    Message m = IdRequest{};
    switch (tag) {
        case MsgTag::id_request: m = IdRequest{}; break;
        case MsgTag::declined: m = Declined{}; break;
        case MsgTag::stop: m = StopMsg{}; break;
        case MsgTag::auth_success: m = AuthSuccessMsg{}; break;
        case MsgTag::id_response: {
            IdResponse body;
            body.tmsi = r.fixed<Tmsi>();
            body.lai = r.fixed<LaiBytes>();
            m = body;
            break;
        }
        case MsgTag::auth_forward: {
            AuthForward body;
            body.tmsi = r.fixed<Tmsi>();
            body.lai = r.fixed<LaiBytes>();
            body.shop_id = r.fixed<ShopId>();
            m = body;
            break;
        }
        case MsgTag::challenge: {
            ChallengeMsg body;
            body.r = r.fixed<Nonce128>();
            m = body;
            break;
        }
        case MsgTag::auth_response: m = AuthResponseMsg{r.var_bytes()}; break;
        case MsgTag::auth_confirm: m = AuthConfirmMsg{r.var_bytes()}; break;
        case MsgTag::key_delivery: m = KeyDeliveryMsg{r.var_bytes()}; break;
        case MsgTag::price_offer: m = PriceOfferMsg{r.var_bytes()}; break;
        case MsgTag::payment_message: {
            PaymentMessageMsg body;
            body.enc_pi = r.var_bytes();
            body.enc_trm = r.var_bytes();
            body.trm_mac = r.fixed<MacTag32>();
            m = body;
            break;
        }
        case MsgTag::transaction_forward: {
            TransactionForwardMsg body;
            body.enc_trm = r.var_bytes();
            body.trm_mac = r.fixed<MacTag32>();
            body.ts_u = r.u64();
            m = body;
            break;
        }
        case MsgTag::transaction_result: {
            TransactionResultMsg body;
            body.enc_ti = r.var_bytes();
            body.mno_signature = r.var_bytes();
            m = body;
            break;
        }
        case MsgTag::settlement_bundle: {
            SettlementBundleMsg body;
            body.result.enc_ti = r.var_bytes();
            body.result.mno_signature = r.var_bytes();
            body.sd = detail::read_shopping_details(r);
            body.pos_signature = r.var_bytes();
            m = body;
            break;
        }
    }
    if (r.error()) return *r.error();
    if (!r.finish()) return *r.error();
    return m;
}

/// One-line rendering for transcripts and logs; ciphertexts abbreviated.
inline std::string summarize(const Message& m) {
    auto brief = [](ByteSpan b) {
        std::string h = to_hex(b.size() <= 8 ? b : b.subspan(0, 8));
        if (b.size() > 8) h += "..";
        return h + "(" + std::to_string(b.size()) + ")";
    };
    std::ostringstream os;
    os << tag_name(tag_of(m));
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, IdResponse>) {
                os << "{tmsi=" << body.tmsi.hex() << ",lai=" << body.lai.hex() << "}";
            } else if constexpr (std::is_same_v<T, AuthForward>) {
                os << "{tmsi=" << body.tmsi.hex() << ",lai=" << body.lai.hex()
                   << ",shop=" << body.shop_id.hex() << "}";
            } else if constexpr (std::is_same_v<T, ChallengeMsg>) {
                os << "{r=" << body.r.hex() << "}";
            } else if constexpr (std::is_same_v<T, AuthResponseMsg>) {
                os << "{enc=" << brief(body.enc_r_rs) << "}";
            } else if constexpr (std::is_same_v<T, AuthConfirmMsg>) {
                os << "{enc=" << brief(body.enc_rs_r) << "}";
            } else if constexpr (std::is_same_v<T, KeyDeliveryMsg>) {
                os << "{enc=" << brief(body.enc_k_c2) << "}";
            } else if constexpr (std::is_same_v<T, PriceOfferMsg>) {
                os << "{enc=" << brief(body.enc_offer) << "}";
            } else if constexpr (std::is_same_v<T, PaymentMessageMsg>) {
                os << "{pi=" << brief(body.enc_pi) << ",trm=" << brief(body.enc_trm)
                   << ",mac=" << brief(body.trm_mac.span()) << "}";
            } else if constexpr (std::is_same_v<T, TransactionForwardMsg>) {
                os << "{trm=" << brief(body.enc_trm) << ",mac=" << brief(body.trm_mac.span())
                   << ",ts_u=" << body.ts_u << "}";
            } else if constexpr (std::is_same_v<T, TransactionResultMsg>) {
                os << "{ti=" << brief(body.enc_ti) << ",sig=" << brief(body.mno_signature) << "}";
            } else if constexpr (std::is_same_v<T, SettlementBundleMsg>) {
                os << "{ti=" << brief(body.result.enc_ti) << ",items=" << body.sd.items.size()
                   << ",total=" << body.sd.total << ",sig=" << brief(body.pos_signature) << "}";
            }
        },
        m);
    return os.str();
}

}  // namespace nfcpay
