#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "nfcpay/bytes.hpp"

namespace nfcpay {

using Imsi = FixedBytes<8, struct ImsiTag>;        // permanent identity, never on the wire
using Tmsi = FixedBytes<4, struct TmsiTag>;        // temporary identity, travels in the clear
using ShopId = FixedBytes<4, struct ShopIdTag>;
using ReceiptNo = FixedBytes<8, struct ReceiptNoTag>;
using TxnSerial = FixedBytes<8, struct TxnSerialTag>;
using LaiBytes = FixedBytes<5, struct LaiBytesTag>;  // packed LAI as it travels

/// Location Area Identifier: MCC (3 digits) and MNC (2-3 digits) packed as
/// BCD nibbles into 3 bytes, followed by a 16-bit location code. A 2-digit
/// MNC gets an 0xF filler nibble. The POS only ever needs the MCC/MNC
/// tuple back out to route the customer to their network.
struct Lai {
    std::string mcc;         // exactly 3 decimal digits
    std::string mnc;         // 2 or 3 decimal digits
    std::uint16_t location = 0;

    friend auto operator<=>(const Lai&, const Lai&) = default;

    static bool all_digits(std::string_view s) {
        for (char c : s)
            if (c < '0' || c > '9') return false;
        return !s.empty();
    }

    void validate() const {
        if (mcc.size() != 3 || !all_digits(mcc))
            throw std::invalid_argument("MCC must be 3 decimal digits");
        if ((mnc.size() != 2 && mnc.size() != 3) || !all_digits(mnc))
            throw std::invalid_argument("MNC must be 2 or 3 decimal digits");
    }

    LaiBytes pack() const {
        validate();
        auto d = [](char c) { return static_cast<std::uint8_t>(c - '0'); };
        LaiBytes out;
        out.v[0] = static_cast<std::uint8_t>(d(mcc[0]) << 4 | d(mcc[1]));
        out.v[1] = static_cast<std::uint8_t>(d(mcc[2]) << 4 | d(mnc[0]));
        out.v[2] = static_cast<std::uint8_t>(d(mnc[1]) << 4 | (mnc.size() == 3 ? d(mnc[2]) : 0x0f));
        out.v[3] = static_cast<std::uint8_t>(location >> 8);
        out.v[4] = static_cast<std::uint8_t>(location);
        return out;
    }

    /// Returns false when a BCD nibble is not a digit (filler aside).
    static bool unpack(ByteSpan b, Lai& out) {
        if (b.size() != 5) return false;
        std::uint8_t nib[6] = {
            static_cast<std::uint8_t>(b[0] >> 4), static_cast<std::uint8_t>(b[0] & 0x0f),
            static_cast<std::uint8_t>(b[1] >> 4), static_cast<std::uint8_t>(b[1] & 0x0f),
            static_cast<std::uint8_t>(b[2] >> 4), static_cast<std::uint8_t>(b[2] & 0x0f)};
        for (int i = 0; i < 5; ++i)
            if (nib[i] > 9) return false;
        if (nib[5] > 9 && nib[5] != 0x0f) return false;
        out.mcc = {static_cast<char>('0' + nib[0]), static_cast<char>('0' + nib[1]),
                   static_cast<char>('0' + nib[2])};
        out.mnc = {static_cast<char>('0' + nib[3]), static_cast<char>('0' + nib[4])};
        if (nib[5] != 0x0f) out.mnc.push_back(static_cast<char>('0' + nib[5]));
        out.location = static_cast<std::uint16_t>(b[3] << 8 | b[4]);
        return true;
    }

    /// "mcc/mnc" routing key for the POS terminal's network directory.
    std::string network_code() const { return mcc + "/" + mnc; }
};

}  // namespace nfcpay
