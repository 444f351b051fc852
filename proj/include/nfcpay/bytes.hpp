#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nfcpay {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

inline std::string to_hex(ByteSpan data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("hex string has odd length");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_nibble(hex[2 * i]);
        int lo = hex_nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit");
        out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return out;
}

/// Fixed-width byte string with a phantom tag so keys, nonces and
/// identifiers of equal width cannot be mixed up at compile time.
template <std::size_t N, typename Tag>
struct FixedBytes {
    static constexpr std::size_t width = N;
    std::array<std::uint8_t, N> v{};

    constexpr FixedBytes() = default;
    explicit constexpr FixedBytes(const std::array<std::uint8_t, N>& a) : v(a) {}

    static FixedBytes from_bytes(ByteSpan b) {
        if (b.size() != N)
            throw std::length_error("expected " + std::to_string(N) + " bytes, got " +
                                    std::to_string(b.size()));
        FixedBytes out;
        std::memcpy(out.v.data(), b.data(), N);
        return out;
    }

    static FixedBytes from_hex(std::string_view hex) {
        return from_bytes(nfcpay::from_hex(hex));
    }

    Bytes to_bytes() const { return Bytes(v.begin(), v.end()); }
    ByteSpan span() const { return ByteSpan(v.data(), N); }
    operator ByteSpan() const { return span(); }
    std::string hex() const { return to_hex(span()); }

    friend auto operator<=>(const FixedBytes&, const FixedBytes&) = default;
};

/// Minimal expected-like carrier: exactly one of a value or a typed error.
template <typename T, typename E>
class Result {
public:
    Result(T value) : v_(std::move(value)) {}
    Result(E error) : v_(std::move(error)) {}

    bool ok() const { return std::holds_alternative<T>(v_); }
    explicit operator bool() const { return ok(); }

    const T& value() const& {
        if (!ok()) throw std::logic_error("Result::value() on error");
        return std::get<T>(v_);
    }
    T&& value() && {
        if (!ok()) throw std::logic_error("Result::value() on error");
        return std::get<T>(std::move(v_));
    }
    const E& error() const {
        if (ok()) throw std::logic_error("Result::error() on value");
        return std::get<E>(v_);
    }

private:
    std::variant<T, E> v_;
};

inline void put_u16_be(Bytes& out, std::uint16_t x) {
    out.push_back(static_cast<std::uint8_t>(x >> 8));
    out.push_back(static_cast<std::uint8_t>(x));
}

inline void put_u32_be(Bytes& out, std::uint32_t x) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(x >> s));
}

inline void put_u64_be(Bytes& out, std::uint64_t x) {
    for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(x >> s));
}

inline Bytes u64_be(std::uint64_t x) {
    Bytes out;
    put_u64_be(out, x);
    return out;
}

inline void append(Bytes& out, ByteSpan more) { out.insert(out.end(), more.begin(), more.end()); }

}  // namespace nfcpay
