#pragma once

#include <string_view>

#include "nfcpay/bytes.hpp"

namespace nfcpay {

/// Observer the harness installs to learn which party ever holds which key
/// or secret. Parties report material as they acquire it; the registry
/// backs the key-confinement and wire-leak assertions.
class KeyObserver {
public:
    virtual ~KeyObserver() = default;
    virtual void note_key(std::string_view party, std::string_view label, ByteSpan bytes) = 0;
};

}  // namespace nfcpay
