#pragma once

#include <stdexcept>

namespace nfcpay {

/// An operation was invoked in a protocol phase that does not admit it.
struct PhaseError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Lookup of a session, subscriber, shop or network that was never registered.
struct UnknownIdentity : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DuplicateIdentity : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace nfcpay
