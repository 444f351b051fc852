#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nfcpay/errors.hpp"
#include "nfcpay/transcript.hpp"
#include "nfcpay/wire.hpp"

namespace nfcpay {

/// The two physical channels: the contactless tap between handset and
/// terminal, and the terminal's line to the network operator.
enum class LinkId { nfc, backhaul };

inline const char* to_string(LinkId l) { return l == LinkId::nfc ? "nfc" : "backhaul"; }

/// One hop of one message, labeled with the protocol message number so
/// transcripts and adversary hooks can address "message 4" directly.
struct HopInfo {
    int step = 0;
    LinkId link = LinkId::nfc;
    std::string from, to;
};

/// What an interposed adversary did to one hop. `deliver` empty means the
/// message was swallowed; any other value replaces the wire bytes. The
/// note lands verbatim in the transcript record.
struct TapDecision {
    std::optional<Bytes> deliver;
    std::string note;
};

/// Deterministic event world: a simulated clock that advances a fixed
/// amount per hop, two links with an up/down switch, an optional adversary
/// tap over the wire bytes, and the ordered transcript of everything that
/// happened. The adversary sees exactly what the wire carries — bytes —
/// and nothing else.
class World {
public:
    /// Tap contract: return std::nullopt to leave the hop untouched.
    using Tap = std::function<std::optional<TapDecision>(const HopInfo&, ByteSpan)>;

    explicit World(std::uint64_t hop_ms = 10) : hop_ms_(hop_ms) {}

    std::uint64_t now() const { return now_ms_; }

    /// Lets simulated time pass without traffic (e.g. past a freshness
    /// window). Recorded as a note so transcripts stay self-explanatory.
    void advance(std::uint64_t ms) {
        now_ms_ += ms;
        note("clock advanced by " + std::to_string(ms) + " ms");
    }

    void set_tap(Tap tap) { tap_ = std::move(tap); }

    bool link_up(LinkId link) const { return link == LinkId::nfc ? nfc_up_ : backhaul_up_; }

    void set_link(LinkId link, bool up) {
        (link == LinkId::nfc ? nfc_up_ : backhaul_up_) = up;
        TranscriptRecord r;
        r.seq = next_seq_++;
        r.kind = "link";
        r.time_ms = now_ms_;
        r.link = to_string(link);
        r.status = up ? "up" : "down";
        transcript_.push_back(std::move(r));
    }

    void note(std::string text) {
        TranscriptRecord r;
        r.seq = next_seq_++;
        r.kind = "note";
        r.time_ms = now_ms_;
        r.text = std::move(text);
        transcript_.push_back(std::move(r));
    }

    void header(std::string scenario, std::uint64_t seed, std::string mno_verifying_key_hex,
                std::map<std::string, std::string> shop_verifying_keys) {
        TranscriptRecord r;
        r.seq = next_seq_++;
        r.kind = "header";
        r.scenario = std::move(scenario);
        r.seed = seed;
        r.mno_verifying_key = std::move(mno_verifying_key_hex);
        r.shop_verifying_keys = std::move(shop_verifying_keys);
        transcript_.push_back(std::move(r));
    }

    void outcome(TranscriptRecord r) {
        r.seq = next_seq_++;
        r.kind = "outcome";
        r.time_ms = now_ms_;
        transcript_.push_back(std::move(r));
    }

    /// Carries one encoded message across a link. The tap (if any) may
    /// pass, rewrite or swallow it; whatever actually travels is recorded
    /// and returned. The clock ticks once per hop that carries bytes.
    std::optional<Bytes> deliver(const HopInfo& hop, Bytes bytes, std::string note = "") {
        if (!link_up(hop.link))
            throw PhaseError(std::string("delivery attempted on a downed link: ") +
                             to_string(hop.link));
        std::string adversary_note = std::move(note);
        std::optional<Bytes> delivered = std::move(bytes);
        if (tap_) {
            auto decision = tap_(hop, *delivered);
            if (decision) {
                delivered = std::move(decision->deliver);
                adversary_note = std::move(decision->note);
            }
        }
        if (!delivered) {
            TranscriptRecord r;
            r.seq = next_seq_++;
            r.kind = "note";
            r.time_ms = now_ms_;
            r.text = "dropped at step " + std::to_string(hop.step) + ": " + adversary_note;
            transcript_.push_back(std::move(r));
            return std::nullopt;
        }
        now_ms_ += hop_ms_;
        TranscriptRecord r;
        r.seq = next_seq_++;
        r.kind = "wire";
        r.time_ms = now_ms_;
        r.step = hop.step;
        r.link = to_string(hop.link);
        r.from = hop.from;
        r.to = hop.to;
        r.bytes = *delivered;
        auto decoded = decode(*delivered);
        r.summary = decoded.ok() ? summarize(decoded.value())
                                 : std::string("undecodable:") + to_string(decoded.error());
        r.adversary = adversary_note;
        transcript_.push_back(std::move(r));
        return delivered;
    }

    /// Convenience for honest hops: encode, deliver, decode. Returns the
    /// message as the receiver sees it (which the tap may have changed),
    /// or nothing if it was dropped or mangled beyond decoding.
    std::optional<Message> send(const HopInfo& hop, const Message& m) {
        auto delivered = deliver(hop, encode(m));
        if (!delivered) return std::nullopt;
        auto decoded = decode(*delivered);
        if (!decoded.ok()) return std::nullopt;
        return std::move(decoded).value();
    }

    const std::vector<TranscriptRecord>& transcript() const { return transcript_; }

    /// Appends another world's records (sub-run of the same scenario),
    /// renumbering so seq stays strictly increasing across the file.
    void absorb(const World& other) {
        for (TranscriptRecord r : other.transcript_) {
            r.seq = next_seq_++;
            transcript_.push_back(std::move(r));
        }
    }

private:
    std::uint64_t hop_ms_;
    std::uint64_t now_ms_ = 0;
    bool nfc_up_ = true;
    bool backhaul_up_ = true;
    std::uint64_t next_seq_ = 0;
    Tap tap_;
    std::vector<TranscriptRecord> transcript_;
};

}  // namespace nfcpay
