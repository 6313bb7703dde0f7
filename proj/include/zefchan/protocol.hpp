#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zefchan/analysis.hpp"
#include "zefchan/codebook.hpp"
#include "zefchan/dmc.hpp"
#include "zefchan/errors.hpp"
#include "zefchan/rng.hpp"

namespace zefchan {

/// True iff `letter` occurs somewhere in `seq`.
inline bool contains_letter(std::span<const Symbol> seq, Symbol letter) {
    return std::find(seq.begin(), seq.end(), letter) != seq.end();
}

/// Verification block length: a fixed value, or max(1, ceil(log2 n)) under
/// the automatic rule.
class GammaSchedule {
  public:
    static GammaSchedule automatic() { return GammaSchedule(0); }
    static GammaSchedule fixed(std::size_t g) {
        if (g < 1) throw DegenerateConfig("gamma must be at least 1");
        return GammaSchedule(g);
    }

    bool is_auto() const { return fixed_ == 0; }
    std::size_t value_for(std::size_t n) const { return is_auto() ? gamma_auto(n) : fixed_; }
    std::size_t fixed_value() const { return fixed_; }

  private:
    explicit GammaSchedule(std::size_t g) : fixed_(g) {}
    std::size_t fixed_;  // 0 encodes the automatic rule
};

// --- message framing for the noisy scheme ---------------------------------
// A k-bit string b_1..b_k maps to message index (b_1 << (k-1)) | payload:
// b_1 (the most significant bit) carries the transmitter state, the
// remaining k-1 bits are payload.

inline Message compose_message(bool state_bit, std::uint64_t payload, std::size_t k) {
    return (static_cast<Message>(state_bit) << (k - 1)) | static_cast<Message>(payload);
}

inline bool message_state_bit(Message m, std::size_t k) { return (m >> (k - 1)) & 1; }

inline std::uint64_t message_payload(Message m, std::size_t k) {
    return m & ((Message{1} << (k - 1)) - 1);
}

/// One slotted round as seen by both parties: n forward uses, then the
/// indicator block (gamma backward uses in the noisy scheme, gamma more
/// forward uses in the noiseless scheme).
struct RoundRecord {
    std::size_t round_index = 0;  // 1-based within the current message
    Sequence forward_sent;
    Sequence forward_received;
    DecodeOutcome decode = DecodeOutcome::erasure();
    std::optional<bool> decoded_state_bit;  // noisy scheme, unique decodes only
    Sequence backward_sent;
    Sequence backward_received;
    bool tx_progressed = false;
    bool rx_committed = false;
};

namespace detail {

inline void require_positive_lambda_margin(const Codebook& code, const Dmc& ch) {
    // A message with lambda_m = 1 can never decode uniquely and would loop
    // forever. The check is exact (a sign test); if the output space is too
    // large to enumerate the round cap catches the problem at run time.
    try {
        for (Message m = 0; m < code.message_count(); ++m)
            if (!unique_decode_possible(code, ch, m))
                throw NonterminatingConfig("message " + std::to_string(m) + " can never decode uniquely");
    } catch (const BudgetExceeded&) {
    }
}

}  // namespace detail

// ===========================================================================
// Noiseless (complete) feedback
// ===========================================================================

/// Configuration of the complete-feedback scheme: codeword rounds over the
/// forward channel, followed by a gamma-block of the disprover letters x_c
/// (decode matched) or x_e (decode missed), also over the forward channel.
struct NoiselessSessionConfig {
    Dmc channel;
    Codebook code;
    GammaSchedule schedule;
    std::size_t gamma;
    DisproverTriple disprover;
    DisproverPolicy policy;

    static NoiselessSessionConfig make(Dmc channel, Codebook code, GammaSchedule schedule,
                                       DisproverPolicy policy = DisproverPolicy::First) {
        code.validate_against(channel);
        const auto disprover = pick_disprover(channel, policy);
        if (!disprover) throw NonterminatingConfig("channel has no disprover, indicator can never arrive");
        detail::require_positive_lambda_margin(code, channel);
        const std::size_t gamma = schedule.value_for(code.blocklength());
        return {std::move(channel), std::move(code), schedule, gamma, *disprover, policy};
    }
};

struct NoiselessRunResult {
    std::uint64_t rounds = 0;                // L: rounds including the successful one
    std::optional<Message> committed;        // what the receiver stored at the closing round
};

/// Runs one message to completion. Per round: send the codeword; both
/// parties apply the erasure decoder to the fed-back output block; the
/// transmitter then sends gamma copies of x_c when the decode matched m and
/// x_e otherwise. The round loop ends exactly when y_c shows up inside the
/// indicator block, which both parties observe thanks to perfect feedback.
inline NoiselessRunResult run_noiseless_message(const NoiselessSessionConfig& cfg, Message m, Rng& rng,
                                                std::uint64_t max_rounds = 1'000'000,
                                                std::vector<RoundRecord>* transcript = nullptr) {
    if (!(cfg.channel.w(cfg.disprover.x_c, cfg.disprover.y_c) > 0.0))
        throw NonterminatingConfig("W(y_c|x_c) = 0: the indicator can never arrive");
    const Sequence& cw = cfg.code.codeword(m);

    NoiselessRunResult result;
    for (std::uint64_t round = 1;; ++round) {
        if (round > max_rounds) throw RoundCapExceeded("message exceeded the round cap");
        const Sequence y = cfg.channel.transmit_block(cw, rng);
        const DecodeOutcome mhat = zue_decode(cfg.code, cfg.channel, y);
        const bool correct = !mhat.is_erasure() && mhat.message() == m;

        const Sequence indicator(cfg.gamma, correct ? cfg.disprover.x_c : cfg.disprover.x_e);
        const Sequence z = cfg.channel.transmit_block(indicator, rng);
        const bool done = contains_letter(z, cfg.disprover.y_c);

        if (transcript) {
            RoundRecord rec;
            rec.round_index = static_cast<std::size_t>(round);
            rec.forward_sent = cw;
            rec.forward_received = y;
            rec.decode = mhat;
            rec.backward_sent = indicator;
            rec.backward_received = z;
            rec.tx_progressed = done;
            rec.rx_committed = done;
            transcript->push_back(std::move(rec));
        }

        if (done) {
            // The receiver stores whatever it decoded; correctness is the
            // caller's measurement, not an assumption of the runner.
            result.rounds = round;
            if (!mhat.is_erasure()) result.committed = mhat.message();
            return result;
        }
    }
}

// ===========================================================================
// Noisy feedback
// ===========================================================================

/// Configuration of the synchronized noisy-feedback scheme. The codeword
/// alphabet is the forward channel's; the indicator letters x'_c / x'_e and
/// the confirming output y'_c live on the backward channel. Codewords
/// encode k-bit strings, so the codebook must have exactly 2^k entries.
struct NoisySessionConfig {
    Dmc forward;
    Dmc backward;
    Codebook code;
    std::size_t k;  // bits per codeword: 1 state bit + (k-1) payload bits
    GammaSchedule schedule;
    std::size_t gamma;
    DisproverTriple backward_disprover;
    DisproverPolicy policy;

    static NoisySessionConfig make(Dmc forward, Dmc backward, Codebook code, GammaSchedule schedule,
                                   DisproverPolicy policy = DisproverPolicy::First) {
        code.validate_against(forward);
        const std::size_t mcount = code.message_count();
        std::size_t k = 0;
        while ((std::size_t{1} << k) < mcount) ++k;
        // k = 1 is allowed: the codeword then carries only the state bit and
        // zero payload bits, which still exercises the full round structure.
        if ((std::size_t{1} << k) != mcount || k < 1)
            throw DegenerateConfig("noisy scheme needs 2^k codewords, k >= 1, with b_1 as the state bit");
        if (find_disprovers(forward).empty())
            throw NonterminatingConfig("forward channel has no disprover: no valid erasure-only code exists");
        const auto bd = pick_disprover(backward, policy);
        if (!bd) throw NonterminatingConfig("backward channel has no disprover, confirmation can never arrive");
        detail::require_positive_lambda_margin(code, forward);
        const std::size_t gamma = schedule.value_for(code.blocklength());
        return {std::move(forward), std::move(backward), std::move(code), k, schedule, gamma, *bd, policy};
    }

    std::uint64_t payload_count() const { return std::uint64_t{1} << (k - 1); }
};

enum class TxPhase { Transmit, Verify };

struct TxState {
    bool state_bit = false;       // s_t
    std::uint64_t payload = 0;    // current (k-1)-bit payload
    std::uint64_t rounds = 0;     // L so far for the current message
    TxPhase phase = TxPhase::Transmit;
};

struct RxState {
    bool state_bit = false;                 // s_r
    std::vector<std::uint64_t> committed;   // delivered payloads, in order
};

struct TxStepResult {
    TxState state;
    Sequence send;     // forward block to transmit (Transmit phase only)
    bool progressed;   // Verify phase: saw y'_c, ready for the next message
};

/// Transmitter transition. Transmit phase: encode (s_t, payload) and emit
/// the codeword (pass no backward outputs). Verify phase: consume the gamma
/// backward outputs; seeing y'_c means the receiver decoded uniquely, so
/// flip s_t and report progress, otherwise schedule a retransmission.
inline TxStepResult tx_step(const NoisySessionConfig& cfg, const TxState& st,
                            const std::optional<Sequence>& backward_outputs) {
    TxStepResult out{st, {}, false};
    if (st.phase == TxPhase::Transmit) {
        if (backward_outputs) throw PhaseMismatch("transmit phase takes no backward outputs");
        out.state.rounds += 1;
        out.state.phase = TxPhase::Verify;
        out.send = cfg.code.codeword(compose_message(st.state_bit, st.payload, cfg.k));
        return out;
    }
    if (!backward_outputs) throw PhaseMismatch("verify phase needs the backward outputs");
    if (backward_outputs->size() != cfg.gamma) throw LengthMismatch("verification block has wrong length");
    out.state.phase = TxPhase::Transmit;
    if (contains_letter(*backward_outputs, cfg.backward_disprover.y_c)) {
        out.state.state_bit = !st.state_bit;  // inform receiver about new message
        out.progressed = true;
    }
    return out;
}

/// Loads the next payload into a transmitter that just progressed.
inline void tx_load(TxState& st, std::uint64_t payload) {
    if (st.phase != TxPhase::Transmit) throw PhaseMismatch("can only load a message before a transmit phase");
    st.payload = payload;
    st.rounds = 0;
}

struct RxStepResult {
    RxState state;
    Sequence send;        // gamma-letter indicator block for the backward channel
    bool committed;       // a payload was stored this round
    DecodeOutcome decode;
    std::optional<bool> decoded_state_bit;
};

/// Receiver transition: apply the erasure decoder over the full codebook
/// (both state-bit values). On a unique decode whose state bit matches s_r,
/// store the payload and flip s_r; on any unique decode answer [x'_c]^gamma,
/// on an erasure answer [x'_e]^gamma.
inline RxStepResult rx_step(const NoisySessionConfig& cfg, const RxState& st, std::span<const Symbol> y_seq) {
    RxStepResult out{st, {}, false, DecodeOutcome::erasure(), std::nullopt};
    out.decode = zue_decode(cfg.code, cfg.forward, y_seq);
    if (!out.decode.is_erasure()) {
        const Message m = out.decode.message();
        const bool b1 = message_state_bit(m, cfg.k);
        out.decoded_state_bit = b1;
        if (b1 == st.state_bit) {
            out.state.committed.push_back(message_payload(m, cfg.k));
            out.state.state_bit = !st.state_bit;  // ready for a new message
            out.committed = true;
        }
        out.send = Sequence(cfg.gamma, cfg.backward_disprover.x_c);
    } else {
        out.send = Sequence(cfg.gamma, cfg.backward_disprover.x_e);
    }
    return out;
}

struct NoisyRunResult {
    std::uint64_t rounds = 0;
    std::optional<std::uint64_t> committed;  // payload the receiver stored
};

/// Runs a single message window from a synchronized start (s_t = s_r =
/// start_bit) until the transmitter progresses. Sessions are renewal
/// processes at message boundaries, so whole sessions are just these
/// windows chained with alternating start bits.
inline NoisyRunResult run_noisy_message(const NoisySessionConfig& cfg, std::uint64_t payload, bool start_bit,
                                        Rng& rng, std::uint64_t max_rounds = 1'000'000,
                                        std::vector<RoundRecord>* transcript = nullptr) {
    if (payload >= cfg.payload_count()) throw IndexOutOfRange("payload does not fit in k-1 bits");
    TxState tx{start_bit, payload, 0, TxPhase::Transmit};
    RxState rx{start_bit, {}};

    NoisyRunResult result;
    for (;;) {
        if (tx.rounds >= max_rounds) throw RoundCapExceeded("message exceeded the round cap");
        auto sent = tx_step(cfg, tx, std::nullopt);
        tx = sent.state;
        const Sequence y = cfg.forward.transmit_block(sent.send, rng);

        auto rcv = rx_step(cfg, rx, y);
        rx = rcv.state;
        const Sequence z = cfg.backward.transmit_block(rcv.send, rng);

        auto ver = tx_step(cfg, tx, z);
        tx = ver.state;

        if (transcript) {
            RoundRecord rec;
            rec.round_index = static_cast<std::size_t>(tx.rounds);
            rec.forward_sent = sent.send;
            rec.forward_received = y;
            rec.decode = rcv.decode;
            rec.decoded_state_bit = rcv.decoded_state_bit;
            rec.backward_sent = rcv.send;
            rec.backward_received = z;
            rec.tx_progressed = ver.progressed;
            rec.rx_committed = rcv.committed;
            transcript->push_back(std::move(rec));
        }

        if (ver.progressed) break;
    }

    result.rounds = tx.rounds;
    if (rx.committed.size() == 1) result.committed = rx.committed.front();
    return result;
}

struct SessionMessageStat {
    std::uint64_t payload = 0;
    std::uint64_t rounds = 0;
    std::uint64_t delay_uses = 0;  // (n + gamma) * rounds
};

struct NoisySessionResult {
    std::vector<SessionMessageStat> per_message;
    std::vector<std::uint64_t> committed;
};

/// Drives the slotted schedule over a payload list until every payload is
/// committed and acknowledged. The committed list must equal the payload
/// list exactly, in order, exactly once; anything else throws.
inline NoisySessionResult run_noisy_session(const NoisySessionConfig& cfg, std::span<const std::uint64_t> payloads,
                                            Rng& rng, std::uint64_t max_rounds = 1'000'000,
                                            std::vector<RoundRecord>* transcript = nullptr) {
    NoisySessionResult out;
    const std::uint64_t uses_per_round = cfg.code.blocklength() + cfg.gamma;
    bool bit = false;
    for (std::uint64_t payload : payloads) {
        const auto run = run_noisy_message(cfg, payload, bit, rng, max_rounds, transcript);
        if (!run.committed || *run.committed != payload)
            throw ProtocolViolation("committed payload differs from the transmitted one");
        out.per_message.push_back({payload, run.rounds, uses_per_round * run.rounds});
        out.committed.push_back(*run.committed);
        bit = !bit;
    }
    return out;
}

}  // namespace zefchan
