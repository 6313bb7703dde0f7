#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "zefchan/analysis.hpp"
#include "zefchan/protocol.hpp"

namespace zefchan {

using SessionConfig = std::variant<NoiselessSessionConfig, NoisySessionConfig>;

struct PerMessageStat {
    std::uint64_t payload = 0;
    std::uint64_t rounds = 0;
    std::uint64_t delay_uses = 0;
    bool committed_ok = false;
};

struct SimStats {
    std::uint64_t messages_sent = 0;
    std::uint64_t undetected_errors = 0;  // committed values differing from what was sent; must stay 0
    std::vector<PerMessageStat> per_message;
    double mean_rounds = 0.0;
    double rounds_stddev = 0.0;
    double mean_delay_uses = 0.0;
    std::uint64_t total_channel_uses = 0;
    double total_payload_bits = 0.0;
    double empirical_rate = 0.0;           // payload bits / channel use (state bit excluded)
    double empirical_rate_codebits = 0.0;  // log2|M| bits / channel use (state bit included)
    std::uint64_t seed = 0;
};

/// Streams one round record at a time; forces a serial in-order run.
using TranscriptSink = std::function<void(std::uint64_t msg_index, const RoundRecord&)>;

namespace detail {

inline std::size_t resolve_worker_count(std::size_t requested, std::uint64_t work_items) {
    std::size_t n = requested;
    if (n == 0) {
        if (const char* env = std::getenv("ZEFCHAN_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0) n = static_cast<std::size_t>(v);
        }
        if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    }
    if (work_items < n) n = static_cast<std::size_t>(work_items ? work_items : 1);
    return n;
}

}  // namespace detail

/// Runs the configured protocol on num_messages random payloads, one
/// substream per message, so the result is bit-identical for a given seed
/// no matter how many workers execute it. Noisy-scheme message windows are
/// renewal points, which is what makes per-message independence exact.
inline SimStats monte_carlo(const SessionConfig& cfg, std::uint64_t num_messages, std::uint64_t seed,
                            std::uint64_t max_rounds_per_message = 1'000'000, const TranscriptSink& sink = nullptr,
                            std::size_t threads = 0) {
    SimStats stats;
    stats.seed = seed;
    stats.messages_sent = num_messages;
    stats.per_message.resize(num_messages);
    if (num_messages == 0) return stats;

    double payload_bits_per_msg = 0.0;
    double code_bits_per_msg = 0.0;
    std::uint64_t uses_per_round = 0;

    std::function<void(std::uint64_t, std::vector<RoundRecord>*)> run_one;
    if (const auto* noiseless = std::get_if<NoiselessSessionConfig>(&cfg)) {
        payload_bits_per_msg = std::log2(static_cast<double>(noiseless->code.message_count()));
        code_bits_per_msg = payload_bits_per_msg;
        uses_per_round = noiseless->code.blocklength() + noiseless->gamma;
        run_one = [&, noiseless](std::uint64_t i, std::vector<RoundRecord>* tr) {
            Rng rng(Rng::derive_stream(seed, i));
            const Message m = rng.below(noiseless->code.message_count());
            const auto run = run_noiseless_message(*noiseless, m, rng, max_rounds_per_message, tr);
            auto& slot = stats.per_message[i];
            slot.payload = m;
            slot.rounds = run.rounds;
            slot.delay_uses = uses_per_round * run.rounds;
            slot.committed_ok = run.committed.has_value() && *run.committed == m;
        };
    } else {
        const auto& noisy = std::get<NoisySessionConfig>(cfg);
        payload_bits_per_msg = static_cast<double>(noisy.k - 1);
        code_bits_per_msg = static_cast<double>(noisy.k);
        uses_per_round = noisy.code.blocklength() + noisy.gamma;
        run_one = [&, &noisy = noisy](std::uint64_t i, std::vector<RoundRecord>* tr) {
            Rng rng(Rng::derive_stream(seed, i));
            const std::uint64_t payload = rng.below(noisy.payload_count());
            const bool start_bit = (i & 1) != 0;  // session parity
            const auto run = run_noisy_message(noisy, payload, start_bit, rng, max_rounds_per_message, tr);
            auto& slot = stats.per_message[i];
            slot.payload = payload;
            slot.rounds = run.rounds;
            slot.delay_uses = uses_per_round * run.rounds;
            slot.committed_ok = run.committed.has_value() && *run.committed == payload;
        };
    }

    if (sink) {
        std::vector<RoundRecord> transcript;
        for (std::uint64_t i = 0; i < num_messages; ++i) {
            transcript.clear();
            run_one(i, &transcript);
            for (const auto& rec : transcript) sink(i, rec);
        }
    } else {
        const std::size_t workers = detail::resolve_worker_count(threads, num_messages);
        if (workers <= 1) {
            for (std::uint64_t i = 0; i < num_messages; ++i) run_one(i, nullptr);
        } else {
            std::vector<std::thread> pool;
            const std::uint64_t chunk = (num_messages + workers - 1) / workers;
            for (std::size_t t = 0; t < workers; ++t) {
                const std::uint64_t lo = t * chunk;
                const std::uint64_t hi = std::min(num_messages, lo + chunk);
                if (lo >= hi) break;
                pool.emplace_back([&, lo, hi] {
                    for (std::uint64_t i = lo; i < hi; ++i) run_one(i, nullptr);
                });
            }
            for (auto& th : pool) th.join();
        }
    }

    double sum_rounds = 0.0, sum_sq = 0.0;
    for (const auto& pm : stats.per_message) {
        sum_rounds += static_cast<double>(pm.rounds);
        sum_sq += static_cast<double>(pm.rounds) * static_cast<double>(pm.rounds);
        stats.total_channel_uses += pm.delay_uses;
        if (!pm.committed_ok) ++stats.undetected_errors;
    }
    const double n = static_cast<double>(num_messages);
    stats.mean_rounds = sum_rounds / n;
    stats.rounds_stddev = std::sqrt(std::max(0.0, sum_sq / n - stats.mean_rounds * stats.mean_rounds));
    stats.mean_delay_uses = static_cast<double>(stats.total_channel_uses) / n;
    stats.total_payload_bits = payload_bits_per_msg * n;
    stats.empirical_rate = stats.total_payload_bits / static_cast<double>(stats.total_channel_uses);
    stats.empirical_rate_codebits = code_bits_per_msg * n / static_cast<double>(stats.total_channel_uses);
    return stats;
}

// ===========================================================================
// Bounded exhaustive exploration
// ===========================================================================

struct ExploreViolation {
    std::string kind;    // "zero-error", "exactly-once", "state-sync", "liveness", "integrity"
    std::string detail;
    std::vector<RoundRecord> transcript;
};

struct ExploreReport {
    std::size_t depth = 0;          // rounds explored per branch
    std::uint64_t executions = 0;   // maximal branches examined
    std::vector<ExploreViolation> violations;
    bool liveness_ok = true;
};

/// Receiver behavior hook; tests inject deliberately broken receivers to
/// prove the explorer can catch them.
using RxStepFn = std::function<RxStepResult(const NoisySessionConfig&, const RxState&, std::span<const Symbol>)>;

namespace detail {

// Every output sequence the channel can produce from x_seq with positive
// probability, in lexicographic order.
template <typename Fn>
void for_each_support_sequence(const Dmc& ch, const Sequence& x_seq, Sequence& buf, std::size_t pos, Fn&& fn) {
    if (pos == x_seq.size()) {
        fn(buf);
        return;
    }
    for (Symbol y = 0; y < ch.output_size(); ++y) {
        if (!(ch.w(x_seq[pos], y) > 0.0)) continue;
        buf[pos] = y;
        for_each_support_sequence(ch, x_seq, buf, pos + 1, fn);
    }
}

struct ExploreFrame {
    std::uint64_t msg_idx = 0;  // message the transmitter is working on
    TxState tx;
    RxState rx;
};

}  // namespace detail

/// Enumerates every positive-probability joint realization of the session
/// for up to max_rounds rounds and checks, on every branch: committed
/// payloads are exactly the transmitted prefix (zero error, exactly once,
/// in order), the state bits differ exactly while a commit awaits its
/// acknowledgment, the confirming letter never arrives out of an [x'_e]^g
/// block, and the transmitter progresses whenever a unique decode's
/// confirmation gets through (bounded liveness).
inline ExploreReport explore_exhaustive(const NoisySessionConfig& cfg, std::span<const std::uint64_t> payloads,
                                        std::size_t max_rounds, std::uint64_t budget = 100'000'000,
                                        const RxStepFn& rx_fn = nullptr, std::size_t max_violations = 32) {
    const std::size_t n = cfg.code.blocklength();
    const auto bf = detail::checked_pow(cfg.forward.output_size(), n, budget);
    const auto bb = detail::checked_pow(cfg.backward.output_size(), cfg.gamma, budget);
    const bool per_round_fits = bf && bb && *bf <= budget / *bb;
    if (!per_round_fits || !detail::pow_within(*bf * *bb, max_rounds, budget))
        throw BudgetExceeded("(|Y_f|^n * |Y_b|^gamma)^max_rounds exceeds the exploration budget");

    for (std::uint64_t p : payloads)
        if (p >= cfg.payload_count()) throw IndexOutOfRange("payload does not fit in k-1 bits");

    const RxStepFn canonical = [](const NoisySessionConfig& c, const RxState& s, std::span<const Symbol> y) {
        return rx_step(c, s, y);
    };
    const RxStepFn& rx_transition = rx_fn ? rx_fn : canonical;

    ExploreReport report;
    report.depth = max_rounds;
    std::vector<RoundRecord> path;

    const auto record_violation = [&](const std::string& kind, const std::string& detail_msg) {
        if (report.violations.size() < max_violations) report.violations.push_back({kind, detail_msg, path});
    };

    const std::function<void(detail::ExploreFrame, std::size_t)> dfs = [&](detail::ExploreFrame fr,
                                                                           std::size_t round) {
        if (fr.msg_idx == payloads.size() || round == max_rounds) {
            ++report.executions;
            if (fr.msg_idx == payloads.size() && fr.rx.committed.size() != payloads.size())
                record_violation("zero-error", "session ended with an incomplete committed list");
            return;
        }

        auto sent = tx_step(cfg, fr.tx, std::nullopt);
        Sequence ybuf(n);
        detail::for_each_support_sequence(cfg.forward, sent.send, ybuf, 0, [&](const Sequence& y) {
            auto rcv = rx_transition(cfg, fr.rx, y);

            Sequence zbuf(cfg.gamma);
            detail::for_each_support_sequence(cfg.backward, rcv.send, zbuf, 0, [&](const Sequence& z) {
                auto ver = tx_step(cfg, sent.state, z);

                detail::ExploreFrame next;
                next.msg_idx = fr.msg_idx + (ver.progressed ? 1 : 0);
                next.tx = ver.state;
                next.rx = rcv.state;
                if (ver.progressed && next.msg_idx < payloads.size()) tx_load(next.tx, payloads[next.msg_idx]);

                RoundRecord rec;
                rec.round_index = static_cast<std::size_t>(sent.state.rounds);
                rec.forward_sent = sent.send;
                rec.forward_received = y;
                rec.decode = rcv.decode;
                rec.decoded_state_bit = rcv.decoded_state_bit;
                rec.backward_sent = rcv.send;
                rec.backward_received = z;
                rec.tx_progressed = ver.progressed;
                rec.rx_committed = rcv.committed;
                path.push_back(std::move(rec));

                bool broken = false;
                const auto& committed = next.rx.committed;

                // sampling soundness: x'_e blocks cannot deliver y'_c
                if (!broken && rcv.send == Sequence(cfg.gamma, cfg.backward_disprover.x_e) &&
                    contains_letter(z, cfg.backward_disprover.y_c)) {
                    record_violation("integrity", "y'_c appeared in an [x'_e]^gamma block");
                    broken = true;
                }

                // exactly once / in order / zero error
                if (!broken && rcv.committed) {
                    if (committed.size() > payloads.size() || committed.size() > fr.msg_idx + 1) {
                        record_violation("exactly-once", "a payload was committed more than once");
                        broken = true;
                    } else if (committed.back() != payloads[committed.size() - 1]) {
                        record_violation("zero-error", "committed payload differs from the transmitted one");
                        broken = true;
                    }
                }

                // state bits differ exactly while a commit awaits its ack
                if (!broken) {
                    const bool pending = committed.size() > next.msg_idx;
                    const bool bits_differ = next.tx.state_bit != next.rx.state_bit;
                    if (bits_differ != pending) {
                        record_violation("state-sync", "s_t/s_r window does not match the pending commit");
                        broken = true;
                    }
                }

                // bounded liveness: confirmation of a unique decode must move the transmitter
                if (!rcv.decode.is_erasure() && contains_letter(z, cfg.backward_disprover.y_c) && !ver.progressed) {
                    record_violation("liveness", "transmitter ignored a delivered confirmation");
                    report.liveness_ok = false;
                    broken = true;
                }

                if (broken)
                    ++report.executions;  // violating branch is pruned
                else
                    dfs(next, round + 1);
                path.pop_back();
            });
        });
    };

    detail::ExploreFrame root;
    root.tx = TxState{false, payloads.empty() ? 0 : payloads[0], 0, TxPhase::Transmit};
    root.rx = RxState{false, {}};
    dfs(root, 0);
    return report;
}

// ===========================================================================
// Geometric goodness of fit
// ===========================================================================

namespace detail {

/// Regularized lower incomplete gamma P(a, x); series for x < a+1,
/// continued fraction otherwise.
inline double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 1000; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

inline double chi2_cdf(double x, std::size_t dof) { return gamma_p(static_cast<double>(dof) / 2.0, x / 2.0); }

inline double chi2_quantile(double prob, std::size_t dof) {
    double lo = 0.0, hi = 1.0;
    while (chi2_cdf(hi, dof) < prob) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (chi2_cdf(mid, dof) < prob ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

struct GeometricFit {
    bool pass = false;
    double statistic = 0.0;
    double critical = 0.0;
    std::size_t dof = 0;
};

/// Chi-square goodness of fit of round counts against Geometric(p) on
/// {1, 2, ...}: singleton bins while their expected count stays >= 5, then
/// one pooled tail bin. Degrees of freedom = bins - 1 (p is given, not
/// estimated).
inline GeometricFit geometric_fit(std::span<const std::uint64_t> samples, double p, double alpha) {
    if (samples.empty()) throw DegenerateSamples("no samples");
    if (!(p > 0.0) || p > 1.0) throw DegenerateConfig("p must lie in (0,1]");
    if (!(alpha > 0.0) || !(alpha < 1.0)) throw DegenerateConfig("alpha must lie in (0,1)");
    for (auto s : samples)
        if (s < 1) throw DegenerateSamples("geometric samples start at 1");

    const double n = static_cast<double>(samples.size());
    if (p == 1.0) {
        bool all_ones = true;
        for (auto s : samples)
            if (s != 1) {
                all_ones = false;
                break;
            }
        return {all_ones, all_ones ? 0.0 : std::numeric_limits<double>::infinity(), 0.0, 0};
    }

    // Split bins {K} off the tail while both keep expected counts >= 5.
    std::size_t tail_start = 1;
    while (true) {
        const double bin_k = n * p * std::pow(1.0 - p, static_cast<double>(tail_start) - 1.0);
        const double tail_rest = n * std::pow(1.0 - p, static_cast<double>(tail_start));
        if (bin_k < 5.0 || tail_rest < 5.0) break;
        ++tail_start;
    }
    if (tail_start < 2) throw DegenerateSamples("too few samples to form chi-square bins");

    std::vector<double> observed(tail_start, 0.0);  // [0..tail_start-2] singles, last = tail
    for (auto s : samples) {
        if (s < tail_start)
            observed[s - 1] += 1.0;
        else
            observed[tail_start - 1] += 1.0;
    }
    double statistic = 0.0;
    for (std::size_t k = 1; k < tail_start; ++k) {
        const double expected = n * p * std::pow(1.0 - p, static_cast<double>(k) - 1.0);
        const double diff = observed[k - 1] - expected;
        statistic += diff * diff / expected;
    }
    const double tail_expected = n * std::pow(1.0 - p, static_cast<double>(tail_start) - 1.0);
    const double tail_diff = observed[tail_start - 1] - tail_expected;
    statistic += tail_diff * tail_diff / tail_expected;

    GeometricFit fit;
    fit.dof = tail_start - 1;
    fit.statistic = statistic;
    fit.critical = detail::chi2_quantile(1.0 - alpha, fit.dof);
    fit.pass = statistic <= fit.critical;
    return fit;
}

}  // namespace zefchan
