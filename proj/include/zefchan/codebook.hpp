#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "zefchan/dmc.hpp"
#include "zefchan/errors.hpp"
#include "zefchan/rng.hpp"

namespace zefchan {

using Message = std::size_t;

inline constexpr std::uint64_t kDefaultEnumBudget = 10'000'000;

/// Blocklength-n code: message m -> input sequence codeword(m).
class Codebook {
  public:
    Codebook(std::size_t n, std::vector<Sequence> codewords) : n_(n), codewords_(std::move(codewords)) {
        if (codewords_.empty()) throw InvalidCodebook("codebook needs at least one codeword");
        for (const auto& c : codewords_)
            if (c.size() != n_) throw LengthMismatch("codeword length differs from blocklength");
        if (codewords_.size() >= 2) {
            std::set<Sequence> distinct(codewords_.begin(), codewords_.end());
            if (distinct.size() != codewords_.size())
                throw InvalidCodebook("duplicate codewords give erasure probability 1");
        }
    }

    std::size_t blocklength() const { return n_; }
    std::size_t message_count() const { return codewords_.size(); }
    const Sequence& codeword(Message m) const {
        if (m >= codewords_.size()) throw IndexOutOfRange("message index out of range");
        return codewords_[m];
    }
    const std::vector<Sequence>& codewords() const { return codewords_; }

    void validate_against(const Dmc& ch) const {
        for (const auto& c : codewords_)
            for (Symbol s : c)
                if (s >= ch.input_size()) throw IndexOutOfRange("codeword symbol outside channel input alphabet");
    }

  private:
    std::size_t n_;
    std::vector<Sequence> codewords_;
};

/// Either a uniquely decoded message or the distinguished erasure value.
class DecodeOutcome {
  public:
    static DecodeOutcome erasure() { return DecodeOutcome(std::nullopt); }
    static DecodeOutcome unique(Message m) { return DecodeOutcome(m); }

    bool is_erasure() const { return !m_.has_value(); }
    Message message() const {
        if (!m_) throw Error("decode outcome is an erasure");
        return *m_;
    }

    friend bool operator==(const DecodeOutcome&, const DecodeOutcome&) = default;

  private:
    explicit DecodeOutcome(std::optional<Message> m) : m_(m) {}
    std::optional<Message> m_;
};

/// Messages whose codeword can produce y_seq: every position of the
/// codeword must reach the corresponding output with positive probability.
/// Per-position structural positivity is used rather than the length-n
/// product, so long blocks cannot underflow to a false zero.
inline std::vector<Message> probable_messages(const Codebook& code, const Dmc& ch, std::span<const Symbol> y_seq) {
    if (y_seq.size() != code.blocklength()) throw LengthMismatch("output sequence length differs from blocklength");
    std::vector<Message> out;
    for (Message m = 0; m < code.message_count(); ++m) {
        const Sequence& c = code.codeword(m);
        bool compatible = true;
        for (std::size_t j = 0; j < c.size(); ++j)
            if (!(ch.w(c[j], y_seq[j]) > 0.0)) {
                compatible = false;
                break;
            }
        if (compatible) out.push_back(m);
    }
    return out;
}

/// The zero-undetected-error decoder: the unique probable message, or
/// erasure when several remain. An empty probable set cannot arise from an
/// honestly sampled output and is flagged as simulator corruption.
inline DecodeOutcome zue_decode(const Codebook& code, const Dmc& ch, std::span<const Symbol> y_seq) {
    if (y_seq.size() != code.blocklength()) throw LengthMismatch("output sequence length differs from blocklength");
    std::size_t hits = 0;
    Message first = 0;
    for (Message m = 0; m < code.message_count(); ++m) {
        const Sequence& c = code.codeword(m);
        bool compatible = true;
        for (std::size_t j = 0; j < c.size(); ++j)
            if (!(ch.w(c[j], y_seq[j]) > 0.0)) {
                compatible = false;
                break;
            }
        if (compatible) {
            if (++hits == 1)
                first = m;
            else
                return DecodeOutcome::erasure();
        }
    }
    if (hits == 0) throw ImpossibleOutput("no codeword can produce this output sequence");
    return DecodeOutcome::unique(first);
}

namespace detail {

inline bool pow_within(std::uint64_t base, std::uint64_t exp, std::uint64_t limit) {
    std::uint64_t v = 1;
    for (std::uint64_t i = 0; i < exp; ++i) {
        if (base != 0 && v > limit / base) return false;
        v *= base;
        if (v > limit) return false;
    }
    return true;
}

/// base^exp, or nullopt when it exceeds limit.
inline std::optional<std::uint64_t> checked_pow(std::uint64_t base, std::uint64_t exp, std::uint64_t limit) {
    if (!pow_within(base, exp, limit)) return std::nullopt;
    std::uint64_t v = 1;
    for (std::uint64_t i = 0; i < exp; ++i) v *= base;
    return v;
}

// Fixed-width bitmask over messages.
struct MsgMask {
    std::vector<std::uint64_t> words;

    static MsgMask all(std::size_t count) {
        MsgMask m;
        m.words.assign((count + 63) / 64, ~0ull);
        if (count % 64) m.words.back() = (1ull << (count % 64)) - 1;
        return m;
    }
    static MsgMask none(std::size_t count) {
        MsgMask m;
        m.words.assign((count + 63) / 64, 0ull);
        return m;
    }
    void set(std::size_t i) { words[i / 64] |= 1ull << (i % 64); }
    void intersect_into(const MsgMask& other, MsgMask& out) const {
        for (std::size_t i = 0; i < words.size(); ++i) out.words[i] = words[i] & other.words[i];
    }
    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }
};

// compat[pos][y] = mask of messages whose codeword can emit y at pos.
inline std::vector<std::vector<MsgMask>> build_compat_table(const Codebook& code, const Dmc& ch) {
    const std::size_t n = code.blocklength(), ny = ch.output_size();
    std::vector<std::vector<MsgMask>> table(n, std::vector<MsgMask>(ny, MsgMask::none(code.message_count())));
    for (Message m = 0; m < code.message_count(); ++m) {
        const Sequence& c = code.codeword(m);
        for (std::size_t pos = 0; pos < n; ++pos)
            for (Symbol y = 0; y < ny; ++y)
                if (ch.w(c[pos], y) > 0.0) table[pos][y].set(m);
    }
    return table;
}

}  // namespace detail

/// Exact erasure probability for message m: the total probability of output
/// sequences from codeword(m) whose probable set has more than one element.
/// Enumerates the output space depth-first; a branch whose probable set has
/// already shrunk to {m} decodes uniquely on every completion and is pruned.
inline double erasure_prob_exact(const Codebook& code, const Dmc& ch, Message m,
                                 std::uint64_t budget = kDefaultEnumBudget) {
    code.validate_against(ch);
    if (m >= code.message_count()) throw IndexOutOfRange("message index out of range");
    const std::size_t n = code.blocklength();
    if (!detail::pow_within(ch.output_size(), n, budget))
        throw BudgetExceeded("|Y|^n exceeds the enumeration budget");

    const auto compat = detail::build_compat_table(code, ch);
    const Sequence& cm = code.codeword(m);
    std::vector<detail::MsgMask> scratch(n + 1, detail::MsgMask::none(code.message_count()));
    scratch[0] = detail::MsgMask::all(code.message_count());

    const auto recurse = [&](auto&& self, std::size_t pos, double prob) -> double {
        if (scratch[pos].count() == 1) return 0.0;  // unique decode on every completion
        if (pos == n) return prob;
        double sum = 0.0;
        for (Symbol y = 0; y < ch.output_size(); ++y) {
            const double wy = ch.w(cm[pos], y);
            if (!(wy > 0.0)) continue;
            scratch[pos].intersect_into(compat[pos][y], scratch[pos + 1]);
            sum += self(self, pos + 1, prob * wy);
        }
        return sum;
    };
    return recurse(recurse, 0, 1.0);
}

/// True iff some positive-probability output decodes uniquely for m, i.e.
/// lambda_m < 1. Exact sign test, no floating-point accumulation.
inline bool unique_decode_possible(const Codebook& code, const Dmc& ch, Message m,
                                   std::uint64_t budget = kDefaultEnumBudget) {
    code.validate_against(ch);
    if (m >= code.message_count()) throw IndexOutOfRange("message index out of range");
    const std::size_t n = code.blocklength();
    if (!detail::pow_within(ch.output_size(), n, budget))
        throw BudgetExceeded("|Y|^n exceeds the enumeration budget");

    const auto compat = detail::build_compat_table(code, ch);
    const Sequence& cm = code.codeword(m);
    std::vector<detail::MsgMask> scratch(n + 1, detail::MsgMask::none(code.message_count()));
    scratch[0] = detail::MsgMask::all(code.message_count());

    const auto recurse = [&](auto&& self, std::size_t pos) -> bool {
        if (scratch[pos].count() == 1) return true;
        if (pos == n) return false;
        for (Symbol y = 0; y < ch.output_size(); ++y) {
            if (!(ch.w(cm[pos], y) > 0.0)) continue;
            scratch[pos].intersect_into(compat[pos][y], scratch[pos + 1]);
            if (self(self, pos + 1)) return true;
        }
        return false;
    };
    return recurse(recurse, 0);
}

/// Monte Carlo estimate of lambda_m; deterministic for a fixed seed.
inline double erasure_prob_mc(const Codebook& code, const Dmc& ch, Message m, std::uint64_t samples,
                              std::uint64_t seed) {
    code.validate_against(ch);
    if (m >= code.message_count()) throw IndexOutOfRange("message index out of range");
    if (samples == 0) throw DegenerateSamples("need at least one sample");
    Rng rng(seed);
    const Sequence& cm = code.codeword(m);
    std::uint64_t erasures = 0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const Sequence y = ch.transmit_block(cm, rng);
        if (zue_decode(code, ch, y).is_erasure()) ++erasures;
    }
    return static_cast<double>(erasures) / static_cast<double>(samples);
}

/// Per-message erasure probabilities and how they were obtained.
struct CodeQuality {
    enum class Method { Exact, MonteCarlo };

    std::vector<double> lambda;
    double max_lambda = 0.0;
    Method method = Method::Exact;
    std::uint64_t mc_samples = 0;
    std::uint64_t mc_seed = 0;
};

inline CodeQuality evaluate_exact(const Codebook& code, const Dmc& ch, std::uint64_t budget = kDefaultEnumBudget) {
    CodeQuality q;
    q.method = CodeQuality::Method::Exact;
    for (Message m = 0; m < code.message_count(); ++m) {
        q.lambda.push_back(erasure_prob_exact(code, ch, m, budget));
        q.max_lambda = std::max(q.max_lambda, q.lambda.back());
    }
    return q;
}

/// Per-message substreams keep the estimate independent of evaluation order.
inline CodeQuality evaluate_mc(const Codebook& code, const Dmc& ch, std::uint64_t samples, std::uint64_t seed) {
    CodeQuality q;
    q.method = CodeQuality::Method::MonteCarlo;
    q.mc_samples = samples;
    q.mc_seed = seed;
    for (Message m = 0; m < code.message_count(); ++m) {
        q.lambda.push_back(erasure_prob_mc(code, ch, m, samples, Rng::derive_stream(seed, m)));
        q.max_lambda = std::max(q.max_lambda, q.lambda.back());
    }
    return q;
}

enum class SearchStrategy { Exhaustive, Greedy, Random };

struct SearchResult {
    Codebook code;
    CodeQuality quality;
};

namespace detail {

inline Sequence index_to_codeword(std::uint64_t idx, std::size_t n, std::size_t alphabet) {
    Sequence c(n);
    for (std::size_t j = n; j-- > 0;) {
        c[j] = static_cast<Symbol>(idx % alphabet);
        idx /= alphabet;
    }
    return c;  // most-significant digit first: index order == lexicographic order
}

inline bool code_is_valid(const Codebook& code, const Dmc& ch, std::uint64_t budget) {
    for (Message m = 0; m < code.message_count(); ++m)
        if (!unique_decode_possible(code, ch, m, budget)) return false;
    return true;
}

inline double code_max_lambda(const Codebook& code, const Dmc& ch, std::uint64_t budget) {
    double mx = 0.0;
    for (Message m = 0; m < code.message_count(); ++m) mx = std::max(mx, erasure_prob_exact(code, ch, m, budget));
    return mx;
}

}  // namespace detail

/// Searches for an m_count-codeword code minimizing the worst-case erasure
/// probability. Codes where some message can never decode uniquely
/// (lambda_m = 1) are rejected outright: the retransmission protocols would
/// loop forever on them.
///
/// - Exhaustive enumerates codeword combinations in lexicographic order and
///   is permitted only when |X|^(n*m_count) fits the budget.
/// - Greedy adds one codeword at a time, minimizing the incremental
///   max-lambda; ties go to the lexicographically smallest codeword.
/// - Random keeps the best of `budget` seeded draws of distinct codewords.
inline SearchResult search_code(const Dmc& ch, std::size_t n, std::size_t m_count, SearchStrategy strategy,
                                std::uint64_t budget, std::uint64_t seed = 0,
                                std::uint64_t eval_budget = kDefaultEnumBudget) {
    if (n == 0) throw InvalidCodebook("blocklength must be positive");
    if (m_count == 0) throw NoValidCode("need at least one message");
    const std::size_t nx = ch.input_size();

    std::uint64_t space = 1;
    bool space_overflow = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (space > std::numeric_limits<std::uint64_t>::max() / nx) {
            space_overflow = true;
            break;
        }
        space *= nx;
    }
    if (space_overflow) throw BudgetExceeded("codeword space |X|^n does not fit in 64 bits");
    if (m_count > space) throw NoValidCode("m_count exceeds the number of distinct codewords");

    const auto make_code = [&](const std::vector<std::uint64_t>& idxs) {
        std::vector<Sequence> cws;
        cws.reserve(idxs.size());
        for (auto i : idxs) cws.push_back(detail::index_to_codeword(i, n, nx));
        return Codebook(n, std::move(cws));
    };

    std::optional<Codebook> best;
    double best_lambda = 2.0;

    switch (strategy) {
        case SearchStrategy::Exhaustive: {
            if (!detail::pow_within(nx, n * m_count, budget))
                throw BudgetExceeded("|X|^(n*m_count) exceeds the search budget");
            std::vector<std::uint64_t> idxs(m_count);
            for (std::size_t i = 0; i < m_count; ++i) idxs[i] = i;
            while (true) {
                Codebook cand = make_code(idxs);
                if (detail::code_is_valid(cand, ch, eval_budget)) {
                    const double ml = detail::code_max_lambda(cand, ch, eval_budget);
                    if (ml < best_lambda) {  // strict: first (lexicographic) combination wins ties
                        best_lambda = ml;
                        best = std::move(cand);
                    }
                }
                // next combination of distinct indices in increasing order
                bool advanced = false;
                for (std::size_t i = m_count; i-- > 0;) {
                    if (idxs[i] + 1 <= space - (m_count - i)) {
                        ++idxs[i];
                        for (std::size_t j = i + 1; j < m_count; ++j) idxs[j] = idxs[j - 1] + 1;
                        advanced = true;
                        break;
                    }
                }
                if (!advanced) break;
            }
            break;
        }
        case SearchStrategy::Greedy: {
            std::vector<std::uint64_t> chosen;
            for (std::size_t step = 0; step < m_count; ++step) {
                std::optional<std::uint64_t> pick;
                double pick_lambda = 2.0;
                for (std::uint64_t cand = 0; cand < space; ++cand) {
                    if (std::find(chosen.begin(), chosen.end(), cand) != chosen.end()) continue;
                    std::vector<std::uint64_t> trial = chosen;
                    trial.push_back(cand);
                    Codebook c = make_code(trial);
                    if (!detail::code_is_valid(c, ch, eval_budget)) continue;
                    const double ml = detail::code_max_lambda(c, ch, eval_budget);
                    if (ml < pick_lambda) {  // strict: lexicographically smallest wins ties
                        pick_lambda = ml;
                        pick = cand;
                    }
                }
                if (!pick) throw NoValidCode("every extension leaves some message undecodable");
                chosen.push_back(*pick);
            }
            std::sort(chosen.begin(), chosen.end());
            Codebook c = make_code(chosen);
            best_lambda = detail::code_max_lambda(c, ch, eval_budget);
            best = std::move(c);
            break;
        }
        case SearchStrategy::Random: {
            if (budget == 0) throw BudgetExceeded("random search needs a positive draw budget");
            Rng rng(seed);
            for (std::uint64_t draw = 0; draw < budget; ++draw) {
                std::set<std::uint64_t> picked;
                while (picked.size() < m_count) picked.insert(rng.below(space));
                std::vector<std::uint64_t> idxs(picked.begin(), picked.end());
                Codebook cand = make_code(idxs);
                if (!detail::code_is_valid(cand, ch, eval_budget)) continue;
                const double ml = detail::code_max_lambda(cand, ch, eval_budget);
                if (ml < best_lambda) {
                    best_lambda = ml;
                    best = std::move(cand);
                }
            }
            break;
        }
    }

    if (!best) throw NoValidCode("no candidate code decodes every message with positive probability");
    return {*best, evaluate_exact(*best, ch, eval_budget)};
}

}  // namespace zefchan
