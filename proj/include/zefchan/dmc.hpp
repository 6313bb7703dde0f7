#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "zefchan/errors.hpp"
#include "zefchan/rng.hpp"

namespace zefchan {

using Symbol = std::size_t;
using Sequence = std::vector<Symbol>;

inline constexpr double kRowSumTol = 1e-12;
inline constexpr double kDefaultSupportEps = 1e-9;
inline constexpr double kDefaultDecompTol = 1e-9;

/// Discrete memoryless channel given by a row-stochastic transition table.
///
/// An entry equal to literal 0 is a structural zero: the output is exactly
/// impossible from that input, never merely improbable. All positivity
/// tests in this library are strict `> 0` comparisons with no epsilon; only
/// the row-sum validation carries a tolerance.
class Dmc {
  public:
    /// Validates a transition table and builds the channel.
    static Dmc validate(std::vector<std::vector<double>> rows) {
        if (rows.empty() || rows.front().empty()) throw EmptyTable("channel table must be at least 1x1");
        const std::size_t ny = rows.front().size();
        for (const auto& r : rows) {
            if (r.size() != ny) throw MalformedTable("channel table is not rectangular");
        }
        for (std::size_t x = 0; x < rows.size(); ++x)
            for (double e : rows[x])
                if (!(e >= 0.0)) throw NegativeEntry("entry W(y|x) negative or NaN at row " + std::to_string(x));
        std::vector<double> w;
        w.reserve(rows.size() * ny);
        for (std::size_t x = 0; x < rows.size(); ++x) {
            double sum = 0.0;
            for (double e : rows[x]) {
                if (e > 1.0 + kRowSumTol) throw NonStochasticRow("entry exceeds 1 in row " + std::to_string(x));
                sum += e;
            }
            if (std::abs(sum - 1.0) > kRowSumTol)
                throw NonStochasticRow("row " + std::to_string(x) + " sums to " + std::to_string(sum));
            w.insert(w.end(), rows[x].begin(), rows[x].end());
        }
        return Dmc(rows.size(), ny, std::move(w));
    }

    std::size_t input_size() const { return nx_; }
    std::size_t output_size() const { return ny_; }

    double w(Symbol x, Symbol y) const { return w_[x * ny_ + y]; }

    std::span<const double> row(Symbol x) const { return {w_.data() + x * ny_, ny_}; }

    /// Samples one channel output for input x. A structural zero is never
    /// produced, no matter what the random stream does.
    Symbol sample_output(Symbol x, Rng& rng) const {
        if (x >= nx_) throw IndexOutOfRange("input symbol " + std::to_string(x) + " out of range");
        const double u = rng.uniform01();
        double cum = 0.0;
        std::size_t last_positive = ny_;  // sentinel
        for (Symbol y = 0; y < ny_; ++y) {
            const double p = w(x, y);
            if (p > 0.0) {
                cum += p;
                last_positive = y;
                if (u < cum) return y;
            }
        }
        // Row sums to 1 within kRowSumTol, so reaching here is a rounding
        // artifact at the top of the CDF; the fallback is still in-support.
        return last_positive;
    }

    /// n independent uses of the channel, one per symbol of x_seq.
    Sequence transmit_block(std::span<const Symbol> x_seq, Rng& rng) const {
        Sequence out;
        out.reserve(x_seq.size());
        for (Symbol x : x_seq) out.push_back(sample_output(x, rng));
        return out;
    }

  private:
    Dmc(std::size_t nx, std::size_t ny, std::vector<double> w) : nx_(nx), ny_(ny), w_(std::move(w)) {}

    std::size_t nx_;
    std::size_t ny_;
    std::vector<double> w_;  // row-major, nx_ * ny_
};

/// An output y_c that refutes input x_e with certainty: W(y_c|x_e) = 0
/// while W(y_c|x_c) > 0. Receiving y_c proves the sender did not use x_e.
struct DisproverTriple {
    Symbol x_c;
    Symbol x_e;
    Symbol y_c;

    friend bool operator==(const DisproverTriple&, const DisproverTriple&) = default;
};

enum class DisproverPolicy { First, MaxProb };

/// All triples (x_c, x_e, y_c) with W(y_c|x_e) = 0 and W(y_c|x_c) > 0,
/// in lexicographic (y_c, x_c, x_e) order. Nonempty iff C_0u > 0.
inline std::vector<DisproverTriple> find_disprovers(const Dmc& ch) {
    std::vector<DisproverTriple> out;
    for (Symbol y = 0; y < ch.output_size(); ++y)
        for (Symbol xc = 0; xc < ch.input_size(); ++xc) {
            if (!(ch.w(xc, y) > 0.0)) continue;
            for (Symbol xe = 0; xe < ch.input_size(); ++xe)
                if (xe != xc && ch.w(xe, y) == 0.0) out.push_back({xc, xe, y});
        }
    return out;
}

/// Picks the disprover the protocols will use. First = lexicographic-first;
/// MaxProb = argmax W(y_c|x_c) with lexicographic tie-break.
inline std::optional<DisproverTriple> pick_disprover(const Dmc& ch, DisproverPolicy policy) {
    const auto all = find_disprovers(ch);
    if (all.empty()) return std::nullopt;
    if (policy == DisproverPolicy::First) return all.front();
    const auto best = std::max_element(all.begin(), all.end(), [&](const auto& a, const auto& b) {
        return ch.w(a.x_c, a.y_c) < ch.w(b.x_c, b.y_c);
    });
    return *best;
}

/// True iff two inputs have disjoint output supports (C_0 > 0).
inline bool has_nonconfusable_pair(const Dmc& ch) {
    for (Symbol x = 0; x < ch.input_size(); ++x)
        for (Symbol xp = x + 1; xp < ch.input_size(); ++xp) {
            bool confusable = false;
            for (Symbol y = 0; y < ch.output_size(); ++y)
                if (ch.w(x, y) > 0.0 && ch.w(xp, y) > 0.0) {
                    confusable = true;
                    break;
                }
            if (!confusable) return true;
        }
    return false;
}

/// A positive product form W(y|x) = A(x)B(y) valid on `support`.
/// A and B are determined only up to a positive per-component rescaling
/// A -> cA, B -> B/c.
struct Decomposition {
    std::vector<double> a;                            // per input, strictly positive
    std::vector<double> b;                            // per output, strictly positive
    std::vector<std::pair<Symbol, Symbol>> support;   // (x, y) pairs covered
};

/// Cycle in the support graph whose alternating log-sum is non-zero,
/// certifying that no product decomposition exists.
struct WitnessCycle {
    std::vector<std::pair<Symbol, Symbol>> edges;  // (x, y) edges along the cycle
    double log_residual;                           // alternating sum, exceeds tolerance
};

struct DecompositionCheck {
    std::optional<Decomposition> decomposition;
    std::optional<WitnessCycle> witness;  // set exactly when decomposition is absent
};

namespace detail {

inline void require_distribution(std::span<const double> q, std::size_t expected_size) {
    if (q.size() != expected_size) throw InvalidDistribution("distribution has wrong size");
    double sum = 0.0;
    for (double v : q) {
        if (!(v >= 0.0)) throw InvalidDistribution("distribution entry negative or NaN");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTol) throw InvalidDistribution("distribution sums to " + std::to_string(sum));
}

}  // namespace detail

/// Tests whether W(y|x) = A(x)B(y) holds for positive A, B on the support
/// S = {(x, y) : q[x] > support_eps and W(y|x) > 0}.
///
/// Works in log-space on the bipartite support graph: assigns log-values by
/// breadth-first traversal inside each connected component and checks every
/// non-tree edge within tol. The first inconsistent edge closes a witness
/// cycle through the BFS tree, which is returned instead of a decomposition.
inline DecompositionCheck check_decomposability(const Dmc& ch, std::span<const double> q,
                                                double support_eps = kDefaultSupportEps,
                                                double tol = kDefaultDecompTol) {
    detail::require_distribution(q, ch.input_size());

    const std::size_t nx = ch.input_size(), ny = ch.output_size();
    const std::size_t nodes = nx + ny;  // inputs first, then outputs

    std::vector<std::pair<Symbol, Symbol>> support;
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(nodes);  // (neighbor, log w)
    for (Symbol x = 0; x < nx; ++x) {
        if (!(q[x] > support_eps)) continue;
        for (Symbol y = 0; y < ny; ++y) {
            if (!(ch.w(x, y) > 0.0)) continue;
            support.emplace_back(x, y);
            const double lw = std::log(ch.w(x, y));
            adj[x].emplace_back(nx + y, lw);
            adj[nx + y].emplace_back(x, lw);
        }
    }

    std::vector<double> phi(nodes, 0.0);
    std::vector<char> assigned(nodes, 0);
    std::vector<std::size_t> parent(nodes, nodes);
    std::vector<std::size_t> depth(nodes, 0);

    for (std::size_t root = 0; root < nodes; ++root) {
        if (assigned[root] || adj[root].empty()) continue;
        assigned[root] = 1;
        std::queue<std::size_t> bfs;
        bfs.push(root);
        while (!bfs.empty()) {
            const std::size_t u = bfs.front();
            bfs.pop();
            for (const auto& [v, lw] : adj[u]) {
                if (!assigned[v]) {
                    phi[v] = lw - phi[u];
                    assigned[v] = 1;
                    parent[v] = u;
                    depth[v] = depth[u] + 1;
                    bfs.push(v);
                } else if (std::abs(phi[u] + phi[v] - lw) > tol) {
                    // Inconsistent non-tree edge: the tree path u..v plus
                    // this edge is the witness cycle, and its alternating
                    // log-sum equals this residual.
                    const double residual = phi[u] + phi[v] - lw;
                    std::vector<std::size_t> pu{u}, pv{v};
                    std::size_t a = u, b = v;
                    while (depth[a] > depth[b]) pu.push_back(a = parent[a]);
                    while (depth[b] > depth[a]) pv.push_back(b = parent[b]);
                    while (a != b) {
                        pu.push_back(a = parent[a]);
                        pv.push_back(b = parent[b]);
                    }
                    std::vector<std::size_t> cycle(pu.begin(), pu.end());
                    for (auto it = pv.rbegin() + 1; it != pv.rend(); ++it) cycle.push_back(*it);
                    WitnessCycle witness;
                    witness.log_residual = residual;
                    for (std::size_t i = 0; i + 1 < cycle.size(); ++i) {
                        const std::size_t s = cycle[i], t = cycle[i + 1];
                        witness.edges.emplace_back(std::min(s, t), std::max(s, t) - nx);
                    }
                    witness.edges.emplace_back(std::min(u, v), std::max(u, v) - nx);
                    return {std::nullopt, std::move(witness)};
                }
            }
        }
    }

    Decomposition d;
    d.a.assign(nx, 1.0);
    d.b.assign(ny, 1.0);
    for (std::size_t i = 0; i < nx; ++i)
        if (assigned[i]) d.a[i] = std::exp(phi[i]);
    for (std::size_t i = 0; i < ny; ++i)
        if (assigned[nx + i]) d.b[i] = std::exp(phi[nx + i]);
    d.support = std::move(support);
    return {std::move(d), std::nullopt};
}

/// Structural summary used by the `analyze` command.
struct ChannelReport {
    std::vector<DisproverTriple> disprovers;
    bool has_nonconfusable_pair = false;
    bool c0u_positive = false;  // equals disprovers nonempty
    std::optional<Decomposition> decomposable_on_support;
    std::optional<WitnessCycle> witness;
};

inline ChannelReport analyze_channel(const Dmc& ch, std::span<const double> q_star,
                                     double support_eps = kDefaultSupportEps,
                                     double tol = kDefaultDecompTol) {
    ChannelReport report;
    report.disprovers = find_disprovers(ch);
    report.c0u_positive = !report.disprovers.empty();
    report.has_nonconfusable_pair = has_nonconfusable_pair(ch);
    auto check = check_decomposability(ch, q_star, support_eps, tol);
    report.decomposable_on_support = std::move(check.decomposition);
    report.witness = std::move(check.witness);
    return report;
}

}  // namespace zefchan
