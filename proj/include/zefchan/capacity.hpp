#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "zefchan/dmc.hpp"
#include "zefchan/errors.hpp"

namespace zefchan {

/// I(Q, W) in bits. Terms with q[x] * W(y|x) = 0 contribute 0.
inline double mutual_information(std::span<const double> q, const Dmc& ch) {
    detail::require_distribution(q, ch.input_size());
    std::vector<double> py(ch.output_size(), 0.0);
    for (Symbol x = 0; x < ch.input_size(); ++x)
        for (Symbol y = 0; y < ch.output_size(); ++y) py[y] += q[x] * ch.w(x, y);
    double bits = 0.0;
    for (Symbol x = 0; x < ch.input_size(); ++x) {
        if (q[x] == 0.0) continue;
        for (Symbol y = 0; y < ch.output_size(); ++y) {
            const double wxy = ch.w(x, y);
            if (wxy > 0.0) bits += q[x] * wxy * std::log2(wxy / py[y]);
        }
    }
    return bits;
}

struct CapacityResult {
    double capacity_bits = 0.0;      // bracket midpoint at termination
    std::vector<double> q_star;      // capacity-achieving input distribution
    std::size_t iterations = 0;
    double gap_bound = 0.0;          // upper - lower bracket at termination
    bool converged = false;
};

/// Alternating maximization for the Shannon capacity, from the uniform
/// input distribution. Each iteration brackets C between the achieved
/// mutual information (lower) and max_x D(W(.|x) || p) (upper); stops when
/// the bracket closes to tol. Deterministic, so identical inputs give
/// bit-identical results.
///
/// On iteration exhaustion the best-so-far bracket is returned with
/// converged = false rather than throwing.
inline CapacityResult blahut_arimoto(const Dmc& ch, double tol = 1e-9, std::size_t max_iter = 100000,
                                     const std::function<void(double lower, double upper)>& on_iteration = {}) {
    if (!(tol > 0.0)) throw DegenerateConfig("blahut_arimoto requires tol > 0");
    const std::size_t nx = ch.input_size(), ny = ch.output_size();

    // Outputs unreachable from every input would put 0/0 into the update.
    std::vector<Symbol> ys;
    for (Symbol y = 0; y < ny; ++y)
        for (Symbol x = 0; x < nx; ++x)
            if (ch.w(x, y) > 0.0) {
                ys.push_back(y);
                break;
            }

    std::vector<double> q(nx, 1.0 / static_cast<double>(nx));
    std::vector<double> py(ys.size());
    std::vector<double> d(nx);

    CapacityResult result;
    double lower = 0.0, upper = 0.0;
    for (std::size_t iter = 1; iter <= max_iter; ++iter) {
        for (std::size_t j = 0; j < ys.size(); ++j) {
            double s = 0.0;
            for (Symbol x = 0; x < nx; ++x) s += q[x] * ch.w(x, ys[j]);
            py[j] = s;
        }
        lower = 0.0;
        upper = 0.0;
        for (Symbol x = 0; x < nx; ++x) {
            double dx = 0.0;
            for (std::size_t j = 0; j < ys.size(); ++j) {
                const double wxy = ch.w(x, ys[j]);
                if (wxy > 0.0) dx += wxy * std::log2(wxy / py[j]);
            }
            d[x] = dx;
            lower += q[x] * dx;
            upper = std::max(upper, dx);
        }
        if (on_iteration) on_iteration(lower, upper);
        result.iterations = iter;
        if (upper - lower <= tol) {
            result.converged = true;
            break;
        }
        // q(x) <- q(x) * 2^D(x), normalized; max-shift for stability
        double dmax = d[0];
        for (double v : d) dmax = std::max(dmax, v);
        double z = 0.0;
        for (Symbol x = 0; x < nx; ++x) {
            q[x] *= std::exp2(d[x] - dmax);
            z += q[x];
        }
        for (Symbol x = 0; x < nx; ++x) q[x] /= z;
    }

    double qsum = 0.0;
    for (double v : q) qsum += v;
    for (double& v : q) v /= qsum;

    result.capacity_bits = std::max(0.0, (upper + lower) / 2.0);
    result.q_star = std::move(q);
    result.gap_bound = upper - lower;
    return result;
}

}  // namespace zefchan
