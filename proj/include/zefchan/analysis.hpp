#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <vector>

#include "zefchan/codebook.hpp"
#include "zefchan/errors.hpp"

namespace zefchan {

/// Probability that a single round both decodes correctly and completes its
/// verification block: (1 - lambda_m) * [1 - (1 - p_indicator)^gamma].
/// p_indicator is the per-use probability of the confirming letter getting
/// through (forward W(y_c|x_c) with noiseless feedback, backward
/// W_b(y'_c|x'_c) with noisy feedback).
inline double round_success_prob(double lambda_m, double p_indicator, std::size_t gamma) {
    if (!(lambda_m >= 0.0) || lambda_m >= 1.0)
        throw DegenerateConfig("lambda_m must lie in [0,1); a message with lambda 1 never terminates");
    if (!(p_indicator > 0.0) || p_indicator > 1.0)
        throw DegenerateConfig("p_indicator must lie in (0,1]");
    if (gamma < 1) throw DegenerateConfig("gamma must be at least 1");
    return (1.0 - lambda_m) * (1.0 - std::pow(1.0 - p_indicator, static_cast<double>(gamma)));
}

/// Verification block length for blocklength n under the automatic rule:
/// max(1, ceil(log2 n)). Grows without bound but is o(n).
inline std::size_t gamma_auto(std::size_t n) {
    if (n < 1) throw DegenerateConfig("blocklength must be at least 1");
    const std::size_t cl2 = static_cast<std::size_t>(std::bit_width(n - 1));  // ceil(log2 n), exact
    return cl2 < 1 ? 1 : cl2;
}

/// Closed-form rate/delay predictions for a retransmit-until-confirmed
/// session: per-message round success probabilities, expected rounds, the
/// expected delay over a uniform message prior, and the induced rate.
struct Prediction {
    std::vector<double> p;                // per message
    std::vector<double> expected_rounds;  // 1 / p, per message
    double n_bar = 0.0;                   // expected channel uses per message
    double r_bar = 0.0;                   // log2|M| / n_bar, bits per channel use
    double d_bar = 0.0;                   // n_bar / log2|M|, channel uses per bit
    std::size_t n = 0;
    std::size_t gamma = 0;
};

inline Prediction predict(const CodeQuality& quality, double p_indicator, std::size_t n, std::size_t gamma) {
    if (quality.lambda.empty()) throw DegenerateConfig("quality has no messages");
    Prediction out;
    out.n = n;
    out.gamma = gamma;
    double inv_sum = 0.0;
    for (double lm : quality.lambda) {
        const double p = round_success_prob(lm, p_indicator, gamma);
        out.p.push_back(p);
        out.expected_rounds.push_back(1.0 / p);
        inv_sum += 1.0 / p;
    }
    const double m_count = static_cast<double>(quality.lambda.size());
    out.n_bar = static_cast<double>(n + gamma) / m_count * inv_sum;
    const double bits = std::log2(m_count);
    out.r_bar = bits / out.n_bar;
    out.d_bar = out.n_bar / bits;
    return out;
}

}  // namespace zefchan
