#include <catch2/catch.hpp>

#include <cmath>

#include "zefchan/analysis.hpp"

using namespace zefchan;

TEST_CASE("round_success_prob formula substitutions") {
    CHECK(round_success_prob(0.0, 1.0, 1) == Approx(1.0).margin(1e-15));
    CHECK(round_success_prob(0.1, 0.5, 3) == Approx(0.7875).margin(1e-12));
    CHECK(round_success_prob(0.25, 0.75, 2) == Approx(0.703125).margin(1e-12));
}

TEST_CASE("round_success_prob rejects degenerate inputs") {
    CHECK_THROWS_AS(round_success_prob(1.0, 0.5, 1), DegenerateConfig);
    CHECK_THROWS_AS(round_success_prob(0.5, 0.0, 1), DegenerateConfig);
    CHECK_THROWS_AS(round_success_prob(0.5, 0.5, 0), DegenerateConfig);
}

TEST_CASE("round_success_prob monotonicity") {
    double prev = 0.0;
    for (std::size_t gamma = 1; gamma <= 16; ++gamma) {
        const double p = round_success_prob(0.2, 0.3, gamma);
        CHECK(p >= prev);
        prev = p;
    }
    prev = 0.0;
    for (double pi = 0.05; pi <= 1.0; pi += 0.05) {
        const double p = round_success_prob(0.2, std::min(pi, 1.0), 3);
        CHECK(p >= prev);
        prev = p;
    }
    prev = 1.0;
    for (double lm = 0.0; lm < 1.0; lm += 0.05) {
        const double p = round_success_prob(lm, 0.3, 3);
        CHECK(p <= prev);
        prev = p;
    }
}

TEST_CASE("large gamma saturates at 1 - lambda") {
    // the saturation gap is exactly (1 - lambda) * (1 - p)^gamma
    for (double lm : {0.0, 0.2, 0.7})
        for (double pi : {0.1, 0.5, 1.0}) {
            const double gap = std::abs(round_success_prob(lm, pi, 64) - (1.0 - lm));
            CHECK(gap <= (1.0 - lm) * std::pow(1.0 - pi, 64.0) + 1e-15);
        }
    // 1e-12 closeness needs (1-p)^gamma below 1e-12: gamma = 64 suffices for
    // p >= 0.4, and p = 0.1 needs gamma around 300
    for (double lm : {0.0, 0.2, 0.7}) {
        for (double pi : {0.4, 0.5, 1.0})
            CHECK(round_success_prob(lm, pi, 64) == Approx(1.0 - lm).margin(1e-12));
        CHECK(round_success_prob(lm, 0.1, 300) == Approx(1.0 - lm).margin(1e-12));
    }
}

TEST_CASE("gamma_auto rule") {
    CHECK(gamma_auto(1) == 1);
    CHECK(gamma_auto(2) == 1);
    CHECK(gamma_auto(8) == 3);
    CHECK(gamma_auto(9) == 4);
    CHECK(gamma_auto(1000) == 10);
    for (std::size_t n = 1; n <= 4096; ++n) CHECK(gamma_auto(n) <= n);
    // o(n): vanishing fraction at large n
    CHECK(static_cast<double>(gamma_auto(1 << 20)) / static_cast<double>(1 << 20) < 2e-5);
}

TEST_CASE("predict fills every field from the formulas") {
    CodeQuality perfect;
    perfect.lambda = {0.0, 0.0};
    const auto ideal = predict(perfect, 1.0, 2, 1);
    CHECK(ideal.n_bar == Approx(3.0).margin(1e-12));
    CHECK(ideal.r_bar == Approx(1.0 / 3.0).margin(1e-12));
    CHECK(ideal.expected_rounds[0] == Approx(1.0).margin(1e-12));
    CHECK(ideal.expected_rounds[1] == Approx(1.0).margin(1e-12));

    CodeQuality lossy;
    lossy.lambda = {0.25, 0.25};
    const auto p = predict(lossy, 0.75, 2, 2);
    CHECK(p.p[0] == Approx(0.703125).margin(1e-12));
    CHECK(p.n_bar == Approx(5.688888888888889).margin(1e-9));
    CHECK(p.r_bar == Approx(0.17578125).margin(1e-9));

    CodeQuality degenerate;
    degenerate.lambda = {0.0, 1.0};
    CHECK_THROWS_AS(predict(degenerate, 0.5, 2, 1), DegenerateConfig);
}

TEST_CASE("predict identities hold by construction") {
    CodeQuality q;
    q.lambda = {0.1, 0.3, 0.05, 0.2};
    const auto p = predict(q, 0.6, 5, 2);
    const double bits = std::log2(4.0);
    CHECK(p.r_bar * p.n_bar == Approx(bits).margin(1e-12));
    CHECK(p.d_bar * bits == Approx(p.n_bar).margin(1e-12));
    // n_bar is the uniform-prior average of per-message delays
    double acc = 0.0;
    for (double er : p.expected_rounds) acc += er * static_cast<double>(p.n + p.gamma);
    CHECK(p.n_bar == Approx(acc / 4.0).margin(1e-12));
}
