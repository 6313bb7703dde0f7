#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>

#include "test_channels.hpp"
#include "zefchan/codebook.hpp"

using namespace zefchan;
using testutil::make_bec;
using testutil::make_bsc;
using testutil::make_identity;
using testutil::make_z;
using testutil::oracle_erasure_prob;

namespace {
Codebook repetition_pair(std::size_t n) {
    return Codebook(n, {Sequence(n, 0), Sequence(n, 1)});
}
}  // namespace

TEST_CASE("codebook validation") {
    CHECK_NOTHROW(Codebook(2, {{0, 0}, {1, 1}}));
    CHECK_THROWS_AS(Codebook(2, {{0, 0}, {1}}), LengthMismatch);
    CHECK_THROWS_AS(Codebook(2, {{0, 0}, {0, 0}}), InvalidCodebook);
    CHECK_THROWS_AS(Codebook(1, {}), InvalidCodebook);
    const Codebook c(1, {{5}});
    CHECK_THROWS_AS(c.validate_against(make_bec(0.3)), IndexOutOfRange);
}

TEST_CASE("probable_messages on the BEC") {
    const Dmc bec = make_bec(0.3);
    const Codebook code = repetition_pair(2);
    CHECK(probable_messages(code, bec, Sequence{0, 1}) == std::vector<Message>{0});
    CHECK(probable_messages(code, bec, Sequence{1, 1}) == std::vector<Message>{0, 1});
    CHECK_THROWS_AS(probable_messages(code, bec, Sequence{0}), LengthMismatch);

    const Dmc id = make_identity(2);
    for (Message m = 0; m < 2; ++m) CHECK(probable_messages(code, id, code.codeword(m)) == std::vector<Message>{m});

    // an impossible output gives an empty probable set without throwing;
    // only the decoder treats that as corruption
    CHECK(probable_messages(code, id, Sequence{0, 1}).empty());
}

TEST_CASE("zue_decode returns the unique message, erasure, or flags corruption") {
    const Dmc bec = make_bec(0.3);
    const Codebook code = repetition_pair(2);
    CHECK(zue_decode(code, bec, Sequence{0, 1}) == DecodeOutcome::unique(0));
    CHECK(zue_decode(code, bec, Sequence{1, 1}).is_erasure());
    CHECK_THROWS_AS(zue_decode(code, make_identity(2), Sequence{0, 1}), ImpossibleOutput);
}

TEST_CASE("zue_decode never returns a wrong message (exhaustive + randomized)") {
    const Dmc channels[] = {make_bec(0.3), make_z(0.4)};
    for (const Dmc& ch : channels) {
        const Codebook code(2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
        // exhaustive: every output sequence reachable from every codeword
        for (Message m = 0; m < code.message_count(); ++m) {
            for (Symbol y0 = 0; y0 < ch.output_size(); ++y0)
                for (Symbol y1 = 0; y1 < ch.output_size(); ++y1) {
                    const Sequence y{y0, y1};
                    double p = ch.w(code.codeword(m)[0], y0) * ch.w(code.codeword(m)[1], y1);
                    if (!(p > 0.0)) continue;
                    const auto out = zue_decode(code, ch, y);
                    if (!out.is_erasure()) REQUIRE(out.message() == m);
                }
        }
    }
    // randomized at scale
    const Dmc bec = make_bec(0.4);
    const Codebook code(3, {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
    Rng rng(2024);
    std::uint64_t wrong = 0, unique = 0;
    for (int i = 0; i < 1'000'000; ++i) {
        const Message m = rng.below(code.message_count());
        const Sequence y = bec.transmit_block(code.codeword(m), rng);
        const auto out = zue_decode(code, bec, y);
        if (!out.is_erasure()) {
            ++unique;
            if (out.message() != m) ++wrong;
        }
    }
    CHECK(wrong == 0);
    CHECK(unique > 0);
}

TEST_CASE("erasure_prob_exact matches the analytic BEC value and the oracle") {
    const Dmc bec = make_bec(0.5);
    const Codebook code = repetition_pair(2);
    CHECK(erasure_prob_exact(code, bec, 0) == Approx(0.25).margin(1e-15));
    CHECK(erasure_prob_exact(code, bec, 0) == Approx(oracle_erasure_prob(code, bec, 0)).margin(1e-15));

    // identity channel, distinct codewords: no erasures
    CHECK(erasure_prob_exact(repetition_pair(2), make_identity(2), 0) == 0.0);
    // single message: the probable set is always that singleton
    CHECK(erasure_prob_exact(Codebook(2, {{0, 1}}), make_bec(0.5), 0) == 0.0);

    // two-codeword BEC codes have lambda = eps^d for Hamming distance d
    const Dmc bec3 = make_bec(0.3);
    const Codebook mixed(4, {{0, 0, 1, 0}, {0, 1, 0, 0}});
    CHECK(erasure_prob_exact(mixed, bec3, 0) == Approx(0.3 * 0.3).margin(1e-12));
    CHECK(erasure_prob_exact(mixed, bec3, 1) == Approx(oracle_erasure_prob(mixed, bec3, 1)).margin(1e-15));
}

TEST_CASE("erasure_prob_exact agrees with the oracle on random instances") {
    Rng rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        const Dmc ch = (trial % 3 == 0) ? make_bec(0.2 + 0.6 * rng.uniform01())
                       : (trial % 3 == 1) ? make_z(0.2 + 0.6 * rng.uniform01())
                                          : make_bec(0.5);
        const std::size_t n = 1 + rng.below(3);
        const std::size_t msgs = std::min<std::size_t>(2 + rng.below(3), std::size_t{1} << n);
        std::set<Sequence> cws;
        while (cws.size() < msgs) {
            Sequence c(n);
            for (auto& s : c) s = rng.below(2);
            cws.insert(c);
        }
        const Codebook code(n, std::vector<Sequence>(cws.begin(), cws.end()));
        for (Message m = 0; m < code.message_count(); ++m)
            CHECK(erasure_prob_exact(code, ch, m) == Approx(oracle_erasure_prob(code, ch, m)).margin(1e-12));
    }
}

TEST_CASE("erasure budget is enforced") {
    const Codebook code(30, {Sequence(30, 0), Sequence(30, 1)});
    CHECK_THROWS_AS(erasure_prob_exact(code, make_bec(0.3), 0, 1000), BudgetExceeded);
}

TEST_CASE("erasure_prob_mc tracks the exact value and is seed-deterministic") {
    const Dmc bec = make_bec(0.5);
    const Codebook code = repetition_pair(2);
    const std::uint64_t samples = 1'000'000;
    const double est = erasure_prob_mc(code, bec, 0, samples, 99);
    const double sigma = std::sqrt(0.25 * 0.75 / static_cast<double>(samples));
    CHECK(std::abs(est - 0.25) <= 3.0 * sigma);
    CHECK(erasure_prob_mc(code, bec, 0, samples, 99) == est);

    CHECK(erasure_prob_mc(repetition_pair(2), make_identity(2), 0, 1000, 1) == 0.0);
    CHECK_THROWS_AS(erasure_prob_mc(code, bec, 0, 0, 1), DegenerateSamples);
    CHECK_THROWS_AS(erasure_prob_mc(code, bec, 9, 10, 1), IndexOutOfRange);
}

TEST_CASE("unique_decode_possible is an exact lambda < 1 test") {
    CHECK(unique_decode_possible(repetition_pair(2), make_bec(0.5), 0));
    // full-support channel: every output keeps both messages probable
    CHECK_FALSE(unique_decode_possible(repetition_pair(1), make_bsc(0.3), 0));
    // nested supports: message 0's outputs never exclude message 1
    const Dmc nested = Dmc::validate({{0.5, 0.5, 0.0}, {0.25, 0.25, 0.5}});
    const Codebook code(1, {{0}, {1}});
    CHECK_FALSE(unique_decode_possible(code, nested, 0));
    CHECK(unique_decode_possible(code, nested, 1));
}

TEST_CASE("adding a codeword never decreases lambda") {
    Rng rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        const Dmc ch = trial % 2 ? make_bec(0.3 + 0.4 * rng.uniform01()) : make_z(0.5);
        const std::size_t n = 2;
        std::set<Sequence> cws;
        while (cws.size() < 3) {
            Sequence c(n);
            for (auto& s : c) s = rng.below(2);
            cws.insert(c);
        }
        std::vector<Sequence> all(cws.begin(), cws.end());
        const Codebook smaller(n, {all[0], all[1]});
        const Codebook larger(n, all);
        for (Message m = 0; m < 2; ++m)
            CHECK(erasure_prob_exact(larger, ch, m) >= erasure_prob_exact(smaller, ch, m) - 1e-15);
    }
}

TEST_CASE("decoding is equivariant under message relabeling") {
    const Dmc bec = make_bec(0.4);
    const Codebook code(2, {{0, 0}, {0, 1}, {1, 1}});
    const Codebook permuted(2, {{1, 1}, {0, 0}, {0, 1}});  // m -> (m+1) % 3
    for (Symbol y0 = 0; y0 < 3; ++y0)
        for (Symbol y1 = 0; y1 < 3; ++y1) {
            const Sequence y{y0, y1};
            std::optional<DecodeOutcome> a, b;
            try {
                a = zue_decode(code, bec, y);
            } catch (const ImpossibleOutput&) {
            }
            try {
                b = zue_decode(permuted, bec, y);
            } catch (const ImpossibleOutput&) {
            }
            REQUIRE(a.has_value() == b.has_value());
            if (!a) continue;
            CHECK(a->is_erasure() == b->is_erasure());
            if (!a->is_erasure()) CHECK((a->message() + 1) % 3 == b->message());
        }
}

TEST_CASE("search_code exhaustive finds the distance-2 pair on the BEC") {
    const double eps = 0.5;
    const auto result = search_code(make_bec(eps), 2, 2, SearchStrategy::Exhaustive, 1'000'000);
    CHECK(result.quality.max_lambda == Approx(eps * eps).margin(1e-12));
    CHECK(result.code.codewords() == std::vector<Sequence>{{0, 0}, {1, 1}});

    // single message: any codeword, lambda 0
    const auto single = search_code(make_bec(0.3), 2, 1, SearchStrategy::Exhaustive, 1'000'000);
    CHECK(single.quality.max_lambda == 0.0);

    // identity channel, all singletons
    const auto id = search_code(make_identity(3), 1, 3, SearchStrategy::Exhaustive, 1'000'000);
    CHECK(id.quality.max_lambda == 0.0);
    CHECK(id.code.message_count() == 3);
}

TEST_CASE("search_code rejects impossible requests") {
    CHECK_THROWS_AS(search_code(make_bsc(0.3), 1, 2, SearchStrategy::Exhaustive, 1'000'000), NoValidCode);
    CHECK_THROWS_AS(search_code(make_bec(0.3), 1, 5, SearchStrategy::Exhaustive, 1'000'000), NoValidCode);
    CHECK_THROWS_AS(search_code(make_bec(0.3), 10, 4, SearchStrategy::Exhaustive, 100), BudgetExceeded);
}

TEST_CASE("search_code greedy and random are deterministic") {
    const Dmc bec = make_bec(0.4);
    const auto g1 = search_code(bec, 3, 2, SearchStrategy::Greedy, 0);
    const auto g2 = search_code(bec, 3, 2, SearchStrategy::Greedy, 0);
    CHECK(g1.code.codewords() == g2.code.codewords());
    CHECK(g1.quality.max_lambda == Approx(0.4 * 0.4 * 0.4).margin(1e-12));  // complementary pair

    const auto r1 = search_code(bec, 3, 2, SearchStrategy::Random, 50, 11);
    const auto r2 = search_code(bec, 3, 2, SearchStrategy::Random, 50, 11);
    CHECK(r1.code.codewords() == r2.code.codewords());
    CHECK(r1.quality.max_lambda <= 0.4);  // at least distance 1
}
