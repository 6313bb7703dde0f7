#include <catch2/catch.hpp>

#include <cmath>
#include <numeric>

#include "test_channels.hpp"
#include "zefchan/protocol.hpp"

using namespace zefchan;
using testutil::make_bec;
using testutil::make_bsc;
using testutil::make_identity;
using testutil::make_z;

TEST_CASE("contains_letter") {
    CHECK(contains_letter(Sequence{1, 1, 0, 1}, 0));
    CHECK_FALSE(contains_letter(Sequence{}, 0));
    CHECK_FALSE(contains_letter(Sequence{2, 2, 2}, 1));
}

TEST_CASE("gamma schedule") {
    CHECK(GammaSchedule::automatic().value_for(1000) == 10);
    CHECK(GammaSchedule::fixed(5).value_for(1000) == 5);
    CHECK_THROWS_AS(GammaSchedule::fixed(0), DegenerateConfig);
}

TEST_CASE("message framing round-trips") {
    const std::size_t k = 4;
    for (std::uint64_t payload = 0; payload < 8; ++payload)
        for (bool bit : {false, true}) {
            const Message m = compose_message(bit, payload, k);
            CHECK(message_state_bit(m, k) == bit);
            CHECK(message_payload(m, k) == payload);
        }
    CHECK(compose_message(true, 0, 1) == 1);
    CHECK(message_payload(1, 1) == 0);
}

TEST_CASE("noiseless scheme on an identity channel finishes in one round") {
    const auto cfg = NoiselessSessionConfig::make(make_identity(2), Codebook(2, {{0, 0}, {1, 1}}),
                                                  GammaSchedule::fixed(1));
    Rng rng(5);
    for (Message m = 0; m < 2; ++m) {
        std::vector<RoundRecord> transcript;
        const auto run = run_noiseless_message(cfg, m, rng, 10, &transcript);
        CHECK(run.rounds == 1);
        REQUIRE(run.committed.has_value());
        CHECK(*run.committed == m);
        REQUIRE(transcript.size() == 1);
        CHECK(transcript[0].tx_progressed);
        CHECK(transcript[0].rx_committed);
    }
}

TEST_CASE("configs that cannot terminate are rejected up front") {
    // no disprover at all
    CHECK_THROWS_AS(NoiselessSessionConfig::make(make_bsc(0.3), Codebook(1, {{0}, {1}}), GammaSchedule::fixed(1)),
                    NonterminatingConfig);
    // some message can never decode uniquely (nested supports)
    const Dmc nested = Dmc::validate({{0.5, 0.5, 0.0}, {0.25, 0.25, 0.5}});
    CHECK_THROWS_AS(NoiselessSessionConfig::make(nested, Codebook(1, {{0}, {1}}), GammaSchedule::fixed(1)),
                    NonterminatingConfig);
    // doctored disprover with W(y_c|x_c) = 0
    auto cfg = NoiselessSessionConfig::make(make_bec(0.3), Codebook(2, {{0, 0}, {1, 1}}), GammaSchedule::fixed(1));
    cfg.disprover = DisproverTriple{1, 0, 0};  // W(0|1) = 0 on the BEC
    Rng rng(1);
    CHECK_THROWS_AS(run_noiseless_message(cfg, 0, rng), NonterminatingConfig);
}

TEST_CASE("noiseless mean rounds follows the geometric formula on the BEC") {
    // lambda = 0.25 exactly, W(y_c|x_c) = 0.5, gamma = 2:
    // p = (1 - 0.25) * (1 - 0.25) = 0.5625
    const double p = 0.5625;
    const auto cfg = NoiselessSessionConfig::make(make_bec(0.5), Codebook(2, {{0, 0}, {1, 1}}),
                                                  GammaSchedule::fixed(2));
    CHECK(cfg.disprover == DisproverTriple{0, 1, 0});
    Rng rng(12345);
    const std::uint64_t trials = 100'000;
    double total = 0.0, total_sq = 0.0;
    std::uint64_t bad_commits = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        const auto run = run_noiseless_message(cfg, i % 2, rng);
        if (!run.committed || *run.committed != i % 2) ++bad_commits;
        total += static_cast<double>(run.rounds);
        total_sq += static_cast<double>(run.rounds) * static_cast<double>(run.rounds);
    }
    CHECK(bad_commits == 0);
    const double mean = total / static_cast<double>(trials);
    const double var = total_sq / static_cast<double>(trials) - mean * mean;
    const double se = std::sqrt(var / static_cast<double>(trials));
    CHECK(std::abs(mean - 1.0 / p) <= 3.0 * se);
}

namespace {

NoisySessionConfig small_noisy_config() {
    // forward BEC, all four length-2 codewords (k = 2: state bit + 1 payload
    // bit), backward Z-channel
    return NoisySessionConfig::make(make_bec(0.5), make_z(0.4),
                                    Codebook(2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}), GammaSchedule::fixed(1));
}

}  // namespace

TEST_CASE("noisy config derives framing and disprovers") {
    const auto cfg = small_noisy_config();
    CHECK(cfg.k == 2);
    CHECK(cfg.payload_count() == 2);
    CHECK(cfg.gamma == 1);
    CHECK(cfg.backward_disprover == DisproverTriple{1, 0, 1});

    CHECK_THROWS_AS(NoisySessionConfig::make(make_bec(0.5), make_z(0.4), Codebook(2, {{0, 0}, {0, 1}, {1, 1}}),
                                             GammaSchedule::fixed(1)),
                    DegenerateConfig);
    CHECK_THROWS_AS(NoisySessionConfig::make(make_bsc(0.3), make_z(0.4),
                                             Codebook(1, {{0}, {1}}), GammaSchedule::fixed(1)),
                    NonterminatingConfig);
    CHECK_THROWS_AS(NoisySessionConfig::make(make_bec(0.5), make_bsc(0.3),
                                             Codebook(2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}), GammaSchedule::fixed(1)),
                    NonterminatingConfig);
}

TEST_CASE("tx_step phases") {
    const auto cfg = small_noisy_config();
    TxState st{false, 1, 0, TxPhase::Transmit};

    const auto sent = tx_step(cfg, st, std::nullopt);
    CHECK(sent.state.rounds == 1);
    CHECK(sent.state.phase == TxPhase::Verify);
    CHECK(sent.send == cfg.code.codeword(compose_message(false, 1, 2)));
    CHECK_THROWS_AS(tx_step(cfg, st, Sequence{1}), PhaseMismatch);

    // confirmation present: state bit flips, ready for a new message
    const auto confirmed = tx_step(cfg, sent.state, Sequence{1});
    CHECK(confirmed.progressed);
    CHECK(confirmed.state.state_bit == true);
    CHECK(confirmed.state.phase == TxPhase::Transmit);

    // no confirmation: same codeword is scheduled and L grows
    const auto retry = tx_step(cfg, sent.state, Sequence{0});
    CHECK_FALSE(retry.progressed);
    CHECK(retry.state.state_bit == false);
    const auto resent = tx_step(cfg, retry.state, std::nullopt);
    CHECK(resent.state.rounds == 2);
    CHECK(resent.send == sent.send);

    CHECK_THROWS_AS(tx_step(cfg, sent.state, std::nullopt), PhaseMismatch);
    CHECK_THROWS_AS(tx_step(cfg, sent.state, Sequence{0, 0}), LengthMismatch);

    // a backward channel stuck on x'_e can never flip the state bit
    TxState stuck{false, 0, 0, TxPhase::Transmit};
    for (int i = 0; i < 50; ++i) {
        const auto t = tx_step(cfg, stuck, std::nullopt);
        const auto v = tx_step(cfg, t.state, Sequence{0});  // only output reachable from x'_e on the Z-channel
        CHECK_FALSE(v.progressed);
        CHECK(v.state.state_bit == false);
        stuck = v.state;
    }
    CHECK(stuck.rounds == 50);
}

TEST_CASE("rx_step branches") {
    const auto cfg = small_noisy_config();
    const RxState fresh{false, {}};

    // message (b1=0, payload=1) has codeword {0,1}; received clean on the
    // BEC the outputs are (0, 1) at output indices (0, 2)
    const Sequence clean_y{0, 2};

    // unique decode with matching state bit: commit, flip, answer [x'_c]^g
    const auto committed = rx_step(cfg, fresh, clean_y);
    REQUIRE_FALSE(committed.decode.is_erasure());
    CHECK(committed.decode.message() == compose_message(false, 1, 2));
    CHECK(committed.committed);
    CHECK(committed.state.state_bit == true);
    REQUIRE(committed.state.committed.size() == 1);
    CHECK(committed.state.committed[0] == 1);
    CHECK(committed.send == Sequence{1});  // x'_c
    CHECK(committed.decoded_state_bit == false);

    // unique decode with stale state bit: no commit, still [x'_c]^g
    const auto stale = rx_step(cfg, committed.state, clean_y);
    CHECK_FALSE(stale.committed);
    CHECK(stale.state.committed.size() == 1);
    CHECK(stale.state.state_bit == true);
    CHECK(stale.send == Sequence{1});

    // erasure: state unchanged, answer [x'_e]^g
    const auto erased = rx_step(cfg, fresh, Sequence{1, 1});  // both positions erased
    CHECK_FALSE(erased.committed);
    CHECK(erased.decode.is_erasure());
    CHECK(erased.state.state_bit == false);
    CHECK(erased.send == Sequence{0});  // x'_e
}

TEST_CASE("noisy scheme delivers over identity channels in one round each") {
    const auto cfg = NoisySessionConfig::make(make_identity(2), make_identity(2),
                                              Codebook(1, {{0}, {1}}), GammaSchedule::fixed(1));
    Rng rng(9);
    const std::vector<std::uint64_t> payloads(5, 0);  // k = 1: state bit only
    const auto session = run_noisy_session(cfg, payloads, rng);
    CHECK(session.committed == payloads);
    for (const auto& pm : session.per_message) {
        CHECK(pm.rounds == 1);
        CHECK(pm.delay_uses == 2);
    }
}

TEST_CASE("noisy session is zero-error, exactly-once, in-order") {
    const auto cfg = small_noisy_config();
    Rng rng(333);
    std::vector<std::uint64_t> payloads;
    for (int i = 0; i < 400; ++i) payloads.push_back(rng.below(2));
    std::vector<RoundRecord> transcript;
    const auto session = run_noisy_session(cfg, payloads, rng, 1'000'000, &transcript);
    REQUIRE(session.committed == payloads);

    // transcript sanity: exactly one commit per message, commit precedes or
    // coincides with transmitter progress, and an [x'_e]^g block never
    // delivers y'_c
    const Symbol xe = cfg.backward_disprover.x_e;
    const Symbol yc = cfg.backward_disprover.y_c;
    std::size_t commits_in_window = 0;
    bool pending = false;
    for (const auto& rec : transcript) {
        if (rec.backward_sent == Sequence(cfg.gamma, xe)) CHECK_FALSE(contains_letter(rec.backward_received, yc));
        if (rec.rx_committed) {
            ++commits_in_window;
            CHECK(commits_in_window == 1);
            pending = true;
        }
        if (rec.tx_progressed) {
            CHECK(pending);  // progress implies this message was committed
            pending = false;
            commits_in_window = 0;
        }
    }
}

TEST_CASE("noisy mean rounds follows the round success probability") {
    // lambda_m = 1 - (1-eps)^2 = 0.51 for every message of the full code on
    // BEC(0.3); backward Z(0.4) delivers y'_c with probability 0.6; gamma=1.
    const auto cfg = NoisySessionConfig::make(make_bec(0.3), make_z(0.4),
                                              Codebook(2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}),
                                              GammaSchedule::fixed(1));
    const double lambda = erasure_prob_exact(cfg.code, cfg.forward, 0);
    CHECK(lambda == Approx(0.51).margin(1e-12));
    const double p = (1.0 - lambda) * 0.6;

    Rng rng(777);
    const std::uint64_t trials = 50'000;
    double total = 0.0, total_sq = 0.0;
    std::uint64_t bad_commits = 0;
    bool bit = false;
    for (std::uint64_t i = 0; i < trials; ++i) {
        const auto run = run_noisy_message(cfg, i % 2, bit, rng);
        if (!run.committed || *run.committed != i % 2) ++bad_commits;
        total += static_cast<double>(run.rounds);
        total_sq += static_cast<double>(run.rounds) * static_cast<double>(run.rounds);
        bit = !bit;
    }
    CHECK(bad_commits == 0);
    const double mean = total / static_cast<double>(trials);
    const double var = total_sq / static_cast<double>(trials) - mean * mean;
    const double se = std::sqrt(var / static_cast<double>(trials));
    CHECK(std::abs(mean - 1.0 / p) <= 3.0 * se);
}

TEST_CASE("round cap trips on a stalled run") {
    const auto cfg = small_noisy_config();
    Rng rng(1);
    CHECK_THROWS_AS(run_noisy_message(cfg, 0, false, rng, 0), RoundCapExceeded);
}
