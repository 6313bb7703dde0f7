#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "zefchan/capacity.hpp"
#include "zefchan/codebook.hpp"
#include "zefchan/dmc.hpp"
#include "zefchan/sim.hpp"

namespace zefchan::io {

using json = nlohmann::json;

// All emitted artifacts carry a content hash over their canonical dump
// (sorted keys, hash field excluded) so downstream commands can verify they
// are being compared against the artifacts they came from.

inline std::string fnv1a64_hex(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

inline std::string content_hash(json j) {
    if (j.is_object()) j.erase("content_hash");
    return fnv1a64_hex(j.dump());
}

/// Adds the content hash as the final step before serialization.
inline void seal(json& j) { j["content_hash"] = content_hash(j); }

inline json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

// --- channel files ---------------------------------------------------------

struct LoadedChannel {
    std::string name;
    std::vector<std::string> output_labels;
    Dmc dmc;
    std::string hash;
};

inline LoadedChannel parse_channel(const json& j) {
    try {
        if (!j.is_object() || !j.contains("rows")) throw ParseError("channel file needs a \"rows\" table");
        auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
        Dmc dmc = Dmc::validate(std::move(rows));
        if (j.contains("inputs") && j.at("inputs").get<std::size_t>() != dmc.input_size())
            throw ParseError("\"inputs\" disagrees with the row count");
        if (j.contains("outputs") && j.at("outputs").get<std::size_t>() != dmc.output_size())
            throw ParseError("\"outputs\" disagrees with the row width");
        LoadedChannel out{j.value("name", std::string{}), {}, std::move(dmc), content_hash(j)};
        if (j.contains("output_labels")) {
            out.output_labels = j.at("output_labels").get<std::vector<std::string>>();
            if (out.output_labels.size() != out.dmc.output_size())
                throw ParseError("\"output_labels\" length disagrees with the row width");
        }
        return out;
    } catch (const json::exception& e) {
        throw ParseError(std::string("channel file: ") + e.what());
    }
}

inline LoadedChannel load_channel(const std::filesystem::path& path) { return parse_channel(load_json(path)); }

inline json channel_to_json(const std::string& name, const Dmc& dmc,
                            const std::vector<std::string>& output_labels = {}) {
    json j;
    j["name"] = name;
    j["inputs"] = dmc.input_size();
    j["outputs"] = dmc.output_size();
    json rows = json::array();
    for (Symbol x = 0; x < dmc.input_size(); ++x) {
        json row = json::array();
        for (Symbol y = 0; y < dmc.output_size(); ++y) row.push_back(dmc.w(x, y));
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    if (!output_labels.empty()) j["output_labels"] = output_labels;
    return j;
}

// --- codebook files --------------------------------------------------------

struct LoadedCodebook {
    Codebook code;
    std::string hash;
};

inline LoadedCodebook parse_codebook(const json& j) {
    try {
        auto cws = j.at("codewords").get<std::vector<Sequence>>();
        const auto n = j.at("n").get<std::size_t>();
        if (j.contains("messages") && j.at("messages").get<std::size_t>() != cws.size())
            throw ParseError("\"messages\" disagrees with the codeword count");
        return {Codebook(n, std::move(cws)), content_hash(j)};
    } catch (const json::exception& e) {
        throw ParseError(std::string("codebook file: ") + e.what());
    }
}

inline LoadedCodebook load_codebook(const std::filesystem::path& path) { return parse_codebook(load_json(path)); }

inline json codebook_to_json(const Codebook& code) {
    json j;
    j["n"] = code.blocklength();
    j["messages"] = code.message_count();
    j["codewords"] = code.codewords();
    return j;
}

// --- session config files ----------------------------------------------------

struct LoadedSession {
    SessionConfig config;
    std::string mode;  // "noiseless" | "noisy"
    std::string channel_hash;           // forward channel
    std::string backward_channel_hash;  // noisy mode only
    std::string code_hash;
    std::string config_hash;
};

inline GammaSchedule parse_gamma(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "auto") return GammaSchedule::automatic();
        throw ParseError("\"gamma\" must be \"auto\" or a positive integer");
    }
    if (j.is_number_unsigned() || j.is_number_integer()) {
        const auto g = j.get<long long>();
        if (g < 1) throw ParseError("\"gamma\" must be at least 1");
        return GammaSchedule::fixed(static_cast<std::size_t>(g));
    }
    throw ParseError("\"gamma\" must be \"auto\" or a positive integer");
}

inline DisproverPolicy parse_policy(const std::string& s) {
    if (s == "first") return DisproverPolicy::First;
    if (s == "max_prob") return DisproverPolicy::MaxProb;
    throw ParseError("\"disprover_policy\" must be \"first\" or \"max_prob\"");
}

/// Loads a session config; referenced channel/codebook paths are resolved
/// relative to the config file's directory.
inline LoadedSession load_session(const std::filesystem::path& path) {
    const json j = load_json(path);
    const auto base = path.parent_path();
    const auto resolve = [&](const std::string& ref) {
        std::filesystem::path p(ref);
        return p.is_absolute() ? p : base / p;
    };
    try {
        const auto mode = j.at("mode").get<std::string>();
        const auto gamma = parse_gamma(j.at("gamma"));
        const auto policy = parse_policy(j.value("disprover_policy", "first"));
        auto code = load_codebook(resolve(j.at("code").get<std::string>()));
        if (mode == "noiseless") {
            auto ch = load_channel(resolve(j.at("channel").get<std::string>()));
            auto cfg = NoiselessSessionConfig::make(std::move(ch.dmc), std::move(code.code), gamma, policy);
            return {SessionConfig(std::move(cfg)), mode, ch.hash, {}, code.hash, content_hash(j)};
        }
        if (mode == "noisy") {
            auto fwd = load_channel(resolve(j.at("forward_channel").get<std::string>()));
            auto bwd = load_channel(resolve(j.at("backward_channel").get<std::string>()));
            auto cfg =
                NoisySessionConfig::make(std::move(fwd.dmc), std::move(bwd.dmc), std::move(code.code), gamma, policy);
            return {SessionConfig(std::move(cfg)), mode, fwd.hash, bwd.hash, code.hash, content_hash(j)};
        }
        throw ParseError("\"mode\" must be \"noiseless\" or \"noisy\"");
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// --- result serialization ----------------------------------------------------

inline json disprover_to_json(const DisproverTriple& d) {
    return json{{"x_c", d.x_c}, {"x_e", d.x_e}, {"y_c", d.y_c}};
}

inline json decomposition_to_json(const Decomposition& d) {
    json support = json::array();
    for (const auto& [x, y] : d.support) support.push_back(json::array({x, y}));
    return json{{"a", d.a}, {"b", d.b}, {"support", std::move(support)}};
}

inline json witness_to_json(const WitnessCycle& w) {
    json edges = json::array();
    for (const auto& [x, y] : w.edges) edges.push_back(json::array({x, y}));
    return json{{"edges", std::move(edges)}, {"log_residual", w.log_residual}};
}

inline json channel_report_to_json(const ChannelReport& r) {
    json j;
    json disprovers = json::array();
    for (const auto& d : r.disprovers) disprovers.push_back(disprover_to_json(d));
    j["disprovers"] = std::move(disprovers);
    j["has_nonconfusable_pair"] = r.has_nonconfusable_pair;
    j["c0u_positive"] = r.c0u_positive;
    j["decomposable_on_support"] =
        r.decomposable_on_support ? decomposition_to_json(*r.decomposable_on_support) : json(nullptr);
    if (r.witness) j["witness_cycle"] = witness_to_json(*r.witness);
    return j;
}

inline json capacity_to_json(const CapacityResult& c) {
    json j;
    j["capacity_bits"] = c.capacity_bits;
    j["q_star"] = c.q_star;
    j["iterations"] = c.iterations;
    j["gap_bound"] = c.gap_bound;
    j["converged"] = c.converged;
    return j;
}

inline json quality_to_json(const CodeQuality& q) {
    json j;
    j["lambda"] = q.lambda;
    j["max_lambda"] = q.max_lambda;
    if (q.method == CodeQuality::Method::Exact) {
        j["method"] = "exact";
    } else {
        j["method"] = "monte_carlo";
        j["samples"] = q.mc_samples;
        j["seed"] = q.mc_seed;
    }
    return j;
}

inline json prediction_to_json(const Prediction& p) {
    json j;
    j["p"] = p.p;
    j["expected_rounds"] = p.expected_rounds;
    j["n_bar"] = p.n_bar;
    j["r_bar"] = p.r_bar;
    j["d_bar"] = p.d_bar;
    j["n"] = p.n;
    j["gamma"] = p.gamma;
    return j;
}

inline json stats_to_json(const SimStats& s) {
    json j;
    j["messages_sent"] = s.messages_sent;
    j["undetected_errors"] = s.undetected_errors;
    j["mean_rounds"] = s.mean_rounds;
    j["rounds_stddev"] = s.rounds_stddev;
    j["mean_delay_uses"] = s.mean_delay_uses;
    j["total_channel_uses"] = s.total_channel_uses;
    j["total_payload_bits"] = s.total_payload_bits;
    j["empirical_rate"] = s.empirical_rate;
    j["empirical_rate_codebits"] = s.empirical_rate_codebits;
    j["seed"] = s.seed;
    return j;
}

inline json round_record_to_json(std::uint64_t msg_index, const RoundRecord& r) {
    json j;
    j["msg_index"] = msg_index;
    j["round"] = r.round_index;
    j["forward_sent"] = r.forward_sent;
    j["forward_received"] = r.forward_received;
    j["decode"] = r.decode.is_erasure() ? json("erasure") : json(r.decode.message());
    if (r.decoded_state_bit) j["decoded_state_bit"] = static_cast<int>(*r.decoded_state_bit);
    j["backward_sent"] = r.backward_sent;
    j["backward_received"] = r.backward_received;
    j["tx_progressed"] = r.tx_progressed;
    j["rx_committed"] = r.rx_committed;
    return j;
}

inline json explore_report_to_json(const ExploreReport& r) {
    json j;
    j["depth"] = r.depth;
    j["executions"] = r.executions;
    j["liveness_ok"] = r.liveness_ok;
    json violations = json::array();
    for (const auto& v : r.violations) {
        json vt = json::array();
        for (const auto& rec : v.transcript) vt.push_back(round_record_to_json(0, rec));
        violations.push_back(json{{"kind", v.kind}, {"detail", v.detail}, {"transcript", std::move(vt)}});
    }
    j["violations"] = std::move(violations);
    return j;
}

// --- per-message CSV ---------------------------------------------------------

inline void write_stats_csv(std::ostream& out, const SimStats& s) {
    out << "msg_index,payload,rounds,delay_uses,committed_ok\n";
    for (std::size_t i = 0; i < s.per_message.size(); ++i) {
        const auto& pm = s.per_message[i];
        out << i << ',' << pm.payload << ',' << pm.rounds << ',' << pm.delay_uses << ','
            << (pm.committed_ok ? 1 : 0) << '\n';
    }
}

// --- predicted-vs-empirical comparison ----------------------------------------

struct ReportRow {
    std::string quantity;
    double predicted = 0.0;
    double empirical = 0.0;
    double delta = 0.0;
    bool pass = false;
};

/// Builds the comparison table from a stats artifact and a prediction
/// artifact. Both must reference the same channel and code hashes; the
/// stats must be nonempty. Rate and delay pass within 2% relative error,
/// mean rounds within 3 standard errors.
inline std::vector<ReportRow> build_report(const json& stats_j, const json& prediction_j) {
    for (const char* key : {"channel_hash", "code_hash"}) {
        if (!stats_j.contains(key) || !prediction_j.contains(key))
            throw IncompatibleArtifacts(std::string("both artifacts must carry ") + key);
        if (stats_j.at(key) != prediction_j.at(key))
            throw IncompatibleArtifacts(std::string(key) + " differs between stats and prediction");
    }
    const auto messages = stats_j.at("messages_sent").get<std::uint64_t>();
    if (messages == 0) throw IncompatibleArtifacts("stats artifact is empty");

    const double n_bar = prediction_j.at("n_bar").get<double>();
    const double r_bar = prediction_j.at("r_bar").get<double>();
    const double n_plus_gamma = static_cast<double>(prediction_j.at("n").get<std::size_t>() +
                                                    prediction_j.at("gamma").get<std::size_t>());
    const double predicted_rounds = n_bar / n_plus_gamma;

    const double mean_rounds = stats_j.at("mean_rounds").get<double>();
    const double rounds_stddev = stats_j.at("rounds_stddev").get<double>();
    const double mean_delay = stats_j.at("mean_delay_uses").get<double>();
    const double rate = stats_j.at("empirical_rate_codebits").get<double>();

    const auto rel_ok = [](double predicted, double empirical, double tol) {
        return std::abs(empirical - predicted) <= tol * std::abs(predicted);
    };

    std::vector<ReportRow> rows;
    const double se = rounds_stddev / std::sqrt(static_cast<double>(messages));
    rows.push_back({"mean_rounds", predicted_rounds, mean_rounds, mean_rounds - predicted_rounds,
                    std::abs(mean_rounds - predicted_rounds) <= 3.0 * se});
    rows.push_back({"mean_delay_uses", n_bar, mean_delay, mean_delay - n_bar, rel_ok(n_bar, mean_delay, 0.02)});
    rows.push_back({"rate_bits_per_use", r_bar, rate, rate - r_bar, rel_ok(r_bar, rate, 0.02)});
    rows.push_back({"undetected_errors", 0.0, static_cast<double>(stats_j.at("undetected_errors").get<std::uint64_t>()),
                    static_cast<double>(stats_j.at("undetected_errors").get<std::uint64_t>()),
                    stats_j.at("undetected_errors").get<std::uint64_t>() == 0});
    return rows;
}

inline void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << "quantity,predicted,empirical,delta,pass\n";
    for (const auto& r : rows)
        out << r.quantity << ',' << r.predicted << ',' << r.empirical << ',' << r.delta << ','
            << (r.pass ? 1 : 0) << '\n';
}

inline json report_to_json(const std::vector<ReportRow>& rows) {
    json arr = json::array();
    bool all_pass = true;
    for (const auto& r : rows) {
        arr.push_back(json{{"quantity", r.quantity},
                           {"predicted", r.predicted},
                           {"empirical", r.empirical},
                           {"delta", r.delta},
                           {"pass", r.pass}});
        all_pass = all_pass && r.pass;
    }
    return json{{"rows", std::move(arr)}, {"all_pass", all_pass}};
}

}  // namespace zefchan::io
