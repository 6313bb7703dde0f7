// zefchan: analyze channels, compute capacities, build and evaluate
// erasure-only codebooks, predict and simulate adaptive zero-error
// retransmission sessions, and exhaustively verify the noisy-feedback
// protocol on small instances.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "zefchan/zefchan.hpp"

namespace {

using zefchan::io::json;

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

std::vector<std::uint64_t> parse_payload_list(const std::string& csv) {
    std::vector<std::uint64_t> out;
    std::string tok;
    std::istringstream ss(csv);
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoull(tok));
    }
    return out;
}

struct PredictInputs {
    zefchan::CodeQuality quality;
    double p_indicator = 0.0;
    std::size_t n = 0;
    std::size_t gamma = 0;
    std::string channel_hash;
    std::string code_hash;
};

PredictInputs predict_inputs_from_session(const zefchan::io::LoadedSession& session, std::uint64_t budget) {
    PredictInputs in;
    in.channel_hash = session.channel_hash;
    in.code_hash = session.code_hash;
    if (const auto* cfg = std::get_if<zefchan::NoiselessSessionConfig>(&session.config)) {
        in.quality = zefchan::evaluate_exact(cfg->code, cfg->channel, budget);
        in.p_indicator = cfg->channel.w(cfg->disprover.x_c, cfg->disprover.y_c);
        in.n = cfg->code.blocklength();
        in.gamma = cfg->gamma;
    } else {
        const auto& noisy = std::get<zefchan::NoisySessionConfig>(session.config);
        in.quality = zefchan::evaluate_exact(noisy.code, noisy.forward, budget);
        in.p_indicator = noisy.backward.w(noisy.backward_disprover.x_c, noisy.backward_disprover.y_c);
        in.n = noisy.code.blocklength();
        in.gamma = noisy.gamma;
    }
    return in;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive zero-error communication toolkit"};
    app.require_subcommand(1);

    // ---- analyze ----------------------------------------------------------
    std::string analyze_channel_path;
    double analyze_tol = 1e-9;
    double analyze_support_eps = zefchan::kDefaultSupportEps;
    double analyze_decomp_tol = zefchan::kDefaultDecompTol;
    auto* analyze = app.add_subcommand("analyze", "disprovers, confusability, and decomposability of a channel");
    analyze->add_option("channel", analyze_channel_path, "channel JSON file")->required();
    analyze->add_option("--tol", analyze_tol, "capacity solver tolerance");
    analyze->add_option("--support-eps", analyze_support_eps, "Q* support threshold");
    analyze->add_option("--decomp-tol", analyze_decomp_tol, "log-space decomposition tolerance");

    // ---- capacity ---------------------------------------------------------
    std::string capacity_channel_path;
    double capacity_tol = 1e-9;
    std::size_t capacity_max_iter = 100000;
    auto* capacity = app.add_subcommand("capacity", "Shannon capacity by alternating maximization");
    capacity->add_option("channel", capacity_channel_path, "channel JSON file")->required();
    capacity->add_option("--tol", capacity_tol, "bracket tolerance in bits");
    capacity->add_option("--max-iter", capacity_max_iter, "iteration cap");

    // ---- code build / code eval --------------------------------------------
    auto* code = app.add_subcommand("code", "build or evaluate erasure-only codebooks");
    code->require_subcommand(1);

    std::string build_channel_path, build_strategy = "exhaustive", build_out;
    std::size_t build_n = 0, build_m = 0;
    std::uint64_t build_seed = 0, build_budget = 1'000'000;
    auto* build = code->add_subcommand("build", "search for a codebook minimizing max lambda");
    build->add_option("--channel", build_channel_path, "channel JSON file")->required();
    build->add_option("-n", build_n, "blocklength")->required();
    build->add_option("-M", build_m, "number of messages")->required();
    build->add_option("--strategy", build_strategy, "exhaustive | greedy | random");
    build->add_option("--seed", build_seed, "seed for the random strategy");
    build->add_option("--budget", build_budget, "combination budget (exhaustive) or draw count (random)");
    build->add_option("-o,--out", build_out, "output codebook JSON")->required();

    std::string eval_channel_path, eval_code_path;
    bool eval_exact = false;
    std::uint64_t eval_mc_samples = 0, eval_mc_seed = 0;
    auto* eval = code->add_subcommand("eval", "per-message erasure probabilities of a codebook");
    eval->add_option("--channel", eval_channel_path, "channel JSON file")->required();
    eval->add_option("--code", eval_code_path, "codebook JSON file")->required();
    eval->add_flag("--exact", eval_exact, "exact enumeration (default)");
    eval->add_option("--mc", eval_mc_samples, "Monte Carlo with this many samples per message");
    eval->add_option("--seed", eval_mc_seed, "Monte Carlo seed");

    // ---- predict ------------------------------------------------------------
    std::string predict_config_path, predict_channel_path, predict_code_path, predict_gamma = "auto";
    std::string predict_policy = "first";
    auto* predict_cmd = app.add_subcommand("predict", "closed-form rate/delay prediction");
    predict_cmd->add_option("--config", predict_config_path, "session config JSON");
    predict_cmd->add_option("--channel", predict_channel_path, "channel JSON (noiseless-feedback form)");
    predict_cmd->add_option("--code", predict_code_path, "codebook JSON (noiseless-feedback form)");
    predict_cmd->add_option("--gamma", predict_gamma, "\"auto\" or a positive integer");
    predict_cmd->add_option("--disprover-policy", predict_policy, "first | max_prob");

    // ---- simulate -----------------------------------------------------------
    std::string sim_config_path, sim_out, sim_transcript, sim_csv;
    std::uint64_t sim_messages = 0, sim_seed = 0, sim_max_rounds = 1'000'000;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo protocol simulation");
    simulate->add_option("--config", sim_config_path, "session config JSON")->required();
    simulate->add_option("--messages", sim_messages, "number of messages")->required();
    simulate->add_option("--seed", sim_seed, "master seed");
    simulate->add_option("-o,--out", sim_out, "stats JSON output path");
    simulate->add_option("--transcript", sim_transcript, "round-by-round JSONL output path");
    simulate->add_option("--csv", sim_csv, "per-message CSV output path");
    simulate->add_option("--max-rounds", sim_max_rounds, "round cap per message");

    // ---- verify -------------------------------------------------------------
    std::string verify_config_path, verify_payloads = "1,0";
    std::size_t verify_max_rounds = 4;
    std::uint64_t verify_budget = 100'000'000;
    auto* verify = app.add_subcommand("verify", "bounded exhaustive exploration of the noisy scheme");
    verify->add_option("--config", verify_config_path, "session config JSON (noisy mode)")->required();
    verify->add_option("--max-rounds", verify_max_rounds, "rounds to explore");
    verify->add_option("--payloads", verify_payloads, "comma-separated payload list");
    verify->add_option("--budget", verify_budget, "branching budget");

    // ---- report -------------------------------------------------------------
    std::string report_stats_path, report_prediction_path, report_csv_out, report_json_out;
    auto* report = app.add_subcommand("report", "compare simulation stats against a prediction");
    report->add_option("--stats", report_stats_path, "stats JSON from simulate")->required();
    report->add_option("--prediction", report_prediction_path, "prediction JSON from predict")->required();
    report->add_option("-o,--csv", report_csv_out, "comparison CSV output path");
    report->add_option("--json", report_json_out, "comparison JSON output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*analyze) {
            const auto ch = zefchan::io::load_channel(analyze_channel_path);
            const auto cap = zefchan::blahut_arimoto(ch.dmc, analyze_tol);
            const auto rep = zefchan::analyze_channel(ch.dmc, cap.q_star, analyze_support_eps, analyze_decomp_tol);
            json j = zefchan::io::channel_report_to_json(rep);
            j["name"] = ch.name;
            j["channel_hash"] = ch.hash;
            j["capacity_bits"] = cap.capacity_bits;
            j["q_star"] = cap.q_star;
            zefchan::io::seal(j);
            print_json(j);
            return 0;
        }

        if (*capacity) {
            const auto ch = zefchan::io::load_channel(capacity_channel_path);
            const auto cap = zefchan::blahut_arimoto(ch.dmc, capacity_tol, capacity_max_iter);
            json j = zefchan::io::capacity_to_json(cap);
            j["name"] = ch.name;
            j["channel_hash"] = ch.hash;
            zefchan::io::seal(j);
            print_json(j);
            return cap.converged ? 0 : 1;
        }

        if (*build) {
            const auto ch = zefchan::io::load_channel(build_channel_path);
            zefchan::SearchStrategy strategy;
            if (build_strategy == "exhaustive")
                strategy = zefchan::SearchStrategy::Exhaustive;
            else if (build_strategy == "greedy")
                strategy = zefchan::SearchStrategy::Greedy;
            else if (build_strategy == "random")
                strategy = zefchan::SearchStrategy::Random;
            else
                throw zefchan::ParseError("unknown strategy: " + build_strategy);
            const auto result = zefchan::search_code(ch.dmc, build_n, build_m, strategy, build_budget, build_seed);
            json j = zefchan::io::codebook_to_json(result.code);
            j["channel_hash"] = ch.hash;
            j["quality"] = zefchan::io::quality_to_json(result.quality);
            zefchan::io::seal(j);
            zefchan::io::write_json(build_out, j);
            print_json(j);
            return 0;
        }

        if (*eval) {
            const auto ch = zefchan::io::load_channel(eval_channel_path);
            const auto code_loaded = zefchan::io::load_codebook(eval_code_path);
            code_loaded.code.validate_against(ch.dmc);
            const auto quality = eval_mc_samples > 0
                                     ? zefchan::evaluate_mc(code_loaded.code, ch.dmc, eval_mc_samples, eval_mc_seed)
                                     : zefchan::evaluate_exact(code_loaded.code, ch.dmc);
            json j = zefchan::io::quality_to_json(quality);
            j["channel_hash"] = ch.hash;
            j["code_hash"] = code_loaded.hash;
            zefchan::io::seal(j);
            print_json(j);
            return 0;
        }

        if (*predict_cmd) {
            PredictInputs in;
            if (!predict_config_path.empty()) {
                in = predict_inputs_from_session(zefchan::io::load_session(predict_config_path),
                                                 zefchan::kDefaultEnumBudget);
            } else {
                if (predict_channel_path.empty() || predict_code_path.empty())
                    throw zefchan::ParseError("predict needs --config, or --channel and --code");
                auto ch = zefchan::io::load_channel(predict_channel_path);
                auto code_loaded = zefchan::io::load_codebook(predict_code_path);
                const auto gamma = zefchan::io::parse_gamma(predict_gamma == "auto" ? json("auto")
                                                                                    : json(std::stoll(predict_gamma)));
                auto cfg = zefchan::NoiselessSessionConfig::make(std::move(ch.dmc), std::move(code_loaded.code),
                                                                 gamma, zefchan::io::parse_policy(predict_policy));
                in.quality = zefchan::evaluate_exact(cfg.code, cfg.channel);
                in.p_indicator = cfg.channel.w(cfg.disprover.x_c, cfg.disprover.y_c);
                in.n = cfg.code.blocklength();
                in.gamma = cfg.gamma;
                in.channel_hash = ch.hash;
                in.code_hash = code_loaded.hash;
            }
            const auto prediction = zefchan::predict(in.quality, in.p_indicator, in.n, in.gamma);
            json j = zefchan::io::prediction_to_json(prediction);
            j["p_indicator"] = in.p_indicator;
            j["lambda"] = in.quality.lambda;
            j["channel_hash"] = in.channel_hash;
            j["code_hash"] = in.code_hash;
            zefchan::io::seal(j);
            print_json(j);
            return 0;
        }

        if (*simulate) {
            const auto session = zefchan::io::load_session(sim_config_path);
            std::ofstream transcript_out;
            zefchan::TranscriptSink sink;
            if (!sim_transcript.empty()) {
                transcript_out.open(sim_transcript);
                if (!transcript_out) throw zefchan::ParseError("cannot write " + sim_transcript);
                sink = [&](std::uint64_t i, const zefchan::RoundRecord& rec) {
                    transcript_out << zefchan::io::round_record_to_json(i, rec).dump() << '\n';
                };
            }
            const auto stats = zefchan::monte_carlo(session.config, sim_messages, sim_seed, sim_max_rounds, sink);
            json j = zefchan::io::stats_to_json(stats);
            j["mode"] = session.mode;
            j["channel_hash"] = session.channel_hash;
            if (!session.backward_channel_hash.empty()) j["backward_channel_hash"] = session.backward_channel_hash;
            j["code_hash"] = session.code_hash;
            j["config_hash"] = session.config_hash;
            zefchan::io::seal(j);
            if (!sim_csv.empty()) {
                std::ofstream csv(sim_csv);
                if (!csv) throw zefchan::ParseError("cannot write " + sim_csv);
                zefchan::io::write_stats_csv(csv, stats);
            }
            if (!sim_out.empty()) zefchan::io::write_json(sim_out, j);
            print_json(j);
            return stats.undetected_errors == 0 ? 0 : 1;
        }

        if (*verify) {
            const auto session = zefchan::io::load_session(verify_config_path);
            const auto* cfg = std::get_if<zefchan::NoisySessionConfig>(&session.config);
            if (!cfg) throw zefchan::ParseError("verify requires a noisy-mode session config");
            const auto payloads = parse_payload_list(verify_payloads);
            const auto rep = zefchan::explore_exhaustive(*cfg, payloads, verify_max_rounds, verify_budget);
            json j = zefchan::io::explore_report_to_json(rep);
            j["config_hash"] = session.config_hash;
            zefchan::io::seal(j);
            print_json(j);
            return (rep.violations.empty() && rep.liveness_ok) ? 0 : 1;
        }

        if (*report) {
            const json stats_j = zefchan::io::load_json(report_stats_path);
            const json pred_j = zefchan::io::load_json(report_prediction_path);
            const auto rows = zefchan::io::build_report(stats_j, pred_j);
            json j = zefchan::io::report_to_json(rows);
            j["stats"] = stats_j;
            j["prediction"] = pred_j;
            j["stats_hash"] = zefchan::io::content_hash(stats_j);
            j["prediction_hash"] = zefchan::io::content_hash(pred_j);
            zefchan::io::seal(j);
            if (!report_csv_out.empty()) {
                std::ofstream csv(report_csv_out);
                if (!csv) throw zefchan::ParseError("cannot write " + report_csv_out);
                zefchan::io::write_report_csv(csv, rows);
            }
            if (!report_json_out.empty()) zefchan::io::write_json(report_json_out, j);
            print_json(j);
            return j.at("all_pass").get<bool>() ? 0 : 1;
        }
    } catch (const zefchan::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
