// Command-line front end: dataset ingestion, stump pools, policy runs,
// trajectory export and the invariant self-test.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctboost/checks.hpp"
#include "ctboost/ctboost.hpp"

namespace {

using namespace ctboost;

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_data = 3;
constexpr int exit_unfinished = 4;
constexpr int exit_numeric = 5;

struct RunConfig {
    std::string data_path;
    std::string policy;
    int max_rounds = 100;
    double horizon = 10.0;
    double cap = 10.0;
    double epsilon = 1e-3;
    std::string out_path = "trajectory.csv";
    std::string format = "csv";
    std::string summary_path;
    std::uint64_t seed = 0;
    int stump_resolution = 0;
    std::string weight_column;
    double sample_dt = 0.0;
};

struct RunArtifacts {
    Trajectory trajectory;
    StopReason stop = StopReason::max_rounds;
    int rounds = 0;
    Vec final_h;
    double sum_beta_sq = 0.0;
    std::optional<std::string> numeric_error;
};

std::vector<PartitionHypothesis> to_partitions(
    const std::vector<WeakHypothesis>& pool) {
    std::vector<PartitionHypothesis> parts;
    parts.reserve(pool.size());
    for (const WeakHypothesis& h : pool) {
        parts.push_back(PartitionHypothesis::from_binary(h));
    }
    return parts;
}

RunArtifacts from_flow(FlowRunResult run) {
    RunArtifacts a;
    a.stop = run.stop;
    a.rounds = run.rounds;
    a.final_h = run.state.h_values;
    for (double b : run.segment_betas) a.sum_beta_sq += b * b;
    a.numeric_error = run.error;
    a.trajectory = std::move(run.trajectory);
    return a;
}

// Discrete rounds rendered in the trajectory schema, one segment per round.
RunArtifacts from_discrete(const DiscreteRun& run, const TrainingSet& ts,
                           const WeightMeasure& w0,
                           const std::vector<WeakHypothesis>& pool,
                           const std::vector<PartitionHypothesis>* parts) {
    RunArtifacts a;
    a.stop = run.stop;
    a.rounds = static_cast<int>(run.rounds.size());
    a.final_h = run.ensemble.h_values();
    a.trajectory.w0 = w0.weights();

    auto control_of = [&](const RoundRecord& r) {
        if (r.crp_values.empty()) {
            return pool[static_cast<std::size_t>(r.hyp)];
        }
        const PartitionHypothesis& part =
            (*parts)[static_cast<std::size_t>(r.hyp)];
        Vec v(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) {
            v[i] = r.crp_values[part.leaf[i]];
        }
        return WeakHypothesis::real(std::move(v));
    };

    Ensemble acc(ts.size());
    WeightMeasure w = w0;
    double time = 0.0;
    for (const RoundRecord& r : run.rounds) {
        a.sum_beta_sq += r.beta * r.beta;
        const WeakHypothesis control = control_of(r);
        a.trajectory.samples.push_back({time, r.round, r.hyp,
                                        edge(control, w, ts),
                                        lyapunov_e(acc.h_values(), w0, ts),
                                        margin(acc, ts), w.weights()});
        a.trajectory.segments.push_back({r.hyp, time, r.t_weight,
                                         std::log(r.z_value), 0.0, 0.0});
        acc.add_term(r.t_weight, r.hyp, control);
        w = r.w_after;
        time += r.t_weight;
    }
    const double final_sigma =
        run.rounds.empty() ? 0.0 : edge(control_of(run.rounds.back()), w, ts);
    a.trajectory.samples.push_back({time, static_cast<int>(run.rounds.size()),
                                    -1, final_sigma,
                                    lyapunov_e(acc.h_values(), w0, ts),
                                    margin(acc, ts), w.weights()});
    return a;
}

nlohmann::json summary_json(const RunConfig& cfg, const RunArtifacts& art,
                            const TrainingSet& ts, const WeightMeasure& w0,
                            std::size_t pool_size) {
    const CombinedError err = combined_error(art.final_h, w0, ts);
    double norm = 0.0;
    for (const TrajectorySegment& s : art.trajectory.segments) {
        norm += s.duration;
    }
    nlohmann::json j{
        {"policy", cfg.policy},
        {"dataset", cfg.data_path},
        {"m", ts.size()},
        {"d", ts.dim()},
        {"pool_size", pool_size},
        {"rounds", art.rounds},
        {"stop_reason", to_string(art.stop)},
        {"final_training_error", err.w_minus + err.w_zero},
        {"final_margin", margin(art.final_h, norm, ts)},
        {"final_E", lyapunov_e(art.final_h, w0, ts)},
        {"sum_beta_sq", art.sum_beta_sq},
        {"error_bound", std::exp(-2.0 * art.sum_beta_sq)},
        {"total_weight", norm},
        {"seed", cfg.seed},
    };
    if (art.numeric_error) j["numeric_error"] = *art.numeric_error;
    return j;
}

void write_outputs(const RunConfig& cfg, const RunArtifacts& art,
                   const nlohmann::json& summary) {
    std::ofstream out(cfg.out_path);
    if (!out) throw CsvError("cannot write '" + cfg.out_path + "'");
    if (cfg.format == "json") {
        nlohmann::json j = trajectory_to_json(art.trajectory);
        j["summary"] = summary;
        out << j.dump(2) << "\n";
    } else {
        write_trajectory_csv(out, art.trajectory);
    }
    if (!cfg.summary_path.empty()) {
        std::ofstream s(cfg.summary_path);
        if (!s) throw CsvError("cannot write '" + cfg.summary_path + "'");
        s << summary.dump(2) << "\n";
    }
}

int cmd_run(const RunConfig& cfg) {
    const Dataset data = ingest_csv(cfg.data_path, cfg.weight_column);
    const WeightMeasure w0 = initial_measure(data);
    const StumpPool stumps = build_stumps(data.ts, cfg.stump_resolution);
    if (stumps.hypotheses.empty()) {
        throw CsvError("no usable stumps: every feature is constant");
    }
    for (int f : stumps.constant_features) {
        std::cerr << "warning: feature '" << data.feature_names.at(f)
                  << "' is constant, no stumps generated\n";
    }

    RecordOptions rec{cfg.sample_dt};
    RunArtifacts art;
    if (cfg.policy == "adaboost") {
        AdaboostPolicy p(stumps.hypotheses);
        art = from_flow(run_flow(p, data.ts, w0, cfg.max_rounds, rec));
    } else if (cfg.policy == "arcgv") {
        ArcgvPolicy p(stumps.hypotheses, cfg.cap);
        art = from_flow(run_flow(p, data.ts, w0, cfg.max_rounds, rec));
    } else if (cfg.policy == "crp") {
        CrpPolicy p(to_partitions(stumps.hypotheses), cfg.epsilon);
        art = from_flow(run_flow(p, data.ts, w0, cfg.max_rounds, rec));
    } else if (cfg.policy == "superboost") {
        SuperboostPolicy p(stumps.hypotheses, cfg.horizon);
        art = from_flow(run_flow(p, data.ts, w0, cfg.max_rounds, rec));
    } else if (cfg.policy == "geometric") {
        GeometricPolicy p(stumps.hypotheses);
        art = from_flow(run_flow(p, data.ts, w0, cfg.max_rounds, rec));
    } else if (cfg.policy == "discrete-adaboost") {
        art = from_discrete(
            run_discrete_adaboost(data.ts, stumps.hypotheses, w0,
                                  cfg.max_rounds),
            data.ts, w0, stumps.hypotheses, nullptr);
    } else if (cfg.policy == "discrete-arcgv") {
        art = from_discrete(
            run_discrete_arcgv(data.ts, stumps.hypotheses, w0, cfg.cap,
                               cfg.max_rounds),
            data.ts, w0, stumps.hypotheses, nullptr);
    } else if (cfg.policy == "discrete-crp") {
        const std::vector<PartitionHypothesis> parts =
            to_partitions(stumps.hypotheses);
        art = from_discrete(
            run_discrete_crp(data.ts, parts, w0, cfg.max_rounds, cfg.epsilon),
            data.ts, w0, stumps.hypotheses, &parts);
    } else {
        std::cerr << "error: unknown policy '" << cfg.policy << "'\n";
        return exit_config;
    }

    const nlohmann::json summary =
        summary_json(cfg, art, data.ts, w0, stumps.hypotheses.size());
    write_outputs(cfg, art, summary);

    std::cout << "policy:               " << cfg.policy << "\n"
              << "points x features:    " << data.ts.size() << " x "
              << data.ts.dim() << "\n"
              << "pool size:            " << stumps.hypotheses.size() << "\n"
              << "rounds:               " << art.rounds << "\n"
              << "stop reason:          " << to_string(art.stop) << "\n"
              << "final training error: "
              << summary["final_training_error"].get<double>() << "\n"
              << "final margin:         "
              << summary["final_margin"].get<double>() << "\n"
              << "final E:              " << summary["final_E"].get<double>()
              << "\n"
              << "sum beta^2:           " << art.sum_beta_sq << "\n"
              << "error bound:          "
              << summary["error_bound"].get<double>() << "\n"
              << "trajectory:           " << cfg.out_path << "\n";

    if (art.numeric_error) {
        std::cerr << "error: numeric range failure: " << *art.numeric_error
                  << " (partial trajectory written)\n";
        return exit_numeric;
    }
    return art.stop == StopReason::stopped_unfinished ? exit_unfinished
                                                      : exit_ok;
}

int cmd_pool_info(const std::string& path, int resolution,
                  const std::string& weight_column) {
    const Dataset data = ingest_csv(path, weight_column);
    const StumpPool stumps = build_stumps(data.ts, resolution);
    std::cout << "points x features: " << data.ts.size() << " x "
              << data.ts.dim() << "\n"
              << "stumps:            " << stumps.hypotheses.size() << "\n";
    for (int f : stumps.constant_features) {
        std::cout << "warning: constant feature '" << data.feature_names.at(f)
                  << "' contributes no stumps\n";
    }
    const std::size_t shown = std::min<std::size_t>(stumps.descriptors.size(), 40);
    for (std::size_t i = 0; i < shown; ++i) {
        const StumpDescriptor& d = stumps.descriptors[i];
        std::printf("  [%3zu] feature %d  threshold %.17g  polarity %+d\n", i,
                    d.feature, d.threshold, d.polarity);
    }
    if (shown < stumps.descriptors.size()) {
        std::cout << "  ... " << (stumps.descriptors.size() - shown)
                  << " more\n";
    }
    return exit_ok;
}

int cmd_selftest(std::uint64_t seed) {
    const std::vector<checks::CheckResult> results = checks::run_selftest(seed);
    std::size_t width = 0;
    for (const checks::CheckResult& r : results) {
        width = std::max(width, r.name.size());
    }
    int failures = 0;
    for (const checks::CheckResult& r : results) {
        if (!r.pass) ++failures;
        std::printf("%-*s  %s  %s\n", static_cast<int>(width), r.name.c_str(),
                    r.pass ? "PASS" : "FAIL", r.detail.c_str());
    }
    std::printf("%d/%zu checks passed\n",
                static_cast<int>(results.size()) - failures, results.size());
    return failures == 0 ? exit_ok : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continuous-time boosting engine"};
    app.require_subcommand(1);

    RunConfig cfg;
    CLI::App* run = app.add_subcommand("run", "run a control policy on a CSV dataset");
    run->add_option("--data", cfg.data_path, "CSV file, last column is the label")
        ->required();
    run->add_option("--policy", cfg.policy,
                    "adaboost|arcgv|crp|superboost|geometric|"
                    "discrete-adaboost|discrete-arcgv|discrete-crp")
        ->required();
    run->add_option("--max-rounds", cfg.max_rounds, "segment/round budget");
    run->add_option("--horizon", cfg.horizon, "time horizon (superboost)");
    run->add_option("--cap", cfg.cap, "weight cap (arc-gv)");
    run->add_option("--epsilon", cfg.epsilon,
                    "normalizer slack for one-sided leaves (crp)");
    run->add_option("--out", cfg.out_path, "trajectory output path");
    run->add_option("--format", cfg.format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    run->add_option("--summary", cfg.summary_path, "summary JSON path");
    run->add_option("--seed", cfg.seed, "seed recorded with the run");
    run->add_option("--stump-resolution", cfg.stump_resolution,
                    "thresholds per feature (0 = all midpoints)");
    run->add_option("--weight-column", cfg.weight_column,
                    "column holding the initial measure");
    run->add_option("--sample-dt", cfg.sample_dt,
                    "dense sampling period (0 = segment endpoints only)");

    std::string info_path, info_weight_column;
    int info_resolution = 0;
    CLI::App* info = app.add_subcommand("pool-info", "describe the stump pool");
    info->add_option("--data", info_path, "CSV file")->required();
    info->add_option("--stump-resolution", info_resolution,
                     "thresholds per feature (0 = all midpoints)");
    info->add_option("--weight-column", info_weight_column,
                     "column holding the initial measure");

    std::uint64_t selftest_seed = 0;
    CLI::App* selftest =
        app.add_subcommand("selftest", "run the invariant suite");
    selftest->add_option("--seed", selftest_seed, "seed for random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (run->parsed()) return cmd_run(cfg);
        if (info->parsed()) {
            return cmd_pool_info(info_path, info_resolution, info_weight_column);
        }
        if (selftest->parsed()) return cmd_selftest(selftest_seed);
    } catch (const CsvError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const std::range_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    }
    return exit_config;
}
