#pragma once

// Command-line front end: simulate, sweep, compare and report.
// Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dia/config.hpp"
#include "dia/harness.hpp"
#include "dia/report.hpp"

namespace dia {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Default sweep grid: fleet sizes and speed upper bounds.
inline const std::vector<int> kSweepFleetSizes{10, 15, 20};
inline const std::vector<double> kSweepSpeedBounds{10.0, 20.0, 30.0};
inline const std::vector<Scheme> kSweepSchemes{Scheme::dia, Scheme::location_isac,
                                               Scheme::velocity_isac};

struct CliOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<std::string> out;
    std::optional<std::string> scheme;
    int jobs = 0;
    std::vector<int> sweep_k;
    std::vector<double> sweep_v;
};

namespace detail {

inline SimConfig resolve_config(const CliOptions& o) {
    SimConfig cfg = o.config.empty() ? SimConfig{} : load_config(o.config);
    if (o.seed) cfg.run.master_seed = *o.seed;
    if (o.trials) cfg.run.trials = *o.trials;
    if (o.out) cfg.run.out_dir = *o.out;
    if (o.scheme) cfg.run.scheme = parse_scheme(*o.scheme);
    cfg.workers = o.jobs;
    cfg.validate();
    return cfg;
}

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline int cmd_simulate(const CliOptions& o, std::ostream& out) {
    const SimConfig cfg = resolve_config(o);
    const auto results = run_trials(cfg, cfg.run.scheme);
    const Summary s = write_run(cfg.run.out_dir, cfg, cfg.run.scheme, results);
    out << s.scheme << ": accuracy " << s.accuracy_mean << " +/- " << s.accuracy_std
        << ", mean rate " << s.mean_rate << " bps/Hz -> " << cfg.run.out_dir << '\n';
    return kExitOk;
}

inline int cmd_compare(const CliOptions& o, std::ostream& out) {
    const SimConfig cfg = resolve_config(o);
    const std::filesystem::path dir = cfg.run.out_dir;
    std::vector<Summary> summaries;
    for (Scheme s : kAllSchemes) {
        summaries.push_back(write_run(dir / std::string(scheme_name(s)), cfg, s, run_trials(cfg, s)));
    }
    const double dia_q = summaries.front().final_quarter_rate;
    const double dia_mean = summaries.front().mean_rate;

    auto table = open_out(dir / "comparison.csv");
    table << "scheme,trials,accuracy_mean,accuracy_std,mean_rate_bps_hz,final_quarter_rate_bps_hz,"
             "mean_rate_ratio_to_dia,final_quarter_ratio_to_dia\n";
    for (const auto& s : summaries) {
        table << s.scheme << ',' << s.trials << ',' << fmt(s.accuracy_mean) << ','
              << fmt(s.accuracy_std) << ',' << fmt(s.mean_rate) << ',' << fmt(s.final_quarter_rate)
              << ',' << fmt(dia_mean > 0.0 ? s.mean_rate / dia_mean : 0.0) << ','
              << fmt(dia_q > 0.0 ? s.final_quarter_rate / dia_q : 0.0) << '\n';
    }
    finish(table, dir / "comparison.csv");

    // Plot-ready time series: one column per scheme.
    for (const auto& [name, pick] :
         {std::pair{"rates.csv", &Summary::rate_series}, std::pair{"angle_rmse.csv", &Summary::angle_rmse_series}}) {
        auto series = open_out(dir / name);
        series << "slot";
        for (const auto& s : summaries) series << ',' << s.scheme;
        series << '\n';
        const auto& slots = summaries.front().slots;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            series << slots[i];
            for (const auto& s : summaries) series << ',' << fmt((s.*pick)[i]);
            series << '\n';
        }
        finish(series, dir / name);
    }

    for (const auto& s : summaries) {
        out << s.scheme << ": accuracy " << s.accuracy_mean << ", mean rate " << s.mean_rate
            << ", final-quarter rate " << s.final_quarter_rate << '\n';
    }
    return kExitOk;
}

inline int cmd_sweep(const CliOptions& o, std::ostream& out) {
    const SimConfig base = resolve_config(o);
    const std::filesystem::path dir = base.run.out_dir;
    const auto ks = o.sweep_k.empty() ? kSweepFleetSizes : o.sweep_k;
    const auto vs = o.sweep_v.empty() ? kSweepSpeedBounds : o.sweep_v;
    const std::vector<Scheme> schemes =
        o.scheme ? std::vector<Scheme>{base.run.scheme} : kSweepSchemes;

    auto cells = open_out(dir / "sweep.csv");
    auto per_trial = open_out(dir / "sweep_trials.csv");
    cells << "k,v_max_mps,scheme,trials,accuracy_mean,accuracy_std,mean_rate_bps_hz\n";
    per_trial << "k,v_max_mps,scheme,trial,accuracy\n";
    for (int k : ks) {
        for (double v : vs) {
            SimConfig cfg = base;
            cfg.fleet.k = k;
            cfg.fleet.v_max_mps = v;
            cfg.validate();
            for (Scheme sc : schemes) {
                const auto rows = rows_from_trials(run_trials(cfg, sc));
                const Summary s = summarize(rows, std::string(scheme_name(sc)), cfg.run.trials);
                cells << k << ',' << fmt(v) << ',' << s.scheme << ',' << s.trials << ','
                      << fmt(s.accuracy_mean) << ',' << fmt(s.accuracy_std) << ','
                      << fmt(s.mean_rate) << '\n';
                for (std::size_t t = 0; t < s.trial_accuracy.size(); ++t) {
                    per_trial << k << ',' << fmt(v) << ',' << s.scheme << ',' << t << ','
                              << fmt(s.trial_accuracy[t]) << '\n';
                }
                out << "K=" << k << " v_max=" << v << ' ' << s.scheme << ": " << s.accuracy_mean << '\n';
            }
        }
    }
    finish(cells, dir / "sweep.csv");
    finish(per_trial, dir / "sweep_trials.csv");
    return kExitOk;
}

/// Rebuilds summary.json for the run directory itself or for each run directory below it.
inline int cmd_report(const CliOptions& o, std::ostream& out) {
    const std::filesystem::path dir = o.out ? *o.out : SimConfig{}.run.out_dir;
    std::vector<std::filesystem::path> runs;
    if (std::filesystem::exists(dir / kTrialsCsv)) {
        runs.push_back(dir);
    } else if (std::filesystem::is_directory(dir)) {
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            if (e.is_directory() && std::filesystem::exists(e.path() / kTrialsCsv)) runs.push_back(e.path());
        }
        std::sort(runs.begin(), runs.end());
    }
    if (runs.empty()) throw IoError("no " + std::string(kTrialsCsv) + " found under " + dir.string());
    for (const auto& r : runs) {
        const Summary s = rebuild_summary(r);
        out << r.string() << ": " << s.scheme << " accuracy " << s.accuracy_mean << '\n';
    }
    return kExitOk;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"Dual-identity-association ISAC beam-tracking simulator"};
    app.require_subcommand(1);
    CliOptions o;

    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON configuration file");
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--trials", o.trials, "number of Monte Carlo trials")->check(CLI::PositiveNumber);
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--scheme", o.scheme,
                        "dia, classic-isac, location-isac, velocity-isac or feedback");
        sub->add_option("--jobs", o.jobs, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    };
    auto* simulate = app.add_subcommand("simulate", "run one scheme over the configured trials");
    auto* sweep = app.add_subcommand("sweep", "accuracy over fleet size x speed bound");
    auto* compare = app.add_subcommand("compare", "all schemes on shared seeds");
    auto* report = app.add_subcommand("report", "recompute summaries from stored trials.csv files");
    for (auto* sub : {simulate, sweep, compare}) add_common(sub);
    sweep->add_option("--k", o.sweep_k, "fleet sizes (default 10 15 20)");
    sweep->add_option("--v-max", o.sweep_v, "speed upper bounds in m/s (default 10 20 30)");
    report->add_option("--out", o.out, "run directory (or a directory of run directories)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitConfig;
    }

    try {
        if (*simulate) return detail::cmd_simulate(o, out);
        if (*sweep) return detail::cmd_sweep(o, out);
        if (*compare) return detail::cmd_compare(o, out);
        return detail::cmd_report(o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace dia
