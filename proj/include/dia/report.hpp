#pragma once

// Result persistence: one CSV row per (trial, slot, UAV) and a JSON summary that is computed
// from those rows alone, so `report` can regenerate it from a stored CSV.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dia/errors.hpp"
#include "dia/geometry.hpp"
#include "dia/harness.hpp"

namespace dia {

inline constexpr const char* kCsvHeader =
    "trial,slot,uav,true_az,true_el,pred_az,pred_el,assigned_ok,snr_db,rate_bps_hz";

/// Angles in degrees; `pred_*` is the transmit-beam direction used for the link.
struct CsvRow {
    int trial = 0;
    int slot = 0;
    int uav = 0;
    double true_az = 0.0;
    double true_el = 0.0;
    double pred_az = 0.0;
    double pred_el = 0.0;
    bool assigned_ok = true;
    double snr_db = 0.0;
    double rate_bps_hz = 0.0;
};

inline std::vector<CsvRow> rows_from_trial(const TrialResult& res) {
    std::vector<CsvRow> rows;
    for (const auto& s : res.slots) {
        for (std::size_t u = 0; u < s.uavs.size(); ++u) {
            const auto& r = s.uavs[u];
            rows.push_back({res.trial, s.slot, static_cast<int>(u), rad2deg(r.true_angles.azimuth),
                            rad2deg(r.true_angles.elevation), rad2deg(r.beam_angles.azimuth),
                            rad2deg(r.beam_angles.elevation), r.assigned_ok,
                            10.0 * std::log10(r.snr), r.rate});
        }
    }
    return rows;
}

inline std::vector<CsvRow> rows_from_trials(const std::vector<TrialResult>& results) {
    std::vector<CsvRow> rows;
    for (const auto& r : results) {
        auto part = rows_from_trial(r);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

namespace detail {

// %.17g round-trips every double exactly, so re-read rows reproduce the summary bit for bit.
inline std::string format_row(const CsvRow& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g", r.trial,
                  r.slot, r.uav, r.true_az, r.true_el, r.pred_az, r.pred_el, r.assigned_ok ? 1 : 0,
                  r.snr_db, r.rate_bps_hz);
    return buf;
}

}  // namespace detail

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

inline void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows) {
    auto out = open_out(path);
    out << kCsvHeader << '\n';
    for (const auto& r : rows) out << detail::format_row(r) << '\n';
    finish(out, path);
}

inline std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open results file: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw IoError("unexpected CSV header in " + path.string());
    }
    std::vector<CsvRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        CsvRow r;
        int ok = 0;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> f;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() != 10) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 10 fields");
        }
        try {
            r.trial = std::stoi(f[0]);
            r.slot = std::stoi(f[1]);
            r.uav = std::stoi(f[2]);
            r.true_az = std::stod(f[3]);
            r.true_el = std::stod(f[4]);
            r.pred_az = std::stod(f[5]);
            r.pred_el = std::stod(f[6]);
            ok = std::stoi(f[7]);
            r.snr_db = std::stod(f[8]);
            r.rate_bps_hz = std::stod(f[9]);
        } catch (const std::exception&) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed field");
        }
        r.assigned_ok = ok != 0;
        rows.push_back(r);
    }
    return rows;
}

struct Summary {
    std::string scheme;
    int trials = 0;
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;             // population standard deviation over trials
    std::vector<double> trial_accuracy;    // by trial index; 1.0 for a trial without slots
    std::vector<int> vacuous_trials;
    double mean_rate = 0.0;                // bps/Hz over every link-slot
    double final_quarter_rate = 0.0;       // over the last quarter of the slots
    std::vector<int> slots;
    std::vector<double> rate_series;       // mean over trials and UAVs, per slot
    std::vector<double> angle_rmse_series; // degrees, transmit beam vs truth, per slot
};

/// Aggregates rows of `trials` trials (indices 0..trials-1).
inline Summary summarize(const std::vector<CsvRow>& rows, const std::string& scheme, int trials) {
    Summary s;
    s.scheme = scheme;
    s.trials = trials;
    std::vector<double> ok(static_cast<std::size_t>(trials), 0.0), n(static_cast<std::size_t>(trials), 0.0);
    struct SlotAcc {
        double rate = 0.0, sq = 0.0, n = 0.0;
    };
    std::map<int, SlotAcc> per_slot;
    for (const auto& r : rows) {
        if (r.trial < 0 || r.trial >= trials) {
            throw IoError("row references trial " + std::to_string(r.trial) + " outside 0.." +
                          std::to_string(trials - 1));
        }
        const auto t = static_cast<std::size_t>(r.trial);
        ok[t] += r.assigned_ok ? 1.0 : 0.0;
        n[t] += 1.0;
        auto& acc = per_slot[r.slot];
        acc.rate += r.rate_bps_hz;
        const double e = rad2deg(angular_separation({deg2rad(r.pred_az), deg2rad(r.pred_el)},
                                                    {deg2rad(r.true_az), deg2rad(r.true_el)}));
        acc.sq += e * e;
        acc.n += 1.0;
    }
    for (std::size_t t = 0; t < ok.size(); ++t) {
        if (n[t] == 0.0) {
            s.trial_accuracy.push_back(1.0);
            s.vacuous_trials.push_back(static_cast<int>(t));
        } else {
            s.trial_accuracy.push_back(ok[t] / n[t]);
        }
    }
    for (double a : s.trial_accuracy) s.accuracy_mean += a;
    s.accuracy_mean /= static_cast<double>(trials);
    for (double a : s.trial_accuracy) s.accuracy_std += (a - s.accuracy_mean) * (a - s.accuracy_mean);
    s.accuracy_std = std::sqrt(s.accuracy_std / static_cast<double>(trials));

    double total_rate = 0.0, total_n = 0.0;
    for (const auto& [slot, acc] : per_slot) {
        s.slots.push_back(slot);
        s.rate_series.push_back(acc.rate / acc.n);
        s.angle_rmse_series.push_back(std::sqrt(acc.sq / acc.n));
        total_rate += acc.rate;
        total_n += acc.n;
    }
    s.mean_rate = total_n > 0.0 ? total_rate / total_n : 0.0;

    const std::size_t first = s.slots.size() - s.slots.size() / 4;
    double q_rate = 0.0, q_n = 0.0;
    for (std::size_t i = first; i < s.slots.size(); ++i) {
        const auto& acc = per_slot.at(s.slots[i]);
        q_rate += acc.rate;
        q_n += acc.n;
    }
    s.final_quarter_rate = q_n > 0.0 ? q_rate / q_n : 0.0;
    return s;
}

inline nlohmann::json to_json(const Summary& s) {
    return {{"scheme", s.scheme},
            {"trials", s.trials},
            {"accuracy_mean", s.accuracy_mean},
            {"accuracy_std", s.accuracy_std},
            {"trial_accuracy", s.trial_accuracy},
            {"vacuous_trials", s.vacuous_trials},
            {"mean_rate_bps_hz", s.mean_rate},
            {"final_quarter_rate_bps_hz", s.final_quarter_rate},
            {"slots", s.slots},
            {"rate_series_bps_hz", s.rate_series},
            {"angle_rmse_series_deg", s.angle_rmse_series}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse " + path.string() + ": " + e.what());
    }
}

/// File names inside a run directory.
inline constexpr const char* kTrialsCsv = "trials.csv";
inline constexpr const char* kSummaryJson = "summary.json";
inline constexpr const char* kRunConfigJson = "config.json";

/// Writes config.json, trials.csv and summary.json into `dir`.
inline Summary write_run(const std::filesystem::path& dir, const SimConfig& cfg, Scheme scheme,
                         const std::vector<TrialResult>& results) {
    SimConfig used = cfg;
    used.run.scheme = scheme;
    used.run.out_dir = ".";
    write_json(dir / kRunConfigJson, to_json(used));
    const auto rows = rows_from_trials(results);
    write_csv(dir / kTrialsCsv, rows);
    const Summary s = summarize(rows, std::string(scheme_name(scheme)), cfg.run.trials);
    write_json(dir / kSummaryJson, to_json(s));
    return s;
}

/// Recomputes summary.json of a run directory from its config.json and trials.csv.
inline Summary rebuild_summary(const std::filesystem::path& dir) {
    SimConfig cfg;
    try {
        apply_json(read_json(dir / kRunConfigJson), cfg, (dir / kRunConfigJson).string());
    } catch (const ConfigError& e) {
        throw IoError(e.what());
    }
    const Summary s = summarize(read_csv(dir / kTrialsCsv), std::string(scheme_name(cfg.run.scheme)),
                                cfg.run.trials);
    write_json(dir / kSummaryJson, to_json(s));
    return s;
}

}  // namespace dia
