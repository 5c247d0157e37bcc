#pragma once

// Simulation configuration and its JSON file format. Keys mirror the struct layout:
// fleet.*, sensing.*, link.*, array.*, run.*.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dia/array.hpp"
#include "dia/errors.hpp"
#include "dia/matching.hpp"
#include "dia/scenario.hpp"
#include "dia/sensing.hpp"

namespace dia {

enum class Scheme { dia, classic_isac, location_isac, velocity_isac, feedback };

inline constexpr Scheme kAllSchemes[] = {Scheme::dia, Scheme::classic_isac, Scheme::location_isac,
                                         Scheme::velocity_isac, Scheme::feedback};

inline std::string_view scheme_name(Scheme s) {
    switch (s) {
        case Scheme::dia: return "dia";
        case Scheme::classic_isac: return "classic-isac";
        case Scheme::location_isac: return "location-isac";
        case Scheme::velocity_isac: return "velocity-isac";
        case Scheme::feedback: return "feedback";
    }
    return "?";
}

inline Scheme parse_scheme(std::string_view name) {
    for (Scheme s : kAllSchemes) {
        if (scheme_name(s) == name) return s;
    }
    throw ConfigError("unknown scheme '" + std::string(name) +
                      "' (expected dia, classic-isac, location-isac, velocity-isac, feedback)");
}

struct ArrayConfig {
    UpaConfig bs_tx{8, 8};
    UpaConfig bs_rx{8, 8};
    UpaConfig uav_rx{8, 8};
};

struct RunConfig {
    Scheme scheme = Scheme::dia;
    int trials = 40;
    std::uint64_t master_seed = 1;
    std::string out_dir = "out";
};

/// Simulation defaults for the two constants the sensing model leaves open: transmit power
/// and radar cross-section. Chosen so that angle estimates are the weak part of a single
/// echo while range and Doppler are sharp (see README).
inline constexpr double kDefaultPowerW = 30.0;
inline constexpr double kDefaultXi = 100.0;

inline SensingConfig default_sensing() {
    SensingConfig s;
    s.xi = kDefaultXi;
    return s;
}

struct SimConfig {
    FleetConfig fleet;
    SensingConfig sensing = default_sensing();
    LinkBudget link{kDefaultPowerW, 28e9, 1.0, 1.0};
    ArrayConfig array;
    RunConfig run;

    // Not part of the file format.
    Vec3 base = Vec3::Zero();
    SolverOptions solver;
    WeightRule weight_rule = WeightRule::dissimilarity;
    double feedback_gain = 1.0;  // matched-filter gain of the single-pilot feedback link
    int workers = 0;             // 0: hardware concurrency

    /// Sensing parameters with the array sizes taken from the array section.
    SensingConfig sensing_config() const {
        SensingConfig s = sensing;
        s.n_t = array.bs_tx.size();
        s.n_rb = array.bs_rx.size();
        return s;
    }

    void validate() const {
        fleet.validate();
        sensing_config().validate();
        if (!(link.power_w > 0.0) || !(link.fc_hz > 0.0) || !(link.alpha > 0.0) ||
            !(link.sigma_r > 0.0)) {
            throw ConfigError("link parameters must be positive");
        }
        for (const UpaConfig* u : {&array.bs_tx, &array.bs_rx, &array.uav_rx}) {
            if (u->nx < 1 || u->ny < 1) throw ConfigError("array dimensions must be >= 1");
        }
        if (run.trials < 1) throw ConfigError("run.trials must be >= 1");
        if (!(feedback_gain > 0.0)) throw ConfigError("feedback gain must be positive");
    }
};

namespace detail {

template <typename T>
void read_key(const nlohmann::json& section, const char* key, T& out, const std::string& path) {
    if (!section.contains(key)) return;
    try {
        out = section.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": bad value for '" + key + "': " + e.what());
    }
}

inline void reject_unknown(const nlohmann::json& section, std::initializer_list<const char*> keys,
                           const std::string& where, const std::string& path) {
    if (!section.is_object()) throw ConfigError(path + ": '" + where + "' must be an object");
    for (const auto& [k, _] : section.items()) {
        bool known = false;
        for (const char* key : keys) known = known || k == key;
        if (!known) throw ConfigError(path + ": unknown config key '" + where + "." + k + "'");
    }
}

}  // namespace detail

/// Overlays the keys present in `j` onto `cfg`; missing keys keep their current values.
inline void apply_json(const nlohmann::json& j, SimConfig& cfg, const std::string& path = "<json>") {
    using detail::read_key;
    using detail::reject_unknown;
    if (!j.is_object()) throw ConfigError(path + ": top level must be an object");
    reject_unknown(j, {"fleet", "sensing", "link", "array", "run"}, "<root>", path);
    if (j.contains("fleet")) {
        const auto& f = j["fleet"];
        reject_unknown(f, {"k", "radius_m", "v_min_mps", "v_max_mps", "h_dev_deg", "v_dev_deg",
                           "dt_s", "horizon", "sigma_p", "sigma_v"}, "fleet", path);
        read_key(f, "k", cfg.fleet.k, path);
        read_key(f, "radius_m", cfg.fleet.radius_m, path);
        read_key(f, "v_min_mps", cfg.fleet.v_min_mps, path);
        read_key(f, "v_max_mps", cfg.fleet.v_max_mps, path);
        read_key(f, "h_dev_deg", cfg.fleet.h_dev_deg, path);
        read_key(f, "v_dev_deg", cfg.fleet.v_dev_deg, path);
        read_key(f, "dt_s", cfg.fleet.dt_s, path);
        read_key(f, "horizon", cfg.fleet.horizon, path);
        read_key(f, "sigma_p", cfg.fleet.sigma_p, path);
        read_key(f, "sigma_v", cfg.fleet.sigma_v, path);
    }
    if (j.contains("sensing")) {
        const auto& s = j["sensing"];
        reject_unknown(s, {"g", "a1", "a2", "a3", "a4", "sigma", "xi"}, "sensing", path);
        read_key(s, "g", cfg.sensing.g, path);
        read_key(s, "a1", cfg.sensing.a1, path);
        read_key(s, "a2", cfg.sensing.a2, path);
        read_key(s, "a3", cfg.sensing.a3, path);
        read_key(s, "a4", cfg.sensing.a4, path);
        read_key(s, "sigma", cfg.sensing.sigma, path);
        read_key(s, "xi", cfg.sensing.xi, path);
    }
    if (j.contains("link")) {
        const auto& l = j["link"];
        reject_unknown(l, {"power_w", "fc_hz", "alpha", "sigma_r"}, "link", path);
        read_key(l, "power_w", cfg.link.power_w, path);
        read_key(l, "fc_hz", cfg.link.fc_hz, path);
        read_key(l, "alpha", cfg.link.alpha, path);
        read_key(l, "sigma_r", cfg.link.sigma_r, path);
    }
    if (j.contains("array")) {
        const auto& a = j["array"];
        reject_unknown(a, {"nt_x", "nt_y", "nrb_x", "nrb_y", "nru_x", "nru_y"}, "array", path);
        read_key(a, "nt_x", cfg.array.bs_tx.nx, path);
        read_key(a, "nt_y", cfg.array.bs_tx.ny, path);
        read_key(a, "nrb_x", cfg.array.bs_rx.nx, path);
        read_key(a, "nrb_y", cfg.array.bs_rx.ny, path);
        read_key(a, "nru_x", cfg.array.uav_rx.nx, path);
        read_key(a, "nru_y", cfg.array.uav_rx.ny, path);
    }
    if (j.contains("run")) {
        const auto& r = j["run"];
        reject_unknown(r, {"scheme", "trials", "master_seed", "out_dir"}, "run", path);
        std::string scheme{scheme_name(cfg.run.scheme)};
        read_key(r, "scheme", scheme, path);
        cfg.run.scheme = parse_scheme(scheme);
        read_key(r, "trials", cfg.run.trials, path);
        read_key(r, "master_seed", cfg.run.master_seed, path);
        read_key(r, "out_dir", cfg.run.out_dir, path);
    }
}

inline nlohmann::json to_json(const SimConfig& cfg) {
    nlohmann::json j;
    j["fleet"] = {{"k", cfg.fleet.k},
                  {"radius_m", cfg.fleet.radius_m},
                  {"v_min_mps", cfg.fleet.v_min_mps},
                  {"v_max_mps", cfg.fleet.v_max_mps},
                  {"h_dev_deg", cfg.fleet.h_dev_deg},
                  {"v_dev_deg", cfg.fleet.v_dev_deg},
                  {"dt_s", cfg.fleet.dt_s},
                  {"horizon", cfg.fleet.horizon},
                  {"sigma_p", cfg.fleet.sigma_p},
                  {"sigma_v", cfg.fleet.sigma_v}};
    j["sensing"] = {{"g", cfg.sensing.g},   {"a1", cfg.sensing.a1},       {"a2", cfg.sensing.a2},
                    {"a3", cfg.sensing.a3}, {"a4", cfg.sensing.a4},       {"sigma", cfg.sensing.sigma},
                    {"xi", cfg.sensing.xi}};
    j["link"] = {{"power_w", cfg.link.power_w},
                 {"fc_hz", cfg.link.fc_hz},
                 {"alpha", cfg.link.alpha},
                 {"sigma_r", cfg.link.sigma_r}};
    j["array"] = {{"nt_x", cfg.array.bs_tx.nx},   {"nt_y", cfg.array.bs_tx.ny},
                  {"nrb_x", cfg.array.bs_rx.nx},  {"nrb_y", cfg.array.bs_rx.ny},
                  {"nru_x", cfg.array.uav_rx.nx}, {"nru_y", cfg.array.uav_rx.ny}};
    j["run"] = {{"scheme", std::string(scheme_name(cfg.run.scheme))},
                {"trials", cfg.run.trials},
                {"master_seed", cfg.run.master_seed},
                {"out_dir", cfg.run.out_dir}};
    return j;
}

inline SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config file " + path.string() + ": " + e.what());
    }
    SimConfig cfg;
    apply_json(j, cfg, path.string());
    cfg.validate();
    return cfg;
}

}  // namespace dia
