#pragma once

// Echo-level measurement model. The matched-filter and ML angle estimators are represented
// by their Gaussian error statistics: every estimate is the true value plus zero-mean noise
// whose variance is inversely proportional to the echo SNR.

#include <algorithm>
#include <array>
#include <numeric>
#include <span>
#include <type_traits>
#include <vector>

#include "dia/common.hpp"
#include "dia/errors.hpp"
#include "dia/geometry.hpp"
#include "dia/scenario.hpp"

namespace dia {

struct SensingConfig {
    double g = 10.0;  // matched-filter gain
    double a1 = 6.7e-7;
    double a2 = 2e4;
    double a3 = 1.0;
    double a4 = 1.0;
    double sigma = 1.0;  // echo noise std
    double xi = 1.0;     // radar cross-section scale, m^2
    int n_t = 64;
    int n_rb = 64;

    void validate() const {
        if (!(g >= 1.0)) throw ConfigError("sensing.g must be >= 1");
        if (a1 < 0.0 || a2 < 0.0 || a3 < 0.0 || a4 < 0.0 || sigma < 0.0 || xi < 0.0) {
            throw ConfigError("sensing coefficients must be non-negative");
        }
        if (n_t < 1 || n_rb < 1) throw ConfigError("sensing array sizes must be >= 1");
    }
};

/// Variances of (delay s^2, Doppler Hz^2, azimuth rad^2, elevation rad^2).
using MeasurementVariances = std::array<double, 4>;

/// One anonymized echo estimate. Deliberately carries no identity of any kind.
struct Measurement {
    double delay = 0.0;    // s
    double doppler = 0.0;  // Hz
    Angles angles;
    MeasurementVariances variances{};
};

inline constexpr double kDelayFloor = 1e-9;  // s

/// beta = xi / (tau c).
inline double reflection_coefficient(double delay, double xi) {
    if (!(delay > 0.0)) throw DomainError("reflection_coefficient: delay must be positive");
    return xi / (delay * kSpeedOfLight);
}

/// sigma_i^2 = a_i^2 sigma^2 / (G N_t N_rb |beta|^2 |a^H f|^2 p) for delay and Doppler,
/// sigma_i^2 = a_i^2 sigma^2 / (G p) for the two angles.
inline MeasurementVariances noise_variances(double power_w, double beta, double beam_gain,
                                            const SensingConfig& cfg) {
    if (!(power_w > 0.0)) throw DomainError("noise_variances: transmit power must be positive");
    if (beam_gain < 0.0 || beam_gain > 1.0 + 1e-12) {
        throw DomainError("noise_variances: beam gain must lie in [0, 1]");
    }
    if (beam_gain == 0.0 || beta == 0.0) {
        throw UnobservableError("noise_variances: zero echo power, target unobservable");
    }
    const double s2 = cfg.sigma * cfg.sigma;
    const double echo = cfg.g * cfg.n_t * cfg.n_rb * beta * beta * beam_gain * power_w;
    const double angle = cfg.g * power_w;
    return {cfg.a1 * cfg.a1 * s2 / echo, cfg.a2 * cfg.a2 * s2 / echo, cfg.a3 * cfg.a3 * s2 / angle,
            cfg.a4 * cfg.a4 * s2 / angle};
}

/// Adds independent Gaussian errors to each echo parameter; the delay is floored at
/// kDelayFloor so downstream range and reflection estimates stay defined.
inline Measurement simulate_measurement(const Geometry& truth, const MeasurementVariances& var,
                                        Rng& rng) {
    Measurement m;
    m.variances = var;
    m.delay = std::max(truth.delay + gaussian(rng, std::sqrt(var[0])), kDelayFloor);
    m.doppler = truth.doppler + gaussian(rng, std::sqrt(var[1]));
    m.angles.azimuth = wrap_angle(truth.angles.azimuth + gaussian(rng, std::sqrt(var[2])));
    m.angles.elevation = truth.angles.elevation + gaussian(rng, std::sqrt(var[3]));
    return m;
}

/// One slot of echoes in shuffled order. `source` maps each measurement back to the target
/// it came from and exists only for scoring; association code receives `measurements` alone.
struct Scan {
    std::vector<Measurement> measurements;
    std::vector<std::size_t> source;
};

inline Scan simulate_scan(std::span<const Geometry> truths,
                          std::span<const MeasurementVariances> variances, Rng& rng) {
    if (truths.size() != variances.size()) {
        throw DimensionError("simulate_scan: one variance set per target required");
    }
    std::vector<Measurement> raw;
    raw.reserve(truths.size());
    for (std::size_t i = 0; i < truths.size(); ++i) {
        raw.push_back(simulate_measurement(truths[i], variances[i], rng));
    }
    Scan scan;
    scan.source.resize(truths.size());
    std::iota(scan.source.begin(), scan.source.end(), std::size_t{0});
    std::shuffle(scan.source.begin(), scan.source.end(), rng);
    scan.measurements.reserve(truths.size());
    for (std::size_t idx : scan.source) scan.measurements.push_back(raw[idx]);
    return scan;
}

/// Range and position (relative to the BS) implied by a measurement.
inline double measured_range(const Measurement& m) { return 0.5 * kSpeedOfLight * m.delay; }

inline Vec3 measured_relative_position(const Measurement& m) {
    return position_from_range_angles(measured_range(m), m.angles);
}

/// Radial speed implied by the Doppler estimate (positive when receding).
inline double measured_radial_speed(const Measurement& m, double fc_hz) {
    return m.doppler * kSpeedOfLight / (2.0 * fc_hz);
}

}  // namespace dia
