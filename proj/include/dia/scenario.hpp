#pragma once

// Fleet initialization on a hemisphere around the base station and constant-velocity
// ground-truth evolution with Gaussian process noise.

#include <compare>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dia/common.hpp"
#include "dia/errors.hpp"
#include "dia/geometry.hpp"

namespace dia {

/// Digital identity: an opaque label known to the network, never carried by an echo.
struct DigitalId {
    std::uint64_t value = 0;
    auto operator<=>(const DigitalId&) const = default;
};

struct UavTruth {
    DigitalId d_id;
    Vec3 position = Vec3::Zero();  // m
    Vec3 velocity = Vec3::Zero();  // m/s
};

struct FleetConfig {
    int k = 10;
    double radius_m = 100.0;
    double v_min_mps = 8.0;
    double v_max_mps = 20.0;
    double h_dev_deg = 10.0;
    double v_dev_deg = 10.0;
    double dt_s = 0.02;
    int horizon = 500;
    double sigma_p = 0.02;  // m per slot
    double sigma_v = 0.2;   // m/s per slot

    void validate() const {
        if (k < 1) throw ConfigError("fleet.k must be >= 1");
        if (!(radius_m > 0.0)) throw ConfigError("fleet.radius_m must be positive");
        if (!(v_min_mps > 0.0) || v_min_mps > v_max_mps) {
            throw ConfigError("fleet speeds must satisfy 0 < v_min_mps <= v_max_mps");
        }
        if (!(dt_s > 0.0)) throw ConfigError("fleet.dt_s must be positive");
        if (horizon < 0) throw ConfigError("fleet.horizon must be >= 0");
        if (sigma_p < 0.0 || sigma_v < 0.0) throw ConfigError("fleet process noise must be >= 0");
        if (h_dev_deg < 0.0 || v_dev_deg < 0.0) throw ConfigError("fleet deviations must be >= 0");
    }
};

/// Base of the digital identity space; identities are base + index so they never
/// coincide with a container index by accident.
inline constexpr std::uint64_t kDigitalIdBase = 0xD1A0000000000000ULL;

/// Positions uniform on the upper hemisphere (uniform area measure). Headings point at
/// the base station in the ground plane, rotated by U(-h_dev, h_dev); the pitch
/// U(-v_dev, v_dev) is then applied to that heading.
inline std::vector<UavTruth> init_fleet(const FleetConfig& cfg, Rng& rng,
                                        const Vec3& base = Vec3::Zero()) {
    cfg.validate();
    std::vector<UavTruth> fleet;
    fleet.reserve(cfg.k);
    const double h_dev = deg2rad(cfg.h_dev_deg);
    const double v_dev = deg2rad(cfg.v_dev_deg);
    for (int i = 0; i < cfg.k; ++i) {
        const double cos_el = uniform(rng, 0.0, 1.0);
        const double az = uniform(rng, -kPi, kPi);
        const double speed = uniform(rng, cfg.v_min_mps, cfg.v_max_mps);
        const double heading_dev = uniform(rng, -h_dev, h_dev);
        const double pitch = uniform(rng, -v_dev, v_dev);

        const Angles dir{az, std::acos(cos_el)};
        UavTruth uav;
        uav.d_id = DigitalId{kDigitalIdBase + static_cast<std::uint64_t>(i)};
        uav.position = base + position_from_range_angles(cfg.radius_m, dir);

        // Ground-plane azimuth (same convention as Angles) from the UAV towards the BS.
        const Vec3 to_bs = base - uav.position;
        const double heading = (to_bs.x() == 0.0 && to_bs.y() == 0.0)
                                   ? 0.0
                                   : std::atan2(to_bs.x(), to_bs.y());
        const double h = heading + heading_dev;
        uav.velocity = speed * Vec3{std::cos(pitch) * std::sin(h), std::cos(pitch) * std::cos(h),
                                    std::sin(pitch)};
        fleet.push_back(uav);
    }
    return fleet;
}

/// x_n = G x_{n-1} + u with u ~ N(0, diag(sigma_p^2 I, sigma_v^2 I)). A UAV that would end
/// up below ground is reflected back above it.
inline UavTruth step_motion(const UavTruth& state, double dt, double sigma_p, double sigma_v,
                            Rng& rng) {
    UavTruth next = state;
    next.position = state.position + dt * state.velocity;
    for (int i = 0; i < 3; ++i) next.position(i) += gaussian(rng, sigma_p);
    for (int i = 0; i < 3; ++i) next.velocity(i) += gaussian(rng, sigma_v);
    if (next.position.z() < 0.0) {
        next.position.z() = -next.position.z();
        next.velocity.z() = -next.velocity.z();
    }
    return next;
}

/// Noiseless echo parameters of one target.
struct Geometry {
    double distance = 0.0;  // m
    double delay = 0.0;     // s, round trip
    double doppler = 0.0;   // Hz
    Angles angles;
};

inline Geometry true_geometry(const UavTruth& state, const Vec3& base, double fc_hz) {
    const Vec3 rel = state.position - base;
    const auto ra = angles_from_position(rel);  // throws on coincident positions
    Geometry g;
    g.distance = ra.distance;
    g.delay = 2.0 * ra.distance / kSpeedOfLight;
    g.doppler = 2.0 * state.velocity.dot(rel) * fc_hz / (kSpeedOfLight * ra.distance);
    g.angles = ra.angles;
    return g;
}

/// Writes the trajectory CSV header: t,d_id,px,py,pz,vx,vy,vz
inline void write_trajectory_header(std::ostream& os) { os << "t,d_id,px,py,pz,vx,vy,vz\n"; }

inline void write_trajectory_rows(std::ostream& os, double t, std::span<const UavTruth> fleet) {
    char buf[256];
    for (const auto& u : fleet) {
        std::snprintf(buf, sizeof buf, "%.6f,%llu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", t,
                      static_cast<unsigned long long>(u.d_id.value), u.position.x(),
                      u.position.y(), u.position.z(), u.velocity.x(), u.velocity.y(),
                      u.velocity.z());
        os << buf;
    }
}

}  // namespace dia
