#pragma once

// Uniform planar array model: half-wavelength UPA steering vectors, LoS channel gain,
// and the per-link receive SNR / average achievable rate.

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "dia/common.hpp"
#include "dia/errors.hpp"
#include "dia/geometry.hpp"

namespace dia {

struct UpaConfig {
    int nx = 8;
    int ny = 8;

    int size() const { return nx * ny; }
};

using SteeringVector = Eigen::VectorXcd;

struct LinkBudget {
    double power_w = 1.0;
    double fc_hz = 28e9;
    double alpha = 1.0;    // power gain at unit reference distance
    double sigma_r = 1.0;  // receive noise std
};

/// Element (n_a, n_b) at flat index n_a * ny + n_b (row-major, n_b fastest), with phase
/// pi sin(el) (n_a cos(az) + n_b sin(az)) and modulus 1/sqrt(nx ny).
inline SteeringVector steering_vector(const Angles& angles, const UpaConfig& upa) {
    if (upa.nx < 1 || upa.ny < 1) throw DimensionError("steering_vector: UPA counts must be >= 1");
    const double scale = 1.0 / std::sqrt(static_cast<double>(upa.size()));
    const double s = kPi * std::sin(angles.elevation);
    const double cx = s * std::cos(angles.azimuth);
    const double cy = s * std::sin(angles.azimuth);
    SteeringVector v(upa.size());
    for (int a = 0; a < upa.nx; ++a) {
        for (int b = 0; b < upa.ny; ++b) {
            v(a * upa.ny + b) = std::polar(scale, a * cx + b * cy);
        }
    }
    return v;
}

/// |a^H f|^2.
inline double array_gain(const SteeringVector& a, const SteeringVector& f) {
    if (a.size() != f.size()) throw DimensionError("array_gain: steering vectors differ in length");
    return std::norm(a.dot(f));  // Eigen's dot conjugates the first argument
}

/// sqrt(N_t N_r p) alpha / d * exp(j 2 pi f_c d / c).
inline std::complex<double> channel_coefficient(double distance, const LinkBudget& budget, int n_t,
                                                int n_r) {
    if (!(distance > 0.0)) throw DomainError("channel_coefficient: distance must be positive");
    const double magnitude = std::sqrt(static_cast<double>(n_t) * n_r * budget.power_w) *
                             budget.alpha / distance;
    const double phase = std::fmod(2.0 * kPi * budget.fc_hz * distance / kSpeedOfLight, 2.0 * kPi);
    return std::polar(magnitude, phase);
}

/// Receive SNR of one downlink: p |A w^H b(true) a(true)^H f|^2 / sigma_r^2.
inline double link_snr(const Angles& true_angles, const Angles& tx_beam, const Angles& rx_beam,
                       double distance, const LinkBudget& budget, const UpaConfig& bs_tx,
                       const UpaConfig& uav_rx) {
    const auto coeff = channel_coefficient(distance, budget, bs_tx.size(), uav_rx.size());
    const auto a = steering_vector(true_angles, bs_tx);
    const auto f = steering_vector(tx_beam, bs_tx);
    const auto b = steering_vector(true_angles, uav_rx);
    const auto w = steering_vector(rx_beam, uav_rx);
    const std::complex<double> h = coeff * w.dot(b) * a.dot(f);
    return budget.power_w * std::norm(h) / (budget.sigma_r * budget.sigma_r);
}

/// SNR of a perfectly aligned link at the given distance (all array gains equal to one).
inline double aligned_snr(double distance, const LinkBudget& budget, const UpaConfig& bs_tx,
                          const UpaConfig& uav_rx) {
    const double mag = std::abs(channel_coefficient(distance, budget, bs_tx.size(), uav_rx.size()));
    return budget.power_w * mag * mag / (budget.sigma_r * budget.sigma_r);
}

struct SnrRate {
    std::vector<double> snr;
    double rate = 0.0;  // bps/Hz, averaged over links
};

inline SnrRate receive_snr_and_rate(std::span<const Angles> true_angles,
                                    std::span<const Angles> tx_beams,
                                    std::span<const Angles> rx_beams,
                                    std::span<const double> distances, const LinkBudget& budget,
                                    const UpaConfig& bs_tx, const UpaConfig& uav_rx) {
    const std::size_t k = true_angles.size();
    if (tx_beams.size() != k || rx_beams.size() != k || distances.size() != k) {
        throw DimensionError("receive_snr_and_rate: inconsistent link counts");
    }
    SnrRate out;
    out.snr.reserve(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double g =
            link_snr(true_angles[i], tx_beams[i], rx_beams[i], distances[i], budget, bs_tx, uav_rx);
        out.snr.push_back(g);
        sum += std::log2(1.0 + g);
    }
    out.rate = k == 0 ? 0.0 : sum / static_cast<double>(k);
    return out;
}

}  // namespace dia
