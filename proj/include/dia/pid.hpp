#pragma once

// Builds the measured and predicted P-IDs of one slot (location and radial-speed features)
// and the per-feature cross-similarity matrices consumed by the matching stage.

#include <span>
#include <vector>

#include "dia/identity.hpp"
#include "dia/sensing.hpp"
#include "dia/tracking.hpp"

namespace dia {

struct SlotPids {
    /// Indexed by kLocationFeature / kVelocityFeature. Rows: measurements, columns: tracks.
    std::vector<Eigen::MatrixXd> cross;
    /// The measured P-IDs; prevalence weights are derived from this set.
    FeatureSet measured;
};

/// Reference magnitudes appended to the location and radial-speed features.
struct FeatureScales {
    double range_m = 100.0;
    double speed_mps = 20.0;
};

/// Radial speed of a predicted state as seen from the base station.
inline double predicted_radial_speed(const Vec6& x, const Vec3& base) {
    const Vec3 rel = x.head<3>() - base;
    const double d = rel.norm();
    if (!(d > 0.0)) throw SingularGeometryError("predicted_radial_speed: state at the base station");
    return x.tail<3>().dot(rel) / d;
}

/// An echo yields a 3-D position but only the radial velocity component, so the velocity
/// P-ID is the radial speed: measured from the Doppler shift, predicted from the track.
inline SlotPids build_slot_pids(std::span<const Measurement> scan,
                                std::span<const Prediction> predictions, const Vec3& base,
                                double fc_hz, const FeatureScales& scales) {
    const std::size_t k = scan.size();
    if (predictions.size() != k) throw DimensionError("build_slot_pids: K mismatch");

    SlotPids out;
    out.measured.per_target.resize(k);
    std::vector<Feature> pred_pos(k), pred_vel(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.measured.per_target[i] = {
            position_feature(measured_relative_position(scan[i]), scales.range_m),
            radial_speed_feature(measured_radial_speed(scan[i], fc_hz), scales.speed_mps)};
    }
    for (std::size_t j = 0; j < k; ++j) {
        const Vec6& x = predictions[j].one_step;
        pred_pos[j] = position_feature(x.head<3>() - base, scales.range_m);
        pred_vel[j] = radial_speed_feature(predicted_radial_speed(x, base), scales.speed_mps);
    }

    Eigen::MatrixXd c_pos(k, k), c_vel(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            c_pos(i, j) = feature_similarity(out.measured.at(i, kLocationFeature), pred_pos[j]);
            c_vel(i, j) = feature_similarity(out.measured.at(i, kVelocityFeature), pred_vel[j]);
        }
    }
    out.cross = {std::move(c_pos), std::move(c_vel)};
    return out;
}

}  // namespace dia
