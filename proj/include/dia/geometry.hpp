#pragma once

#include <algorithm>
#include <cmath>

#include "dia/common.hpp"
#include "dia/errors.hpp"

namespace dia {

/// Beam direction. Azimuth is measured from the +y axis towards +x, elevation from zenith.
struct Angles {
    double azimuth = 0.0;    // rad, (-pi, pi]
    double elevation = 0.0;  // rad, [0, pi]
};

struct RangeAngles {
    double distance = 0.0;  // m
    Angles angles;
};

/// Inverts x = d sin(el) sin(az), y = d sin(el) cos(az), z = d cos(el).
/// On the z axis the azimuth is undefined and reported as 0.
inline RangeAngles angles_from_position(const Vec3& p) {
    const double d = p.norm();
    if (!(d > 0.0)) throw DomainError("angles_from_position: zero position vector");
    RangeAngles out;
    out.distance = d;
    out.angles.elevation = std::acos(std::clamp(p.z() / d, -1.0, 1.0));
    out.angles.azimuth = (p.x() == 0.0 && p.y() == 0.0) ? 0.0 : std::atan2(p.x(), p.y());
    return out;
}

/// Unit line-of-sight vector for the given direction.
inline Vec3 direction_from_angles(const Angles& a) {
    const double s = std::sin(a.elevation);
    return {s * std::sin(a.azimuth), s * std::cos(a.azimuth), std::cos(a.elevation)};
}

inline Vec3 position_from_range_angles(double distance, const Angles& a) {
    return distance * direction_from_angles(a);
}

/// Great-circle separation between two directions.
inline double angular_separation(const Angles& a, const Angles& b) {
    const double c = direction_from_angles(a).dot(direction_from_angles(b));
    return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace dia
