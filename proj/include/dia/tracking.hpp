#pragma once

// Extended Kalman filter over the constant-velocity state [p; v] with the echo measurement
// y = (delay, Doppler, azimuth, elevation).

#include <cmath>
#include <complex>

#include "dia/array.hpp"
#include "dia/common.hpp"
#include "dia/errors.hpp"
#include "dia/geometry.hpp"
#include "dia/scenario.hpp"
#include "dia/sensing.hpp"

namespace dia {

struct TrackState {
    DigitalId d_id;
    Vec6 x = Vec6::Zero();  // [p (m); v (m/s)]
    Mat6 m = Mat6::Identity();
};

struct NoiseModel {
    Mat6 q_s = Mat6::Zero();
    Vec4 q_m = Vec4::Ones();  // diagonal of the measurement covariance

    static NoiseModel from(double sigma_p, double sigma_v, const MeasurementVariances& var) {
        NoiseModel n;
        n.q_s.diagonal() << Vec3::Constant(sigma_p * sigma_p), Vec3::Constant(sigma_v * sigma_v);
        n.q_m << var[0], var[1], var[2], var[3];
        return n;
    }
};

struct Prediction {
    Vec6 one_step = Vec6::Zero();
    Vec6 two_step = Vec6::Zero();
    Angles angles_one;
    Angles angles_two;
};

/// G = [I, dt I; 0, I].
inline Mat6 transition_matrix(double dt) {
    Mat6 g = Mat6::Identity();
    g.topRightCorner<3, 3>() = dt * Eigen::Matrix3d::Identity();
    return g;
}

inline Mat6 initial_covariance(double sigma_pos = 1.0, double sigma_vel = 1.0) {
    Mat6 m = Mat6::Zero();
    m.diagonal() << Vec3::Constant(sigma_pos * sigma_pos), Vec3::Constant(sigma_vel * sigma_vel);
    return m;
}

inline TrackState track_from_truth(const UavTruth& truth) {
    TrackState t;
    t.d_id = truth.d_id;
    t.x << truth.position, truth.velocity;
    t.m = initial_covariance();
    return t;
}

/// Angles of a state as seen from the base station.
inline Angles state_angles(const Vec6& x, const Vec3& base) {
    return angles_from_position(x.head<3>() - base).angles;
}

inline Prediction predict(const TrackState& state, double dt, const Vec3& base = Vec3::Zero()) {
    const Mat6 g = transition_matrix(dt);
    Prediction p;
    p.one_step = g * state.x;
    p.two_step = g * p.one_step;
    p.angles_one = state_angles(p.one_step, base);
    p.angles_two = state_angles(p.two_step, base);
    return p;
}

/// h(x) = (2d/c, 2 v^T r f_c / (c d), az(r), el(r)) with r = p - p_b.
inline Vec4 measurement_function(const Vec6& x, const Vec3& base, double fc_hz) {
    const Vec3 rel = x.head<3>() - base;
    const Vec3 vel = x.tail<3>();
    const auto ra = angles_from_position(rel);
    const double d = ra.distance;
    return {2.0 * d / kSpeedOfLight, 2.0 * vel.dot(rel) * fc_hz / (kSpeedOfLight * d),
            ra.angles.azimuth, ra.angles.elevation};
}

/// Analytic 4x6 Jacobian of measurement_function. The delay row is m(i) = 2 r_i / (c |r|),
/// the Doppler velocity block is f_c m(i). The azimuth is undefined on the z axis.
inline Mat46 jacobian(const Vec6& x, const Vec3& base, double fc_hz) {
    const Vec3 r = x.head<3>() - base;
    const Vec3 v = x.tail<3>();
    const double d2 = r.squaredNorm();
    const double d = std::sqrt(d2);
    if (!(d > 0.0)) throw SingularGeometryError("jacobian: target at the base station");

    Mat46 h = Mat46::Zero();
    const Vec3 m = 2.0 * r / (kSpeedOfLight * d);
    h.block<1, 3>(0, 0) = m.transpose();

    const double k = 2.0 * fc_hz / kSpeedOfLight;
    h.block<1, 3>(1, 0) = (k * (v / d - r * (v.dot(r) / (d2 * d)))).transpose();
    h.block<1, 3>(1, 3) = (fc_hz * m).transpose();

    const double rho2 = r.x() * r.x() + r.y() * r.y();
    if (!(rho2 > 0.0)) throw SingularGeometryError("jacobian: target on the base-station z axis");
    const double rho = std::sqrt(rho2);
    h(2, 0) = r.y() / rho2;
    h(2, 1) = -r.x() / rho2;
    h(3, 0) = r.x() * r.z() / (d2 * rho);
    h(3, 1) = r.y() * r.z() / (d2 * rho);
    h(3, 2) = -rho / d2;
    return h;
}

/// eta(theta) = sqrt(N_t N_rb) beta u(az, theta) a^H(az, theta) a(az_hat, theta_hat): the
/// compensated noiseless echo as a function of the elevation.
inline Eigen::VectorXcd echo_response(double elevation, double azimuth, double elevation_hat,
                                      double azimuth_hat, double beta, const UpaConfig& tx,
                                      const UpaConfig& rx) {
    const auto a = steering_vector({azimuth, elevation}, tx);
    const auto a_hat = steering_vector({azimuth_hat, elevation_hat}, tx);
    const auto u = steering_vector({azimuth, elevation}, rx);
    const double scale = std::sqrt(static_cast<double>(tx.size()) * rx.size()) * beta;
    return scale * u * a.dot(a_hat);
}

/// d eta / d theta evaluated term by term as a double sum over the transmit grid of
/// psi_hat(i,j,1,1) * chi(i,j,z1,z2) / psi(i,j,z1,z2), one entry per receive element
/// (z1, z2) in row-major order, where psi(i,j,z1,z2) = exp(j pi sin(theta)
/// [(i - z1) cos(az) + (j - z2) sin(az)]) and chi = d ln psi / d theta. The leading minus
/// sign comes from differentiating 1/psi.
inline Eigen::VectorXcd partial_eta_theta(double elevation, double azimuth, double elevation_hat,
                                          double azimuth_hat, double beta, const UpaConfig& tx,
                                          const UpaConfig& rx) {
    using cd = std::complex<double>;
    const cd j_pi{0.0, kPi};
    const double s = std::sin(elevation);
    const double c = std::cos(elevation);
    const double s_hat = std::sin(elevation_hat);
    const double ca = std::cos(azimuth), sa = std::sin(azimuth);
    const double ca_hat = std::cos(azimuth_hat), sa_hat = std::sin(azimuth_hat);

    Eigen::VectorXcd out(rx.size());
    for (int z1 = 0; z1 < rx.nx; ++z1) {
        for (int z2 = 0; z2 < rx.ny; ++z2) {
            cd acc{0.0, 0.0};
            for (int i = 0; i < tx.nx; ++i) {
                for (int jj = 0; jj < tx.ny; ++jj) {
                    const double lattice = (i - z1) * ca + (jj - z2) * sa;
                    const cd psi_hat = std::exp(j_pi * s_hat * (i * ca_hat + jj * sa_hat));
                    const cd psi = std::exp(j_pi * s * lattice);
                    const cd chi = j_pi * c * lattice;
                    acc += psi_hat * chi / psi;
                }
            }
            out(z1 * rx.ny + z2) = -beta / std::sqrt(static_cast<double>(tx.size())) * acc;
        }
    }
    return out;
}

inline constexpr double kMaxInnovationCondition = 1e12;

/// One EKF cycle: predict with G, linearize at the prediction, gain, state and MSE update.
/// The angle innovations are wrapped to (-pi, pi]. Throws NumericalError when the
/// scale-normalized innovation covariance has condition number above 1e12; the caller then
/// keeps the prediction.
inline TrackState ekf_step(const TrackState& state, const Measurement& y, const NoiseModel& noise,
                           double dt, const Vec3& base, double fc_hz) {
    const Mat6 g = transition_matrix(dt);
    const Vec6 x_pred = g * state.x;
    const Mat46 h = jacobian(x_pred, base, fc_hz);
    const Mat6 m_pred = g * state.m * g.transpose() + noise.q_s;

    Eigen::Matrix4d s = h * m_pred * h.transpose();
    s.diagonal() += noise.q_m;

    // Condition is judged on the correlation form of S: delay (~1e-17 s^2) and Doppler
    // (~1e4 Hz^2) variances differ by 20 orders of magnitude in raw units.
    const Vec4 diag = s.diagonal();
    if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
        throw NumericalError("ekf_step: non-positive innovation variance");
    }
    const Vec4 inv_sd = diag.cwiseSqrt().cwiseInverse();
    const Eigen::Matrix4d corr = inv_sd.asDiagonal() * s * inv_sd.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(corr, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kMaxInnovationCondition) {
        throw NumericalError("ekf_step: innovation covariance is ill-conditioned");
    }

    Vec4 innovation;
    const Vec4 y_vec{y.delay, y.doppler, y.angles.azimuth, y.angles.elevation};
    innovation = y_vec - measurement_function(x_pred, base, fc_hz);
    innovation(2) = wrap_angle(innovation(2));
    innovation(3) = wrap_angle(innovation(3));

    // K = M H^T S^-1, solved in the normalized frame.
    const Eigen::Matrix<double, 6, 4> mht = m_pred * h.transpose();
    const Eigen::LDLT<Eigen::Matrix4d> ldlt(corr);
    const Eigen::Matrix<double, 6, 4> gain =
        (ldlt.solve((mht * inv_sd.asDiagonal()).transpose())).transpose() * inv_sd.asDiagonal();

    TrackState next = state;
    next.x = x_pred + gain * innovation;
    next.m = (Mat6::Identity() - gain * h) * m_pred;
    next.m = 0.5 * (next.m + next.m.transpose()).eval();
    return next;
}

}  // namespace dia
