#pragma once

// Trial orchestration: initial estimation, then per slot beam pointing, truth evolution,
// echo sensing, scheme-specific association, EKF update and link-rate accounting.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "dia/array.hpp"
#include "dia/config.hpp"
#include "dia/identity.hpp"
#include "dia/matching.hpp"
#include "dia/pid.hpp"
#include "dia/scenario.hpp"
#include "dia/sensing.hpp"
#include "dia/tracking.hpp"

namespace dia {

struct UavSlotRecord {
    Angles true_angles;
    Angles beam_angles;      // transmit beam pointed at this UAV's link
    Angles tracked_angles;   // after this slot's update
    Angles measured_angles;  // this UAV's own echo (or pilot) estimate
    bool assigned_ok = true;
    double snr = 0.0;
    double rate = 0.0;  // bps/Hz, zero when the link is mis-associated
};

struct SlotRecord {
    int slot = 0;
    std::vector<UavSlotRecord> uavs;  // indexed by link (D-ID order)
};

struct TrialResult {
    int trial = 0;
    std::uint64_t seed = 0;
    std::vector<SlotRecord> slots;
    int ekf_failures = 0;

    /// No slots were simulated; accuracy is then reported as 1.
    bool vacuous() const { return slots.empty(); }

    double accuracy() const {
        std::size_t ok = 0, n = 0;
        for (const auto& s : slots) {
            for (const auto& u : s.uavs) {
                ok += u.assigned_ok ? 1 : 0;
                ++n;
            }
        }
        return n == 0 ? 1.0 : static_cast<double>(ok) / static_cast<double>(n);
    }

    double mean_rate(std::size_t first_slot = 0) const {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = first_slot; i < slots.size(); ++i) {
            for (const auto& u : slots[i].uavs) {
                sum += u.rate;
                ++n;
            }
        }
        return n == 0 ? 0.0 : sum / static_cast<double>(n);
    }

    /// RMS great-circle error of the post-update track directions.
    double tracked_angle_rmse() const {
        return rms([](const UavSlotRecord& u) { return angular_separation(u.tracked_angles, u.true_angles); });
    }

    double measured_angle_rmse() const {
        return rms([](const UavSlotRecord& u) { return angular_separation(u.measured_angles, u.true_angles); });
    }

    double beam_angle_rmse() const {
        return rms([](const UavSlotRecord& u) { return angular_separation(u.beam_angles, u.true_angles); });
    }

private:
    template <typename F>
    double rms(F err) const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& s : slots) {
            for (const auto& u : s.uavs) {
                const double e = err(u);
                sum += e * e;
                ++n;
            }
        }
        return n == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(n));
    }
};

/// Mutable state of one trial. Index j of `truths`, `tracks`, `rx_beams` and
/// `feedback_angles` is link j, owned by digital identity j.
struct TrialState {
    std::vector<UavTruth> truths;
    std::vector<TrackState> tracks;
    std::vector<Angles> rx_beams;         // two-step predictions issued last slot
    std::vector<Angles> feedback_angles;  // feedback scheme: angles fed back last slot
    Rng truth_rng;
    Rng sense_rng;
    Rng solver_rng;
    int slot = 0;
    int ekf_failures = 0;
};

inline std::uint64_t trial_seed(std::uint64_t master_seed, int trial) {
    return derive_seed(master_seed, static_cast<std::uint64_t>(trial));
}

/// Initial estimation with perfect D-ID / P-ID association for a given fleet.
inline TrialState init_trial_from_fleet(std::vector<UavTruth> fleet, const SimConfig& cfg,
                                        std::uint64_t seed) {
    TrialState st;
    st.truth_rng.seed(derive_seed(seed, 1));
    st.sense_rng.seed(derive_seed(seed, 2));
    st.solver_rng.seed(derive_seed(seed, 3));
    st.truths = std::move(fleet);
    for (const auto& t : st.truths) {
        st.tracks.push_back(track_from_truth(t));
        st.rx_beams.push_back(predict(st.tracks.back(), cfg.fleet.dt_s, cfg.base).angles_one);
        st.feedback_angles.push_back(angles_from_position(t.position - cfg.base).angles);
    }
    return st;
}

inline TrialState init_trial(const SimConfig& cfg, std::uint64_t seed) {
    Rng fleet_rng(derive_seed(seed, 0));
    return init_trial_from_fleet(init_fleet(cfg.fleet, fleet_rng, cfg.base), cfg, seed);
}

/// Track j -> measurement index for the ISAC schemes.
inline std::vector<std::size_t> associate(Scheme scheme, std::span<const Measurement> scan,
                                          std::span<const Prediction> predictions,
                                          const SimConfig& cfg, Rng& solver_rng) {
    const std::size_t k = scan.size();
    std::vector<std::size_t> track_to_meas(k, 0);
    if (k == 0) return track_to_meas;

    if (scheme == Scheme::classic_isac) {
        // Beam-domain nearest neighbour: each track independently takes the echo closest in
        // direction to its predicted beam; no bijection and no identity features.
        for (std::size_t j = 0; j < k; ++j) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < k; ++i) {
                const double sep = angular_separation(scan[i].angles, predictions[j].angles_one);
                if (sep < best) {
                    best = sep;
                    track_to_meas[j] = i;
                }
            }
        }
        return track_to_meas;
    }

    const SlotPids pids = build_slot_pids(scan, predictions, cfg.base, cfg.link.fc_hz,
                                          {cfg.fleet.radius_m, cfg.fleet.v_max_mps});
    Eigen::MatrixXd s;
    switch (scheme) {
        case Scheme::dia: {
            const Eigen::VectorXd w = k >= 2 ? feature_weights(pids.measured, cfg.weight_rule)
                                             : Eigen::VectorXd::Constant(2, 0.5);
            s = harmonic_similarity(pids.cross, w);
            break;
        }
        case Scheme::location_isac: s = pids.cross[kLocationFeature]; break;
        case Scheme::velocity_isac: s = pids.cross[kVelocityFeature]; break;
        default: throw ConfigError("associate: scheme does not use echo association");
    }
    const Assignment a = solve_assignment(cost_from_similarity(s), solver_rng, cfg.solver);
    for (std::size_t i = 0; i < k; ++i) track_to_meas[a.perm[i]] = i;
    return track_to_meas;
}

namespace detail {

inline TrackState coast(const TrackState& t, const NoiseModel& noise, double dt) {
    const Mat6 g = transition_matrix(dt);
    TrackState out = t;
    out.x = g * t.x;
    out.m = g * t.m * g.transpose() + noise.q_s;
    return out;
}

}  // namespace detail

/// Advances the trial by one slot and returns its record.
inline SlotRecord run_slot(Scheme scheme, TrialState& st, const SimConfig& cfg) {
    const std::size_t k = st.truths.size();
    const double dt = cfg.fleet.dt_s;
    const SensingConfig sensing = cfg.sensing_config();
    const bool feedback = scheme == Scheme::feedback;

    // 1. Beam pointing from the predictions made with the previous slot's estimates.
    std::vector<Prediction> preds(k);
    std::vector<Angles> tx(k), rx(k);
    for (std::size_t j = 0; j < k; ++j) {
        preds[j] = predict(st.tracks[j], dt, cfg.base);
        if (feedback) {
            tx[j] = rx[j] = st.feedback_angles[j];
        } else {
            tx[j] = preds[j].angles_one;
            rx[j] = st.rx_beams[j];
            st.rx_beams[j] = preds[j].angles_two;
        }
    }

    // 2. Ground truth advances.
    for (auto& t : st.truths) {
        t = step_motion(t, dt, cfg.fleet.sigma_p, cfg.fleet.sigma_v, st.truth_rng);
    }
    std::vector<Geometry> geo(k);
    for (std::size_t i = 0; i < k; ++i) geo[i] = true_geometry(st.truths[i], cfg.base, cfg.link.fc_hz);

    SlotRecord rec;
    rec.slot = ++st.slot;
    rec.uavs.resize(k);
    std::vector<std::size_t> track_to_source(k);

    if (feedback) {
        // 3'. Single-pilot angle feedback carries the D-ID, so association is exact.
        const double var = sensing.a3 * sensing.a3 * sensing.sigma * sensing.sigma /
                           (cfg.feedback_gain * cfg.link.power_w);
        const double var_el = sensing.a4 * sensing.a4 * sensing.sigma * sensing.sigma /
                              (cfg.feedback_gain * cfg.link.power_w);
        for (std::size_t j = 0; j < k; ++j) {
            Angles a = geo[j].angles;
            a.azimuth = wrap_angle(a.azimuth + gaussian(st.sense_rng, std::sqrt(var)));
            a.elevation += gaussian(st.sense_rng, std::sqrt(var_el));
            st.feedback_angles[j] = a;
            rec.uavs[j].measured_angles = a;
            rec.uavs[j].tracked_angles = a;
            track_to_source[j] = j;
        }
    } else {
        // 3. Echo sensing; the delay/Doppler noise depends on the best beam illuminating
        //    each UAV, floored at the single-element gain 1/N_t.
        std::vector<SteeringVector> beams(k);
        for (std::size_t j = 0; j < k; ++j) beams[j] = steering_vector(tx[j], cfg.array.bs_tx);
        std::vector<MeasurementVariances> var(k);
        const double floor_gain = 1.0 / static_cast<double>(cfg.array.bs_tx.size());
        for (std::size_t i = 0; i < k; ++i) {
            const auto a = steering_vector(geo[i].angles, cfg.array.bs_tx);
            double gain = floor_gain;
            for (const auto& f : beams) gain = std::max(gain, array_gain(a, f));
            const double beta = reflection_coefficient(geo[i].delay, sensing.xi);
            var[i] = noise_variances(cfg.link.power_w, beta, std::min(gain, 1.0), sensing);
        }
        const Scan scan = simulate_scan(geo, var, st.sense_rng);
        for (std::size_t i = 0; i < k; ++i) {
            rec.uavs[scan.source[i]].measured_angles = scan.measurements[i].angles;
        }

        // 4. Association.
        const auto assoc = associate(scheme, scan.measurements, preds, cfg, st.solver_rng);

        // 5. Track updates with the associated echoes.
        for (std::size_t j = 0; j < k; ++j) {
            const Measurement& y = scan.measurements[assoc[j]];
            track_to_source[j] = scan.source[assoc[j]];
            const NoiseModel noise = NoiseModel::from(cfg.fleet.sigma_p, cfg.fleet.sigma_v, y.variances);
            try {
                st.tracks[j] = ekf_step(st.tracks[j], y, noise, dt, cfg.base, cfg.link.fc_hz);
            } catch (const NumericalError&) {
                st.tracks[j] = detail::coast(st.tracks[j], noise, dt);
                ++st.ekf_failures;
            } catch (const SingularGeometryError&) {
                st.tracks[j] = detail::coast(st.tracks[j], noise, dt);
                ++st.ekf_failures;
            }
            rec.uavs[j].tracked_angles = state_angles(st.tracks[j].x, cfg.base);
        }
    }

    // 6. Link accounting with the mismatch rule.
    for (std::size_t j = 0; j < k; ++j) {
        auto& u = rec.uavs[j];
        u.true_angles = geo[j].angles;
        u.beam_angles = tx[j];
        u.assigned_ok = track_to_source[j] == j;
        u.snr = link_snr(geo[j].angles, tx[j], rx[j], geo[j].distance, cfg.link, cfg.array.bs_tx,
                         cfg.array.uav_rx);
        u.rate = u.assigned_ok ? std::log2(1.0 + u.snr) : 0.0;
    }
    return rec;
}

inline TrialResult run_trial(const SimConfig& cfg, Scheme scheme, int trial, std::uint64_t seed) {
    cfg.validate();
    TrialState st = init_trial(cfg, seed);
    TrialResult res;
    res.trial = trial;
    res.seed = seed;
    res.slots.reserve(static_cast<std::size_t>(cfg.fleet.horizon));
    for (int n = 0; n < cfg.fleet.horizon; ++n) res.slots.push_back(run_slot(scheme, st, cfg));
    res.ekf_failures = st.ekf_failures;
    return res;
}

inline TrialResult run_trial(const SimConfig& cfg, std::uint64_t seed) {
    return run_trial(cfg, cfg.run.scheme, 0, seed);
}

/// Runs `trials` independent trials on a worker pool; results are ordered by trial index.
inline std::vector<TrialResult> run_trials(const SimConfig& cfg, Scheme scheme) {
    cfg.validate();
    const int n = cfg.run.trials;
    std::vector<TrialResult> results(static_cast<std::size_t>(n));
    int workers = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, n);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (int t = next++; t < n; t = next++) {
            try {
                results[static_cast<std::size_t>(t)] =
                    run_trial(cfg, scheme, t, trial_seed(cfg.run.master_seed, t));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

}  // namespace dia
