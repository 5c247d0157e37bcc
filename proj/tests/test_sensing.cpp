#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dia/scenario.hpp"
#include "dia/sensing.hpp"

using namespace dia;
using Catch::Approx;

// An echo carries only physical quantities: the measurement type has exactly the four
// parameters and their variances, and no digital identity.
template <typename T>
concept HasIdentity = requires(T t) { t.d_id; };
static_assert(!HasIdentity<Measurement>);
static_assert(sizeof(Measurement) == 2 * sizeof(double) + sizeof(Angles) + sizeof(MeasurementVariances));

namespace {

SensingConfig unit_sensing() {
    SensingConfig s;
    s.g = 1.0;
    s.n_t = s.n_rb = 1;
    return s;
}

}  // namespace

TEST_CASE("reflection coefficient", "[sensing]") {
    CHECK(reflection_coefficient(1.0 / kSpeedOfLight, 1.0) == Approx(1.0).epsilon(1e-12));
    CHECK(reflection_coefficient(1e-6, 0.0) == 0.0);
    CHECK(reflection_coefficient(200.0 / kSpeedOfLight, 1.0) == Approx(0.005).epsilon(1e-12));
    CHECK_THROWS_AS(reflection_coefficient(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(reflection_coefficient(-1e-7, 1.0), DomainError);
}

TEST_CASE("noise variances", "[sensing]") {
    const SensingConfig cfg{};

    SECTION("angle variance follows a^2 sigma^2 / (G p)") {
        const auto v = noise_variances(1.0, 0.01, 1.0, cfg);
        CHECK(v[2] == Approx(0.1).epsilon(1e-12));
        CHECK(v[3] == Approx(0.1).epsilon(1e-12));
    }
    SECTION("delay and Doppler variances against a direct evaluation") {
        const double beta = 0.005, gain = 0.3, p = 2.0;
        const auto v = noise_variances(p, beta, gain, cfg);
        const double echo = 10.0 * 64 * 64 * beta * beta * gain * p;
        CHECK(v[0] == Approx(6.7e-7 * 6.7e-7 / echo).epsilon(1e-12));
        CHECK(v[1] == Approx(2e4 * 2e4 / echo).epsilon(1e-12));
    }
    SECTION("doubling the power halves every variance") {
        const auto v1 = noise_variances(1.0, 0.01, 0.5, cfg);
        const auto v2 = noise_variances(2.0, 0.01, 0.5, cfg);
        for (int i = 0; i < 4; ++i) CHECK(v2[i] == Approx(v1[i] / 2.0).epsilon(1e-12));
    }
    SECTION("halving the beam gain doubles only delay and Doppler variances") {
        const auto v1 = noise_variances(1.0, 0.01, 0.8, cfg);
        const auto v2 = noise_variances(1.0, 0.01, 0.4, cfg);
        CHECK(v2[0] == Approx(2.0 * v1[0]).epsilon(1e-12));
        CHECK(v2[1] == Approx(2.0 * v1[1]).epsilon(1e-12));
        CHECK(v2[2] == v1[2]);
        CHECK(v2[3] == v1[3]);
    }
    SECTION("no echo power means no measurement") {
        CHECK_THROWS_AS(noise_variances(1.0, 0.01, 0.0, cfg), UnobservableError);
        CHECK_THROWS_AS(noise_variances(1.0, 0.0, 1.0, cfg), UnobservableError);
        CHECK_THROWS_AS(noise_variances(0.0, 0.01, 1.0, cfg), DomainError);
        CHECK_THROWS_AS(noise_variances(1.0, 0.01, 1.5, cfg), DomainError);
    }
}

TEST_CASE("simulated measurements", "[sensing]") {
    Geometry truth;
    truth.distance = 100.0;
    truth.delay = 200.0 / kSpeedOfLight;
    truth.doppler = 500.0;
    truth.angles = {0.0, 0.8};

    SECTION("zero variance reproduces the truth") {
        Rng rng(1);
        const auto m = simulate_measurement(truth, {0, 0, 0, 0}, rng);
        CHECK(m.delay == truth.delay);
        CHECK(m.doppler == truth.doppler);
        CHECK(m.angles.azimuth == truth.angles.azimuth);
        CHECK(m.angles.elevation == truth.angles.elevation);
        CHECK(measured_range(m) == Approx(100.0).epsilon(1e-14));
        CHECK(measured_radial_speed(m, 28e9) == Approx(500.0 * kSpeedOfLight / 56e9).epsilon(1e-14));
    }
    SECTION("a fixed seed reproduces the draw") {
        Rng a(9), b(9);
        const MeasurementVariances var{1e-18, 100.0, 0.01, 0.02};
        const auto ma = simulate_measurement(truth, var, a);
        const auto mb = simulate_measurement(truth, var, b);
        CHECK(ma.delay == mb.delay);
        CHECK(ma.doppler == mb.doppler);
        CHECK(ma.angles.azimuth == mb.angles.azimuth);
        CHECK(ma.angles.elevation == mb.angles.elevation);
    }
    SECTION("empirical variances match the model") {
        Rng rng(4);
        const auto var = noise_variances(1.0, 0.1, 1.0, SensingConfig{});
        const int n = 100000;
        double sd = 0.0, sf = 0.0, sa = 0.0, se = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto m = simulate_measurement(truth, var, rng);
            sd += (m.delay - truth.delay) * (m.delay - truth.delay);
            sf += (m.doppler - truth.doppler) * (m.doppler - truth.doppler);
            sa += m.angles.azimuth * m.angles.azimuth;
            se += (m.angles.elevation - truth.angles.elevation) * (m.angles.elevation - truth.angles.elevation);
        }
        CHECK(sd / n == Approx(var[0]).epsilon(0.03));
        CHECK(sf / n == Approx(var[1]).epsilon(0.03));
        CHECK(sa / n == Approx(0.1).epsilon(0.03));
        CHECK(se / n == Approx(0.1).epsilon(0.03));
    }
    SECTION("azimuth stays wrapped and the delay stays positive") {
        Rng rng(5);
        Geometry edge = truth;
        edge.angles.azimuth = kPi - 1e-3;
        edge.delay = 1e-12;
        for (int i = 0; i < 1000; ++i) {
            const auto m = simulate_measurement(edge, {1e-18, 1.0, 0.01, 0.0}, rng);
            REQUIRE(m.angles.azimuth > -kPi);
            REQUIRE(m.angles.azimuth <= kPi);
            REQUIRE(m.delay >= kDelayFloor);
        }
    }
}

TEST_CASE("a scan is an unlabeled permutation of the echoes", "[sensing]") {
    Rng fleet_rng(2), rng(3);
    FleetConfig fc;
    fc.k = 12;
    const auto fleet = init_fleet(fc, fleet_rng);
    std::vector<Geometry> geo;
    for (const auto& u : fleet) geo.push_back(true_geometry(u, Vec3::Zero(), 28e9));
    const std::vector<MeasurementVariances> var(geo.size(), MeasurementVariances{0, 0, 0, 0});

    const Scan scan = simulate_scan(geo, var, rng);
    REQUIRE(scan.measurements.size() == geo.size());
    std::vector<std::size_t> sorted = scan.source;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> iota(geo.size());
    std::iota(iota.begin(), iota.end(), std::size_t{0});
    CHECK(sorted == iota);
    CHECK(scan.source != iota);  // shuffled (probability 1/12! of a false failure)
    for (std::size_t i = 0; i < geo.size(); ++i) {
        CHECK(scan.measurements[i].delay == geo[scan.source[i]].delay);
        CHECK(scan.measurements[i].doppler == geo[scan.source[i]].doppler);
    }
    CHECK_THROWS_AS(simulate_scan(geo, std::span(var).first(3), rng), DimensionError);
}

TEST_CASE("sensing configuration validation", "[sensing]") {
    SensingConfig s = unit_sensing();
    CHECK_NOTHROW(s.validate());
    s.g = 0.5;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = unit_sensing();
    s.xi = -1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}
