#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "spe/fourier.hpp"
#include "spe/rng.hpp"

using namespace spe;

TEST_CASE("lambert_w: fixed points and Newton oracle") {
    CHECK(lambert_w(0.0) == 0.0);
    CHECK(lambert_w(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(lambert_w(1.0) == doctest::Approx(oracle::newton_lambert_w(1.0)).epsilon(1e-13));
    CHECK(lambert_w(1.0) == doctest::Approx(0.567143290409784).epsilon(1e-12));
    CHECK_THROWS_AS(lambert_w(-1.0), std::invalid_argument);
}

TEST_CASE("lambert_w: defining identity over the working range") {
    Rng rng(99);
    for (int i = 0; i < 50; ++i) {
        const double x = std::exp(rng.uniform_in(-1.0, 14.0)) - 0.2;
        if (x < -std::exp(-1.0)) continue;
        const double w = lambert_w(x);
        CHECK(w * std::exp(w) == doctest::Approx(x).epsilon(1e-12));
    }
}

TEST_CASE("select_beta: known operating points") {
    const double b1 = select_beta(0.003, 0.1);
    const double ref1 = oracle::newton_lambert_w(3.0 / (M_PI * 0.01)) /
                        (4.0 * std::sin(0.003) * std::sin(0.003));
    CHECK(b1 == doctest::Approx(ref1).epsilon(1e-10));
    CHECK(b1 > 9.0e4);
    CHECK(b1 < 9.6e4);

    CHECK(select_beta(M_PI / 3, 10.0) == 1.0);

    const double b3 = select_beta(0.13, 0.1);
    CHECK(b3 > 49.0);
    CHECK(b3 < 51.0);

    CHECK_THROWS_AS(select_beta(0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(select_beta(0.1, 0.0), std::invalid_argument);
}

TEST_CASE("scaled_bessel_i: series path against the long-double oracle") {
    for (double beta : {2.0, 10.0, 30.0}) {
        const std::vector<double> si = scaled_bessel_i(beta, 40);
        for (int j = 0; j <= 40; ++j) {
            const double ref = oracle::scaled_bessel_series_ld(beta, j);
            if (ref < 1e-280) continue;
            CHECK(si[static_cast<std::size_t>(j)] ==
                  doctest::Approx(ref).epsilon(1e-10));
        }
    }
}

TEST_CASE("scaled_bessel_i: the two evaluation paths agree at the switch") {
    const std::vector<double> lo = scaled_bessel_i(700.0, 60);
    const std::vector<double> hi = scaled_bessel_i(700.0000001, 60);
    for (int j = 0; j <= 60; ++j)
        CHECK(lo[static_cast<std::size_t>(j)] ==
              doctest::Approx(hi[static_cast<std::size_t>(j)]).epsilon(1e-9));
}

TEST_CASE("scaled_bessel_i: large-argument normalization identity") {
    // e^{-x}(I_0 + 2 sum I_j) = 1.
    const std::vector<double> si = scaled_bessel_i(2.0e5, 6000);
    double acc = si[0];
    for (std::size_t j = 1; j < si.size(); ++j) acc += 2.0 * si[j];
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("wan_coefficients: reference values at beta = 10") {
    const CdfFourierSpec spec = wan_coefficients(10.0, 3);
    const double pref = std::sqrt(10.0 / (2.0 * M_PI));
    const double ref1 = pref * (oracle::scaled_bessel_series_ld(10.0, 0) +
                                oracle::scaled_bessel_series_ld(10.0, 1));
    CHECK(spec.magnitude(1) == doctest::Approx(ref1).epsilon(1e-12));
    const double ref7 = pref * oracle::scaled_bessel_series_ld(10.0, 3) / 7.0;
    CHECK(spec.magnitude(7) == doctest::Approx(ref7).epsilon(1e-12));
    CHECK(spec.magnitude(2) == 0.0);
    CHECK(spec.magnitude(4) == 0.0);
    CHECK_THROWS_AS(spec.magnitude(9), std::invalid_argument);
    // k = 0 coefficient is the 1/2 offset of the reconstruction.
    CHECK(heaviside_reconstruction(spec, 0.0) == 0.5);
}

TEST_CASE("wan_coefficients: oracle agreement for beta <= 30") {
    for (double beta : {3.0, 30.0}) {
        const CdfFourierSpec spec = wan_coefficients(beta, 25);
        const double pref = std::sqrt(beta / (2.0 * M_PI));
        for (int j = 0; j < 25; ++j) {
            const double ref = pref *
                               (oracle::scaled_bessel_series_ld(beta, j) +
                                oracle::scaled_bessel_series_ld(beta, j + 1)) /
                               (2.0 * j + 1.0);
            CHECK(spec.magnitudes[j] == doctest::Approx(ref).epsilon(1e-10));
        }
        const double last = pref * oracle::scaled_bessel_series_ld(beta, 25) / 51.0;
        CHECK(spec.magnitudes[25] == doctest::Approx(last).epsilon(1e-10));
    }
}

TEST_CASE("wan_coefficients: extreme parameters stay finite") {
    const CdfFourierSpec spec = wan_coefficients(1.0e6, 5000);
    CHECK(std::isfinite(spec.normalization));
    CHECK(spec.normalization > 0.0);
    for (int j = 0; j <= 5000; ++j) {
        CHECK(std::isfinite(spec.magnitudes[j]));
        CHECK(spec.magnitudes[j] > 0.0);
    }
    // Magnitudes decrease past the first few k.
    for (int j = 3; j < 5000; ++j) CHECK(spec.magnitudes[j + 1] <= spec.magnitudes[j]);
}

TEST_CASE("wan_coefficients: rejects underflowing tails") {
    CHECK_THROWS_AS(wan_coefficients(10.0, 4000), std::invalid_argument);
}

TEST_CASE("heaviside_reconstruction: symmetry and plateau") {
    const CdfFourierSpec spec = wan_coefficients(1.0e5, 2000);
    CHECK(std::abs(heaviside_reconstruction(spec, M_PI / 2) - 1.0) < 0.1);
    Rng rng(5);
    for (int i = 0; i < 40; ++i) {
        const double x = rng.uniform_in(-M_PI, M_PI);
        const double sum =
            heaviside_reconstruction(spec, x) + heaviside_reconstruction(spec, -x);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("select_d: reconstruction check drives d") {
    const double beta = select_beta(0.13, 0.1);
    const int d = select_d(beta, 0.1, 0.13);
    CHECK(d <= 64);
    CHECK(heaviside_band_error(wan_coefficients(beta, d), 0.13) <= 0.1);

    // A beta too small for the requested band fails cleanly instead of
    // surfacing a coefficient underflow.
    CHECK_THROWS_AS(select_d(1.0, 0.01, 0.003), std::runtime_error);
}

TEST_CASE("qeea_coefficients: bump normalization against quadrature") {
    // a = 1 / int_{-1}^{1} e^{-1/(1-x^2)} dx = 2.2523 (within rounding).
    const double integral =
        oracle::simpson([](double x) { return std::abs(x) < 1.0
                                                  ? std::exp(-1.0 / (1.0 - x * x))
                                                  : 0.0; },
                        -1.0, 1.0);
    CHECK(integral == doctest::Approx(0.443994).epsilon(1e-5));
    const double a = 1.0 / integral;
    CHECK(a == doctest::Approx(2.2523).epsilon(1e-4));

    // F_k -> sqrt(2/pi) * hhat(k eps/2) * sin(k eps/2)/k with hhat(0) = 1:
    // at tiny k the coefficient approaches sqrt(2/pi) * eps / 2.
    const QeeaFourierSpec spec = qeea_coefficients(3e-3, 4001, 1 << 14);
    CHECK(spec.coefficient(1) ==
          doctest::Approx(std::sqrt(2.0 / M_PI) * std::sin(1.5e-3) * 1.0).epsilon(1e-4));

    // Spot-check the transform against direct quadrature at a few k.
    for (int k : {101, 1001, 2501}) {
        const double omega = k * 3e-3 / 2.0;
        const double hhat =
            2.0 * a *
            oracle::simpson([&](double x) { return std::exp(-1.0 / (1.0 - x * x)) *
                                                   std::cos(omega * x); },
                            0.0, 1.0 - 1e-12);
        const double ref = std::sqrt(2.0 / M_PI) * hhat * std::sin(omega) / k;
        CHECK(spec.coefficient(k) == doctest::Approx(ref).epsilon(1e-6));
    }
}

TEST_CASE("qeea_coefficients: validation") {
    CHECK_THROWS_AS(qeea_coefficients(0.0, 100, 1 << 14), std::invalid_argument);
    CHECK_THROWS_AS(qeea_coefficients(1e-3, 1, 1 << 14), std::invalid_argument);
    CHECK_THROWS_AS(qeea_coefficients(1e-3, 100, 1000), std::invalid_argument);
    CHECK_THROWS_AS(qeea_coefficients(1e-3, 100, 1 << 13), std::invalid_argument);
}

TEST_CASE("fourier decay: CDF coefficients fall far below QEEA at matched accuracy") {
    const CdfFourierSpec cdf = wan_coefficients(1.0e5, 2000);
    const QeeaFourierSpec qeea = qeea_coefficients(3e-3, 4002, 1 << 14);
    const double cdf_ratio = cdf.magnitude(4001) / cdf.magnitude(1);
    const double qeea_ratio = std::abs(qeea.coefficient(4001)) / std::abs(qeea.coefficient(1));
    CHECK(cdf_ratio < 1e-10 * qeea_ratio);
}

TEST_CASE("importance_distribution: probabilities and signs") {
    const CdfFourierSpec spec = wan_coefficients(1.0e5, 2000);
    const ImportanceDistribution dist = importance_distribution(spec);
    CHECK(dist.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dist.signs.minCoeff() == 1.0);

    // Frozen oracle values from the long-double Bessel series; 2000 P_1 is
    // within four binomial sigmas of a 530-count realization.
    CHECK(dist.probabilities[0] == doctest::Approx(0.25713).epsilon(2e-4));
    CHECK(dist.probabilities[1] == doctest::Approx(0.08571).epsilon(2e-4));
    CHECK(std::abs(2000.0 * dist.probabilities[0] - 530.0) <
          4.0 * std::sqrt(2000.0 * 0.265 * 0.735));

    // sin(k eps/2) changes sign beyond k = 2 pi / eps, so a truncation past
    // that point carries both signs.
    const QeeaFourierSpec qspec = qeea_coefficients(0.05, 200, 1 << 14);
    const ImportanceDistribution qdist = importance_distribution(qspec);
    CHECK(qdist.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-12));
    bool has_negative = false;
    for (Eigen::Index i = 0; i < qdist.signs.size(); ++i)
        if (qdist.signs[i] < 0.0) has_negative = true;
    CHECK(has_negative); // sign changes exist and are carried separately
}

TEST_CASE("importance_distribution: single-coefficient support") {
    QeeaFourierSpec spec;
    spec.epsilon = 0.1;
    spec.N = 4;
    spec.alpha = 0.5;
    spec.M = 10;
    spec.coefficients = Eigen::Vector3d(0.0, -0.7, 0.0);
    const ImportanceDistribution dist = importance_distribution(spec);
    CHECK(dist.probabilities[1] == doctest::Approx(1.0));
    CHECK(dist.signs[1] == -1.0);
}

TEST_CASE("coefficient CSV export") {
    const CdfFourierSpec spec = wan_coefficients(50.0, 30);
    const ImportanceDistribution dist = importance_distribution(spec);
    std::ostringstream os;
    write_coefficients_csv(os, dist);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "k,magnitude,probability");
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 31); // odd k = 1..2d+1
}
