// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "meo/engine.hpp"
#include "meo/oracles.hpp"
#include "support.hpp"

using namespace meo;
using Catch::Approx;

TEST_CASE("Kepler bisection oracle")
{
    for (double M : {-2.0, 0.0, 0.7, 3.0}) CHECK(oracle::kepler_bisection(M, 0.0).eccentric_anomaly == Approx(M).margin(1e-12));

    // Plain Newton iteration from E0 = M.
    double E = 1.0;
    for (int i = 0; i < 20; ++i) E -= (E - 0.1 * std::sin(E) - 1.0) / (1.0 - 0.1 * std::cos(E));
    CHECK(std::abs(oracle::kepler_bisection(1.0, 0.1).eccentric_anomaly - E) < 1e-10);

    const auto hard = oracle::kepler_bisection(0.1, 0.9);
    CHECK(hard.iterations < 60);
    CHECK(std::abs(hard.eccentric_anomaly - 0.9 * std::sin(hard.eccentric_anomaly) - 0.1) < 1e-11);
}

TEST_CASE("brute-force SINR oracle")
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const CMatrix H = test::random_matrix(4, 4, rng);
        const CMatrix W = test::random_matrix(4, 4, rng);
        const auto ref = oracle::sinr_bruteforce(test::to_oracle(H), test::to_oracle(W), 0.2);
        const auto engine = measure_sinr(H, W, 0.2, {0.0, 1.0, 1, SinrMode::ClosedForm});
        for (std::size_t k = 0; k < 4; ++k) REQUIRE(std::abs(engine[k] - 10.0 * std::log10(ref[k])) < 1e-12);
    }

    const CMatrix H = test::random_matrix(4, 4, rng);
    const CMatrix W = compute_precoder(H, PrecoderMethod::ZF, 0.0, 4.0).W;
    for (double v : oracle::sinr_bruteforce(test::to_oracle(H), test::to_oracle(W), 0.0)) CHECK(std::isinf(v));

    oracle::Matrix G{2, 2, {1.0, 0.5, 0.25, 2.0}};
    oracle::Matrix I{2, 2, {1.0, 0.0, 0.0, 1.0}};
    const auto a = oracle::sinr_bruteforce(G, I, 0.1);
    oracle::Matrix Gs{2, 2, {2.0, 0.25, 0.5, 1.0}};
    const auto b = oracle::sinr_bruteforce(Gs, I, 0.1);
    CHECK(a[0] == Approx(b[1]));
    CHECK(a[1] == Approx(b[0]));
    CHECK(a[0] == Approx(1.0 / (0.25 + 0.1)));
}

TEST_CASE("pattern integration oracle")
{
    const auto iso = oracle::pattern_integration([](double, double) { return 1.0; }, 1.0);
    CHECK(std::abs(iso.directivity_dbi) < 0.01);

    // cos^q field over the front hemisphere: D = 2 (2q + 1).
    auto cos_field = [](double th, double) { return th < 0.5 * 3.141592653589793 ? std::pow(std::cos(th), 2.0) : 0.0; };
    const auto c1 = oracle::pattern_integration(cos_field, 1.0, 181, 9, 1e-6, 8);
    CHECK(std::abs(c1.directivity_dbi - 10.0 * std::log10(6.0)) < 0.1);
    CHECK(c1.richardson_change < 1e-6);

    auto rough = [](double th, double ph) { return std::fmod(1e6 * th * ph, 1.0); };
    CHECK_THROWS_AS(oracle::pattern_integration(rough, 1.0, 11, 11, 1e-12, 1), oracle::ConvergenceError);
}

TEST_CASE("Welch PSD oracle")
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 2.0);
    std::vector<double> x(1 << 16);
    for (double& v : x) v = g(rng);
    const double fs = 1000.0;
    const auto psd = oracle::welch_psd_at(x, fs, 1024, {50.0, 200.0, 400.0});
    for (double p : psd) CHECK(p == Approx(2.0 * 4.0 / fs).epsilon(0.1));

    std::vector<double> tone(1 << 14);
    for (std::size_t n = 0; n < tone.size(); ++n) tone[n] = std::cos(2.0 * 3.141592653589793 * 125.0 * n / fs);
    const auto t = oracle::welch_psd_at(tone, fs, 1024, {125.0, 300.0});
    CHECK(t[0] > 1e6 * t[1]);
    CHECK_THROWS(oracle::welch_psd_at(tone, fs, 1 << 15, {1.0}));
}

TEST_CASE("geometry oracles")
{
    CHECK(oracle::kepler_third_law_sma(5.0) == Approx(14443e3).margin(5e3));
    const auto fields = oracle::tle_line2_fields(kDefaultTleLine2);
    CHECK(fields.at("mean_motion_rev_per_day") == 5.001158);
    CHECK(fields.at("eccentricity") == 0.000242);
    const auto eq = oracle::geodetic_ecef(0.0, 0.0, 0.0);
    CHECK(eq[0] == 6378137.0);
}

TEST_CASE("golden record format")
{
    const std::vector<oracle::GoldenRecord> records{
        {"a.one", "PAPER", "", 2.0, 0.2},
        {"a.two", "DERIVED", "bisection", 1.8622957433108482, 1e-10},
        {"a.three", "TRIVIAL", "", -0.5, 0.0},
    };
    std::stringstream io;
    oracle::write_golden(io, records);
    const auto back = oracle::read_golden(io);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].id == records[i].id);
        CHECK(back[i].provenance == records[i].provenance);
        CHECK(back[i].oracle == records[i].oracle);
        CHECK(back[i].value == records[i].value);
        CHECK(back[i].tolerance == records[i].tolerance);
    }
    CHECK(oracle::check_golden(records).empty());

    auto bad = records;
    bad.push_back({"a.one", "GUESS", "", 0.0, 1.0});
    bad.push_back({"b", "DERIVED", "", 0.0, 1.0});
    const auto problems = oracle::check_golden(bad);
    CHECK(problems.size() == 3);

    std::stringstream broken("x | PAPER | - | 1\n");
    CHECK_THROWS(oracle::read_golden(broken));
}
