// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "meo/antenna.hpp"
#include "meo/oracles.hpp"
#include "meo/scenario.hpp"

using namespace meo;
using Catch::Approx;

namespace {

// Element-by-element sum of the steered excitation toward `d`.
cplx af_bruteforce(const ArrayConfig& c, const BeamSteering& s, const Direction& d)
{
    const auto w = s.weights(c);
    const double kd = kTwoPi * c.spacing_wl;
    cplx acc{};
    std::size_t idx = 0;
    for (int m = 0; m < c.n_x; ++m) {
        for (int n = 0; n < c.n_y; ++n, ++idx) {
            const double xm = m - 0.5 * (c.n_x - 1);
            const double yn = n - 0.5 * (c.n_y - 1);
            acc += w[idx] * std::polar(1.0, kd * (xm * d.u() + yn * d.v()));
        }
    }
    return acc;
}

Direction from_uv(double u, double v)
{
    return {std::asin(std::min(1.0, std::hypot(u, v))), std::atan2(v, u)};
}

} // namespace

TEST_CASE("element pattern")
{
    CHECK(element_gain(0.0, 0.2906) == 1.0);
    CHECK(element_gain(60.0 * kDeg, 1.0) == Approx(0.5).epsilon(1e-12));
    CHECK(element_gain(0.5 * kPi, 1.0) == 0.0);
    CHECK(element_gain(2.0, 1.0) == 0.0);
    for (double th = 0.0; th < 0.5 * kPi; th += 0.01) REQUIRE(element_gain(th, 0.2906) <= 1.0);
    CHECK(10.0 * std::log10(element_directivity(0.2906)) == Approx(5.0).margin(0.05));
}

TEST_CASE("element directivity agrees with hemisphere quadrature")
{
    for (double q : {0.2906, 1.0, 3.0}) {
        auto power = [q](double th, double) { return std::pow(element_gain(th, q), 2.0); };
        const auto r = oracle::pattern_integration(power, 1.0, 91, 5, 1e-6, 8, true, 0.5 * kPi);
        CHECK(std::abs(r.directivity_dbi - 10.0 * std::log10(element_directivity(q))) < 0.1);
    }
}

TEST_CASE("array factor matches the element-by-element sum")
{
    const ArrayConfig c;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uv(-0.5, 0.5);
    for (int i = 0; i < 40; ++i) {
        const BeamSteering s{0, 0.2 * uv(rng), 0.2 * uv(rng)};
        const Direction d = from_uv(uv(rng), uv(rng));
        const cplx lib = array_factor(c, s, d);
        const cplx ref = af_bruteforce(c, s, d);
        REQUIRE(std::abs(lib - ref) < 1e-9 * 2500.0);
    }
    const cplx broadside = array_factor(c, {0, 0.0, 0.0}, {0.0, 0.0});
    CHECK(std::abs(broadside) == Approx(2500.0).epsilon(1e-12));
}

TEST_CASE("steering weights are phase only")
{
    const ArrayConfig c;
    const BeamSteering s{2, 0.08, -0.03};
    for (const cplx& w : s.weights(c)) REQUIRE(std::abs(w) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("array factor is symmetric about the steering direction")
{
    const ArrayConfig c;
    const BeamSteering s{0, 0.05, 0.02};
    for (double du : {0.001, 0.013, 0.07}) {
        for (double dv : {0.0, 0.004, -0.02}) {
            const double plus = std::abs(array_factor(c, s, from_uv(s.u0 + du, s.v0 + dv)));
            const double minus = std::abs(array_factor(c, s, from_uv(s.u0 - du, s.v0 + dv)));
            REQUIRE(plus == Approx(minus).epsilon(1e-9));
        }
    }
}

TEST_CASE("half-power beamwidth and principal cuts")
{
    const ArrayConfig c;
    const BeamSteering s{0, 0.0, 0.0};
    const double cut0 = half_power_beamwidth_deg(c, s, 0.0);
    const double cut90 = half_power_beamwidth_deg(c, s, 0.5 * kPi);
    CHECK(cut0 == Approx(2.0).margin(0.2));
    CHECK(cut90 == Approx(2.0).margin(0.2));
    CHECK(std::abs(cut0 - cut90) / cut0 < 0.05);
}

TEST_CASE("peak gain, cross-pol floor and aperture bound")
{
    const ArrayConfig c;
    const BeamSteering s{0, 0.0, 0.0};
    const double aperture_dbi = 10.0 * std::log10(aperture_directivity(c));
    CHECK(aperture_dbi == Approx(10.0 * std::log10(4.0 * kPi * 625.0)).epsilon(1e-12));
    CHECK(aperture_dbi == Approx(38.9).margin(0.5));

    const PatternSample peak = pattern_sample(c, s, {0.0, 0.0});
    CHECK(peak.co_polar_dbi == Approx(aperture_dbi).margin(1e-9));
    CHECK(peak.co_polar_dbi - peak.cross_polar_dbi >= 20.0 - 1e-9);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> th(0.0, 0.5 * kPi);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    for (int i = 0; i < 2000; ++i) {
        const PatternSample p = pattern_sample(c, s, {th(rng), ph(rng)});
        REQUIRE(p.co_polar_dbi <= peak.co_polar_dbi + 1e-9);
        REQUIRE(p.cross_polar_dbi <= peak.co_polar_dbi - c.cross_pol_floor_db + 1e-9);
    }
}

TEST_CASE("directivity by full-pattern integration")
{
    const ArrayConfig c;
    const BeamSteering s{0, 0.0, 0.0};
    auto power = [&](double th, double ph) { return std::norm(beam_gain(c, s, {th, ph}).value); };
    const double peak = power(0.0, 0.0);
    const auto r = oracle::pattern_integration(power, peak, 361, 181, 1e-4, 5, true, 0.5 * kPi);
    const double aperture_dbi = 10.0 * std::log10(aperture_directivity(c));
    INFO("integrated directivity " << r.directivity_dbi << " dBi on " << r.theta_points << "x" << r.phi_points);
    CHECK(r.directivity_dbi == Approx(38.9).margin(0.5));
    CHECK(std::abs(r.directivity_dbi - aperture_dbi) < 0.5);
    CHECK(r.directivity_dbi <= aperture_dbi + 0.1);
}

TEST_CASE("beam gain toward steered and neighbouring terminals")
{
    const ArrayConfig c;
    const Direction target{1.1 * kDeg, 0.3};
    const BeamSteering s = BeamSteering::toward(1, target);
    const BeamGain on = beam_gain(c, s, target);
    CHECK(std::abs(on.value) ==
          Approx(std::sqrt(aperture_directivity(c)) * element_gain(target.theta, c.element_exponent)).epsilon(1e-12));

    const Direction other{2.3 * kDeg, 1.4};
    const BeamGain off = beam_gain(c, s, other);
    const double expected = std::abs(af_bruteforce(c, s, other)) / std::abs(af_bruteforce(c, s, target)) *
                            element_gain(other.theta, c.element_exponent) / element_gain(target.theta, c.element_exponent);
    CHECK(std::abs(off.value) / std::abs(on.value) == Approx(expected).epsilon(1e-9));
    CHECK(std::abs(off.value) < std::abs(on.value));

    const BeamGain behind = beam_gain(c, s, {0.6 * kPi, 0.0});
    CHECK(behind.behind_array);
    CHECK(behind.value == cplx{});
}

TEST_CASE("earth-fixed spot beams track their terminals")
{
    const Scenario sc = default_scenario();
    const PassGeometry pass = build_geometry_series(sc);
    const std::size_t last = pass.t.size() - 1;

    for (std::size_t i = 0; i <= last; i += 150) {
        const auto beams = steer_beams(sc, pass, i);
        const auto dirs = terminal_directions(sc, pass, i);
        REQUIRE(beams.size() == 4);
        std::set<std::pair<double, double>> distinct;
        for (std::size_t j = 0; j < beams.size(); ++j) {
            distinct.insert({beams[j].u0, beams[j].v0});
            // Local search for the pattern maximum around the terminal direction.
            const Vec3 centre{dirs[j].u(), dirs[j].v(), std::cos(dirs[j].theta)};
            double best = -1.0;
            double best_offset = 0.0;
            const double step = 0.0025 * kDeg;
            for (int a = -40; a <= 40; ++a) {
                for (int b = -40; b <= 40; ++b) {
                    const double du = a * step;
                    const double dv = b * step;
                    const Direction d = from_uv(centre.x + du, centre.y + dv);
                    const double p = std::norm(beam_gain(sc.antenna, beams[j], d).value);
                    if (p > best) {
                        best = p;
                        const Vec3 v{d.u(), d.v(), std::cos(d.theta)};
                        best_offset = std::acos(std::clamp(dot(unit(v), unit(centre)), -1.0, 1.0)) / kDeg;
                    }
                }
            }
            REQUIRE(best_offset < 0.05);
        }
        CHECK(distinct.size() == 4);
    }

    const auto centre = steer_beams(sc, pass, last / 2);
    const auto edge = steer_beams(sc, pass, 0);
    for (std::size_t j = 0; j < centre.size(); ++j) {
        CHECK((centre[j].u0 != edge[j].u0 || centre[j].v0 != edge[j].v0));
    }
}

TEST_CASE("pattern CSV layout")
{
    std::ostringstream out;
    write_pattern_csv(out, ArrayConfig{}, {0, 0.0, 0.0}, 2.0, 1.0, 90.0);
    const std::string text = out.str();
    CHECK(text.rfind("theta_deg,phi_deg,co_dbi,cross_dbi\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 3 * 4);
}
