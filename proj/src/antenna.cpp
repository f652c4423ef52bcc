// SPDX-License-Identifier: Apache-2.0
#include "meo/antenna.hpp"

#include <cstdio>
#include <ostream>

#include "meo/scenario.hpp"

namespace meo {

namespace {

// sum_{m=0}^{N-1} exp(j (m - (N-1)/2) psi), real-valued.
double dirichlet(int n, double psi)
{
    const double half = 0.5 * psi;
    const double s = std::sin(half);
    if (std::abs(s) < 1e-9) {
        // L'Hopital at multiples of 2 pi.
        return n * std::cos(n * half) / std::cos(half);
    }
    return std::sin(n * half) / s;
}

} // namespace

cplx BeamSteering::element_weight(const ArrayConfig& config, int m, int n) const
{
    const double k_d = kTwoPi * config.spacing_wl;
    const double cm = m - 0.5 * (config.n_x - 1);
    const double cn = n - 0.5 * (config.n_y - 1);
    return std::polar(1.0, -k_d * (cm * u0 + cn * v0));
}

std::vector<cplx> BeamSteering::weights(const ArrayConfig& config) const
{
    std::vector<cplx> w;
    w.reserve(static_cast<std::size_t>(config.n_x) * config.n_y);
    for (int m = 0; m < config.n_x; ++m)
        for (int n = 0; n < config.n_y; ++n) w.push_back(element_weight(config, m, n));
    return w;
}

double element_gain(double theta, double q)
{
    if (theta < 0.0) theta = -theta;
    if (theta >= 0.5 * kPi) return 0.0;
    return std::pow(std::cos(theta), q);
}

double element_directivity(double q) { return 2.0 * (2.0 * q + 1.0); }

cplx array_factor(const ArrayConfig& config, const BeamSteering& steering, const Direction& direction)
{
    const double k_d = kTwoPi * config.spacing_wl;
    return {dirichlet(config.n_x, k_d * (direction.u() - steering.u0)) *
                dirichlet(config.n_y, k_d * (direction.v() - steering.v0)),
            0.0};
}

double aperture_directivity(const ArrayConfig& config)
{
    return 4.0 * kPi * config.n_x * config.spacing_wl * config.n_y * config.spacing_wl;
}

BeamGain beam_gain(const ArrayConfig& config, const BeamSteering& steering, const Direction& direction)
{
    if (direction.theta >= 0.5 * kPi) return {cplx{}, true};
    const double scale = std::sqrt(aperture_directivity(config)) * element_gain(direction.theta, config.element_exponent) /
                         (static_cast<double>(config.n_x) * config.n_y);
    return {scale * array_factor(config, steering, direction), false};
}

PatternSample pattern_sample(const ArrayConfig& config, const BeamSteering& steering, const Direction& direction)
{
    const BeamGain g = beam_gain(config, steering, direction);
    const double co = to_db(std::norm(g.value));
    return {direction, co, co <= -kCappedDb ? co : co - config.cross_pol_floor_db, g.value};
}

double half_power_beamwidth_deg(const ArrayConfig& config, const BeamSteering& steering, double phi_cut)
{
    const double w = std::sqrt(std::max(0.0, 1.0 - steering.u0 * steering.u0 - steering.v0 * steering.v0));
    const Vec3 peak{steering.u0, steering.v0, w};
    Vec3 tangent{std::cos(phi_cut), std::sin(phi_cut), 0.0};
    tangent = unit(tangent - dot(tangent, peak) * peak);

    auto power_at = [&](double alpha) {
        const Vec3 d = std::cos(alpha) * peak + std::sin(alpha) * tangent;
        const Direction dir{std::acos(std::clamp(d.z, -1.0, 1.0)), std::atan2(d.y, d.x)};
        return std::norm(beam_gain(config, steering, dir).value);
    };
    const double reference = power_at(0.0);
    auto half_width = [&](double sign) {
        // The first -3 dB point lies inside the main lobe, well within 10 nominal beamwidths.
        const double nominal = 1.0 / (std::max(config.n_x, config.n_y) * config.spacing_wl);
        double lo = 0.0;
        double hi = nominal;
        while (power_at(sign * hi) > 0.5 * reference && hi < 10.0 * nominal) hi += 0.25 * nominal;
        for (int i = 0; i < 80; ++i) {
            const double mid = 0.5 * (lo + hi);
            (power_at(sign * mid) > 0.5 * reference ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    return (half_width(1.0) + half_width(-1.0)) / kDeg;
}

ArrayFrame ArrayFrame::nadir_pointing(const StateVector& sat)
{
    const Vec3 z = -unit(sat.position);
    const Vec3 y = -unit(cross(sat.position, sat.velocity));
    return {unit(cross(y, z)), y, z};
}

Direction ArrayFrame::direction_to(const Vec3& from_eci, const Vec3& to_eci) const
{
    const Vec3 d = unit(to_eci - from_eci);
    return {std::acos(std::clamp(dot(d, z), -1.0, 1.0)), std::atan2(dot(d, y), dot(d, x))};
}

std::vector<Direction> terminal_directions(const Scenario& scenario, const PassGeometry& pass, std::size_t slow_index)
{
    const StateVector& sat = pass.satellite.at(slow_index);
    const ArrayFrame frame = ArrayFrame::nadir_pointing(sat);
    const UtcInstant at = pass.instant(slow_index);
    std::vector<Direction> out;
    out.reserve(scenario.terminals.size());
    for (const auto& ut : scenario.terminals) {
        out.push_back(frame.direction_to(sat.position, station_state(ut, at).position));
    }
    return out;
}

std::vector<BeamSteering> steer_beams(const Scenario& scenario, const PassGeometry& pass, std::size_t slow_index)
{
    const auto dirs = terminal_directions(scenario, pass, slow_index);
    std::vector<BeamSteering> beams;
    beams.reserve(static_cast<std::size_t>(scenario.n_beams));
    for (int j = 0; j < scenario.n_beams; ++j) {
        beams.push_back(j < static_cast<int>(dirs.size()) ? BeamSteering::toward(j, dirs[static_cast<std::size_t>(j)])
                                                          : BeamSteering{j, 0.0, 0.0});
    }
    return beams;
}

void write_pattern_csv(std::ostream& out, const ArrayConfig& config, const BeamSteering& steering,
                       double theta_max_deg, double theta_step_deg, double phi_step_deg)
{
    out << "theta_deg,phi_deg,co_dbi,cross_dbi\n";
    char line[128];
    const int n_theta = static_cast<int>(std::floor(theta_max_deg / theta_step_deg + 1e-9)) + 1;
    const int n_phi = static_cast<int>(std::floor(360.0 / phi_step_deg + 1e-9));
    for (int it = 0; it < n_theta; ++it) {
        const double th = it * theta_step_deg;
        for (int ip = 0; ip < n_phi; ++ip) {
            const double ph = ip * phi_step_deg;
            const PatternSample p = pattern_sample(config, steering, {th * kDeg, ph * kDeg});
            std::snprintf(line, sizeof line, "%.6g,%.6g,%.6f,%.6f\n", th, ph, p.co_polar_dbi, p.cross_polar_dbi);
            out << line;
        }
    }
}

} // namespace meo
