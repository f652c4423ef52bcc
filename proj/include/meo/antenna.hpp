// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <vector>

#include "meo/common.hpp"
#include "meo/orbit.hpp"

namespace meo {

/// Uniform planar direct radiating array with a cos^q element.
struct ArrayConfig {
    int n_x = 50;
    int n_y = 50;
    double spacing_wl = 0.5;         // element pitch in wavelengths at `carrier_hz`
    double element_exponent = 0.2906; // field ~ cos^q(theta); q = 0.29 gives ~5 dBi
    double cross_pol_floor_db = 20.0;
    double carrier_hz = 20.0e9;

    friend bool operator==(const ArrayConfig&, const ArrayConfig&) = default;
};

/// Direction in the array frame: theta off boresight, phi from the x axis (rad).
struct Direction {
    double theta{};
    double phi{};

    double u() const { return std::sin(theta) * std::cos(phi); }
    double v() const { return std::sin(theta) * std::sin(phi); }
};

/// Phase-only steering toward (u0, v0).
struct BeamSteering {
    int beam_id{};
    double u0{};
    double v0{};

    static BeamSteering toward(int beam_id, const Direction& d) { return {beam_id, d.u(), d.v()}; }

    /// Unit-magnitude weight of element (m, n), phase referenced to the array centre.
    cplx element_weight(const ArrayConfig& config, int m, int n) const;
    /// Row-major n_x * n_y weights.
    std::vector<cplx> weights(const ArrayConfig& config) const;
};

/// Field pattern of one element, normalized to 1 at boresight; 0 behind the array.
double element_gain(double theta, double q);

/// Directivity of a cos^q field element radiating into the front hemisphere.
double element_directivity(double q);

/// Sum over elements of exp(j k d (m (u - u0) + n (v - v0))), centre-referenced.
cplx array_factor(const ArrayConfig& config, const BeamSteering& steering, const Direction& direction);

/// Upper bound 4 pi A / lambda^2 on the broadside directivity (linear).
double aperture_directivity(const ArrayConfig& config);

struct BeamGain {
    cplx value;              // complex field gain, |value|^2 = realized gain (linear)
    bool behind_array{false};
};

/// Co-polar complex gain of a steered beam toward `direction`:
/// sqrt(D_aperture) * element(theta) * AF / (n_x n_y).
BeamGain beam_gain(const ArrayConfig& config, const BeamSteering& steering, const Direction& direction);

struct PatternSample {
    Direction direction;
    double co_polar_dbi{};
    double cross_polar_dbi{};
    cplx field;
};

/// Cross-pol is modelled as the co-polar pattern lowered by `cross_pol_floor_db`.
PatternSample pattern_sample(const ArrayConfig& config, const BeamSteering& steering, const Direction& direction);

/// Half-power (-3 dB) full beamwidth in degrees along the cut at azimuth `phi_cut`
/// through the beam peak.
double half_power_beamwidth_deg(const ArrayConfig& config, const BeamSteering& steering, double phi_cut);

/// Nadir-pointing orbital frame: z toward Earth centre, y against the orbit
/// normal, x completing the triad (roughly along-track).
struct ArrayFrame {
    Vec3 x;
    Vec3 y;
    Vec3 z;

    static ArrayFrame nadir_pointing(const StateVector& sat);
    Direction direction_to(const Vec3& from_eci, const Vec3& to_eci) const;
};

struct PassGeometry;

/// Earth-fixed spot beams: beam j points at terminal j (nadir when j >= K).
std::vector<BeamSteering> steer_beams(const Scenario& scenario, const PassGeometry& pass, std::size_t slow_index);

/// Direction of every terminal in the array frame at a slow-grid index.
std::vector<Direction> terminal_directions(const Scenario& scenario, const PassGeometry& pass, std::size_t slow_index);

/// CSV grid: theta_deg, phi_deg, co_dbi, cross_dbi.
void write_pattern_csv(std::ostream& out, const ArrayConfig& config, const BeamSteering& steering,
                       double theta_max_deg, double theta_step_deg, double phi_step_deg);

} // namespace meo
