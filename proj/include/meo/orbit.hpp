// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "meo/common.hpp"

namespace meo {

struct Scenario;
struct FrequencyPlan;

/// UTC instant as seconds since 1970-01-01T00:00:00Z (leap seconds ignored).
struct UtcInstant {
    double unix_seconds{};

    double julian_date() const { return unix_seconds / 86400.0 + 2440587.5; }
    UtcInstant plus(double seconds) const { return {unix_seconds + seconds}; }
    friend bool operator==(const UtcInstant&, const UtcInstant&) = default;
};

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff][Z]".
UtcInstant parse_iso8601(std::string_view text);
std::string format_iso8601(UtcInstant t);

/// Greenwich mean sidereal angle, linear model in days from J2000 (rad, [0, 2pi)).
double gmst(UtcInstant t);

struct GroundStation {
    std::string name;
    double latitude_deg{};
    double longitude_deg{};
    double altitude_m{};

    friend bool operator==(const GroundStation&, const GroundStation&) = default;
};

struct OrbitalElements {
    std::string name;
    int catalog_number{};
    UtcInstant epoch;
    double inclination_deg{};
    double raan_deg{};
    double eccentricity{};
    double arg_perigee_deg{};
    double mean_anomaly_deg{};
    double mean_motion_rev_per_day{};
    double bstar{}; // parsed, not used by the two-body/J2 propagator

    double semi_major_axis_m() const;
    double period_s() const;

    friend bool operator==(const OrbitalElements&, const OrbitalElements&) = default;
};

class TleError : public Error {
public:
    using Error::Error;
};

/// Decodes a two-line element set. Both lines must be 69 columns with valid checksums.
OrbitalElements parse_tle(std::string_view line1, std::string_view line2, std::string name = {});

/// Modulo-10 TLE checksum of the first 68 columns ('-' counts as 1).
int tle_checksum(std::string_view line);

/// Semi-major axis from mean motion through Kepler's third law.
double semi_major_axis_from_mean_motion(double rev_per_day);

class KeplerError : public Error {
public:
    KeplerError(const std::string& what, int iterations) : Error(what), iterations_(iterations) {}
    int iterations() const { return iterations_; }

private:
    int iterations_;
};

/// Solves M = E - e sin E (Newton, bisection fallback). |residual| < 1e-12.
double solve_kepler(double mean_anomaly_rad, double eccentricity);

struct StateVector {
    double t{};     // s from element epoch
    Vec3 position;  // ECI, m
    Vec3 velocity;  // ECI, m/s
};

enum class J2Mode { Off, On };

/// Two-body propagator with optional secular J2 drift of RAAN, argument of
/// perigee and mean anomaly.
class Propagator {
public:
    explicit Propagator(OrbitalElements elements, J2Mode j2 = J2Mode::On);

    StateVector state_at(double t_from_epoch) const;
    StateVector state_at(UtcInstant t) const { return state_at(t.unix_seconds - elements_.epoch.unix_seconds); }

    const OrbitalElements& elements() const { return elements_; }
    double semi_major_axis() const { return a_; }
    double raan_rate() const { return raan_dot_; }
    double arg_perigee_rate() const { return argp_dot_; }
    double mean_anomaly_rate() const { return m_dot_; }

private:
    OrbitalElements elements_;
    double a_{};
    double raan_dot_{};
    double argp_dot_{};
    double m_dot_{};
};

StateVector propagate(const OrbitalElements& elements, double t_from_epoch, J2Mode j2 = J2Mode::On);

/// WGS-84 geodetic to Earth-fixed Cartesian (m).
Vec3 geodetic_to_ecef(double lat_deg, double lon_deg, double alt_m);

/// ECEF -> ECI at the given instant (GMST rotation only).
Vec3 ecef_to_eci(const Vec3& ecef, UtcInstant t);
Vec3 eci_to_ecef(const Vec3& eci, UtcInstant t);

/// Station position and velocity in ECI.
StateVector station_state(const GroundStation& station, UtcInstant t);

struct GeometrySample {
    double t{};            // s from window start
    double elevation_deg{};
    double azimuth_deg{};
    double range_m{};
    double range_rate_mps{};
};

GeometrySample look_geometry(const StateVector& sat, const GroundStation& station, UtcInstant at);

/// f_d = -(range_rate / c) * carrier.
double doppler_shift(double range_rate_mps, double carrier_hz);

/// One-way delay; throws for non-positive range.
double path_delay(double range_m);

struct GeometrySeries {
    std::string station;
    std::vector<GeometrySample> samples;
};

/// Slow-grid geometry for a whole pass window.
struct PassGeometry {
    UtcInstant window_start;
    UtcInstant max_elevation_time;
    double max_elevation_deg{};
    double slow_step_s{};
    std::vector<double> t;                 // s from window start
    std::vector<StateVector> satellite;    // ECI, one per t
    std::vector<GeometrySeries> stations;  // gateway first, then terminals in scenario order

    const GeometrySeries& gateway() const { return stations.front(); }
    const GeometrySeries& terminal(std::size_t k) const { return stations.at(k + 1); }
    UtcInstant instant(std::size_t i) const { return window_start.plus(t[i]); }
};

class NoPassError : public Error {
public:
    using Error::Error;
};

/// Finds the highest-elevation gateway pass within one day of the scenario epoch
/// and samples a duration-long window centred on it.
PassGeometry build_geometry_series(const Scenario& scenario);

/// CSV: t, station, elevation_deg, azimuth_deg, range_m, range_rate_mps,
/// doppler_ul_hz_beam0..N-1, doppler_dl_hz, delay_s
void write_geometry_csv(std::ostream& out, const PassGeometry& pass, const FrequencyPlan& plan);

} // namespace meo
