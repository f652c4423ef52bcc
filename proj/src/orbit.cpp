// SPDX-License-Identifier: Apache-2.0
#include "meo/orbit.hpp"

#include <charconv>
#include <cstdio>
#include <ostream>

#include "meo/scenario.hpp"

namespace meo {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
long long days_from_civil(long long y, unsigned m, unsigned d)
{
    y -= m <= 2;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

void civil_from_days(long long z, long long& y, unsigned& m, unsigned& d)
{
    z += 719468;
    const long long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<long long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += (m <= 2);
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view field, const char* what)
{
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    // from_chars rejects a leading '.', which TLE fields use ("-.00000028").
    std::string buffer;
    if (!field.empty() && (field.front() == '.' || (field.size() > 1 && field[0] == '-' && field[1] == '.'))) {
        buffer = std::string(field);
        buffer.insert(buffer.find('.'), "0");
        field = buffer;
    }
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        throw TleError(std::string("unparsable ") + what + " field '" + std::string(field) + "'");
    }
    return value;
}

// "SMMMMM-E" with an implied leading decimal point, e.g. " 12345-3" = 0.12345e-3.
double parse_implied_exponent(std::string_view field, const char* what)
{
    field = trim(field);
    if (field.empty()) return 0.0;
    double sign = 1.0;
    if (field.front() == '-' || field.front() == '+') {
        sign = field.front() == '-' ? -1.0 : 1.0;
        field.remove_prefix(1);
    }
    const auto exp_pos = field.find_last_of("+-");
    if (exp_pos == std::string_view::npos || exp_pos == 0) {
        throw TleError(std::string("unparsable ") + what + " field '" + std::string(field) + "'");
    }
    const double mantissa = parse_number(std::string("0.") + std::string(field.substr(0, exp_pos)), what);
    const double exponent = parse_number(field.substr(exp_pos), what);
    return sign * mantissa * std::pow(10.0, exponent);
}

void check_line(std::string_view line, char number)
{
    if (line.size() != 69) {
        throw TleError("TLE line " + std::string(1, number) + " must be 69 characters, got " +
                       std::to_string(line.size()));
    }
    if (line[0] != number) {
        throw TleError("TLE line " + std::string(1, number) + " does not start with '" + std::string(1, number) + "'");
    }
    const int expected = line[68] - '0';
    if (expected < 0 || expected > 9 || tle_checksum(line) != expected) {
        throw TleError("TLE line " + std::string(1, number) + " checksum mismatch: computed " +
                       std::to_string(tle_checksum(line)) + ", found '" + std::string(1, line[68]) + "'");
    }
}

} // namespace

UtcInstant parse_iso8601(std::string_view text)
{
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    double s = 0.0;
    const std::string buf(trim(text));
    if (std::sscanf(buf.c_str(), "%d-%d-%dT%d:%d:%lf", &y, &mo, &d, &h, &mi, &s) != 6 || mo < 1 || mo > 12 ||
        d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0.0 || s >= 61.0) {
        throw Error("invalid ISO-8601 instant '" + buf + "'");
    }
    const long long days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    return {static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + s};
}

std::string format_iso8601(UtcInstant t)
{
    const double day_floor = std::floor(t.unix_seconds / 86400.0);
    long long y = 0;
    unsigned m = 0, d = 0;
    civil_from_days(static_cast<long long>(day_floor), y, m, d);
    double sod = t.unix_seconds - day_floor * 86400.0;
    const int h = static_cast<int>(sod / 3600.0);
    sod -= h * 3600.0;
    const int mi = static_cast<int>(sod / 60.0);
    sod -= mi * 60.0;
    char out[64];
    std::snprintf(out, sizeof out, "%04lld-%02u-%02uT%02d:%02d:%09.6fZ", y, m, d, h, mi, sod);
    return out;
}

double gmst(UtcInstant t)
{
    const double days = t.julian_date() - 2451545.0;
    const double deg = std::fmod(280.46061837 + 360.98564736629 * days, 360.0);
    return (deg < 0.0 ? deg + 360.0 : deg) * kDeg;
}

double semi_major_axis_from_mean_motion(double rev_per_day)
{
    const double n = rev_per_day * kTwoPi / 86400.0;
    return std::cbrt(kMuEarth / (n * n));
}

double OrbitalElements::semi_major_axis_m() const { return semi_major_axis_from_mean_motion(mean_motion_rev_per_day); }

double OrbitalElements::period_s() const
{
    const double a = semi_major_axis_m();
    return kTwoPi * std::sqrt(a * a * a / kMuEarth);
}

int tle_checksum(std::string_view line)
{
    int sum = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(68, line.size()); ++i) {
        const char c = line[i];
        if (c >= '0' && c <= '9') sum += c - '0';
        else if (c == '-') sum += 1;
    }
    return sum % 10;
}

OrbitalElements parse_tle(std::string_view line1, std::string_view line2, std::string name)
{
    check_line(line1, '1');
    check_line(line2, '2');

    OrbitalElements el;
    el.name = std::move(name);
    el.catalog_number = static_cast<int>(parse_number(line1.substr(2, 5), "catalog number"));
    const int line2_catalog = static_cast<int>(parse_number(line2.substr(2, 5), "catalog number"));
    if (line2_catalog != el.catalog_number) {
        throw TleError("catalog numbers differ between lines (" + std::to_string(el.catalog_number) + " vs " +
                       std::to_string(line2_catalog) + ")");
    }

    const int yy = static_cast<int>(parse_number(line1.substr(18, 2), "epoch year"));
    const double doy = parse_number(line1.substr(20, 12), "epoch day");
    const int year = yy < 57 ? 2000 + yy : 1900 + yy;
    el.epoch = {static_cast<double>(days_from_civil(year, 1, 1)) * 86400.0 + (doy - 1.0) * 86400.0};
    el.bstar = parse_implied_exponent(line1.substr(53, 8), "bstar");

    el.inclination_deg = parse_number(line2.substr(8, 8), "inclination");
    el.raan_deg = parse_number(line2.substr(17, 8), "RAAN");
    el.eccentricity = parse_number(std::string("0.") + std::string(trim(line2.substr(26, 7))), "eccentricity");
    el.arg_perigee_deg = parse_number(line2.substr(34, 8), "argument of perigee");
    el.mean_anomaly_deg = parse_number(line2.substr(43, 8), "mean anomaly");
    el.mean_motion_rev_per_day = parse_number(line2.substr(52, 11), "mean motion");
    if (!(el.mean_motion_rev_per_day > 0.0)) throw TleError("mean motion must be positive");
    return el;
}

double solve_kepler(double mean_anomaly_rad, double e)
{
    if (!(e >= 0.0 && e < 1.0)) throw KeplerError("eccentricity outside [0, 1)", 0);
    const double M = wrap_pi(mean_anomaly_rad);
    const double offset = mean_anomaly_rad - M;
    if (e == 0.0) return mean_anomaly_rad;

    constexpr double tol = 1e-12;
    double E = e < 0.8 ? M + e * std::sin(M) : (M >= 0.0 ? kPi : -kPi);
    int it = 0;
    for (; it < 50; ++it) {
        const double f = E - e * std::sin(E) - M;
        if (std::abs(f) < tol) return E + offset;
        E -= f / (1.0 - e * std::cos(E));
    }
    // Newton stalled; the root is bracketed by |E - M| <= e.
    double lo = M - e;
    double hi = M + e;
    for (int b = 0; b < 200; ++b, ++it) {
        E = 0.5 * (lo + hi);
        const double f = E - e * std::sin(E) - M;
        if (std::abs(f) < tol) return E + offset;
        (f > 0.0 ? hi : lo) = E;
    }
    throw KeplerError("Kepler solver did not converge after " + std::to_string(it) + " iterations", it);
}

Propagator::Propagator(OrbitalElements elements, J2Mode j2) : elements_(std::move(elements))
{
    const double e = elements_.eccentricity;
    if (!(e >= 0.0 && e < 1.0)) throw Error("eccentricity outside [0, 1)");
    if (!(elements_.mean_motion_rev_per_day > 0.0)) throw Error("mean motion must be positive");
    const double n = elements_.mean_motion_rev_per_day * kTwoPi / 86400.0;
    a_ = semi_major_axis_from_mean_motion(elements_.mean_motion_rev_per_day);
    m_dot_ = n;
    if (j2 == J2Mode::On) {
        const double p = a_ * (1.0 - e * e);
        const double k = kJ2 * (kWgs84A / p) * (kWgs84A / p);
        const double ci = std::cos(elements_.inclination_deg * kDeg);
        raan_dot_ = -1.5 * n * k * ci;
        argp_dot_ = 0.75 * n * k * (5.0 * ci * ci - 1.0);
        m_dot_ = n * (1.0 + 0.75 * k * std::sqrt(1.0 - e * e) * (3.0 * ci * ci - 1.0));
    }
}

StateVector Propagator::state_at(double t) const
{
    const double e = elements_.eccentricity;
    const double M = elements_.mean_anomaly_deg * kDeg + m_dot_ * t;
    const double raan = elements_.raan_deg * kDeg + raan_dot_ * t;
    const double argp = elements_.arg_perigee_deg * kDeg + argp_dot_ * t;
    const double inc = elements_.inclination_deg * kDeg;

    const double E = solve_kepler(M, e);
    const double cE = std::cos(E);
    const double sE = std::sin(E);
    const double b = std::sqrt(1.0 - e * e);
    const double r = a_ * (1.0 - e * cE);

    const Vec3 pos_pf{a_ * (cE - e), a_ * b * sE, 0.0};
    const double vscale = std::sqrt(kMuEarth * a_) / r;
    const Vec3 vel_pf{-vscale * sE, vscale * b * cE, 0.0};

    const double cO = std::cos(raan), sO = std::sin(raan);
    const double cw = std::cos(argp), sw = std::sin(argp);
    const double ci = std::cos(inc), si = std::sin(inc);
    // Columns of R3(-raan) R1(-inc) R3(-argp) for the perifocal P and Q axes.
    const Vec3 P{cO * cw - sO * sw * ci, sO * cw + cO * sw * ci, sw * si};
    const Vec3 Q{-cO * sw - sO * cw * ci, -sO * sw + cO * cw * ci, cw * si};

    const Vec3 pos = pos_pf.x * P + pos_pf.y * Q;
    // Two-body velocity scaled to the drifted mean motion, plus the frame rotation
    // from the secular RAAN and argument-of-perigee rates.
    const double n0 = elements_.mean_motion_rev_per_day * kTwoPi / 86400.0;
    Vec3 vel = (m_dot_ / n0) * (vel_pf.x * P + vel_pf.y * Q);
    vel = vel + raan_dot_ * cross(Vec3{0.0, 0.0, 1.0}, pos) + argp_dot_ * cross(cross(P, Q), pos);
    return {t, pos, vel};
}

StateVector propagate(const OrbitalElements& elements, double t_from_epoch, J2Mode j2)
{
    return Propagator(elements, j2).state_at(t_from_epoch);
}

Vec3 geodetic_to_ecef(double lat_deg, double lon_deg, double alt_m)
{
    const double e2 = kWgs84F * (2.0 - kWgs84F);
    const double lat = lat_deg * kDeg;
    const double lon = lon_deg * kDeg;
    const double s = std::sin(lat);
    const double N = kWgs84A / std::sqrt(1.0 - e2 * s * s);
    return {(N + alt_m) * std::cos(lat) * std::cos(lon), (N + alt_m) * std::cos(lat) * std::sin(lon),
            (N * (1.0 - e2) + alt_m) * s};
}

Vec3 ecef_to_eci(const Vec3& ecef, UtcInstant t) { return rotate_z(ecef, gmst(t)); }
Vec3 eci_to_ecef(const Vec3& eci, UtcInstant t) { return rotate_z(eci, -gmst(t)); }

StateVector station_state(const GroundStation& station, UtcInstant t)
{
    const Vec3 r = ecef_to_eci(geodetic_to_ecef(station.latitude_deg, station.longitude_deg, station.altitude_m), t);
    return {0.0, r, cross(Vec3{0.0, 0.0, kEarthRotationRate}, r)};
}

GeometrySample look_geometry(const StateVector& sat, const GroundStation& station, UtcInstant at)
{
    const StateVector st = station_state(station, at);
    const Vec3 rel = sat.position - st.position;
    const double range = norm(rel);
    const Vec3 los = rel / range;
    const double range_rate = dot(sat.velocity - st.velocity, los);

    const Vec3 rel_ecef = eci_to_ecef(rel, at);
    const double lat = station.latitude_deg * kDeg;
    const double lon = station.longitude_deg * kDeg;
    const Vec3 east{-std::sin(lon), std::cos(lon), 0.0};
    const Vec3 north{-std::sin(lat) * std::cos(lon), -std::sin(lat) * std::sin(lon), std::cos(lat)};
    const Vec3 up{std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};

    const double el = std::asin(std::clamp(dot(rel_ecef, up) / range, -1.0, 1.0));
    double az = std::atan2(dot(rel_ecef, east), dot(rel_ecef, north));
    if (az < 0.0) az += kTwoPi;
    return {0.0, el / kDeg, az / kDeg, range, range_rate};
}

double doppler_shift(double range_rate_mps, double carrier_hz) { return -(range_rate_mps / kSpeedOfLight) * carrier_hz; }

double path_delay(double range_m)
{
    if (!(range_m > 0.0)) throw Error("path_delay: range must be positive, got " + std::to_string(range_m));
    return range_m / kSpeedOfLight;
}

PassGeometry build_geometry_series(const Scenario& scenario)
{
    const Propagator prop(scenario.elements, scenario.j2);
    const UtcInstant start = scenario.search_epoch();
    auto gw_elevation = [&](double t) {
        const UtcInstant at = start.plus(t);
        return look_geometry(prop.state_at(at), scenario.gateway, at).elevation_deg;
    };

    constexpr double coarse = 20.0;
    double best_t = 0.0;
    double best_el = -90.0;
    for (double t = 0.0; t <= 86400.0; t += coarse) {
        const double el = gw_elevation(t);
        if (el > best_el) {
            best_el = el;
            best_t = t;
        }
    }
    // Golden-section refinement around the coarse maximum.
    double lo = best_t - coarse;
    double hi = best_t + coarse;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo);
    double x2 = lo + g * (hi - lo);
    double f1 = gw_elevation(x1);
    double f2 = gw_elevation(x2);
    while (hi - lo > 1e-3) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = gw_elevation(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = gw_elevation(x1);
        }
    }
    best_t = 0.5 * (lo + hi);
    best_el = gw_elevation(best_t);
    if (best_el < scenario.grid.min_elevation_deg) {
        throw NoPassError("no gateway pass above " + std::to_string(scenario.grid.min_elevation_deg) +
                          " deg elevation within one day of " + format_iso8601(start) + " (best " +
                          std::to_string(best_el) + " deg)");
    }

    PassGeometry pass;
    pass.max_elevation_time = start.plus(best_t);
    pass.max_elevation_deg = best_el;
    pass.window_start = start.plus(best_t - 0.5 * scenario.grid.duration_s);
    pass.slow_step_s = scenario.grid.slow_step_s;

    std::vector<const GroundStation*> stations{&scenario.gateway};
    for (const auto& ut : scenario.terminals) stations.push_back(&ut);
    pass.stations.resize(stations.size());
    for (std::size_t s = 0; s < stations.size(); ++s) pass.stations[s].station = stations[s]->name;

    const std::size_t n = scenario.grid.slow_points();
    pass.t.resize(n);
    pass.satellite.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        pass.t[i] = static_cast<double>(i) * scenario.grid.slow_step_s;
        const UtcInstant at = pass.instant(i);
        pass.satellite[i] = prop.state_at(at);
        for (std::size_t s = 0; s < stations.size(); ++s) {
            GeometrySample g = look_geometry(pass.satellite[i], *stations[s], at);
            g.t = pass.t[i];
            pass.stations[s].samples.push_back(g);
        }
    }
    return pass;
}

void write_geometry_csv(std::ostream& out, const PassGeometry& pass, const FrequencyPlan& plan)
{
    out << "t,station,elevation_deg,azimuth_deg,range_m,range_rate_mps";
    for (std::size_t b = 0; b < plan.uplink_hz.size(); ++b) out << ",doppler_ul_hz_beam" << b;
    out << ",doppler_dl_hz,delay_s\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < pass.t.size(); ++i) {
        for (const auto& series : pass.stations) {
            const GeometrySample& g = series.samples[i];
            out << num(g.t) << ',' << series.station << ',' << num(g.elevation_deg) << ',' << num(g.azimuth_deg)
                << ',' << num(g.range_m) << ',' << num(g.range_rate_mps);
            for (double f : plan.uplink_hz) out << ',' << num(doppler_shift(g.range_rate_mps, f));
            out << ',' << num(doppler_shift(g.range_rate_mps, plan.downlink_hz)) << ',' << num(path_delay(g.range_m))
                << '\n';
        }
    }
}

} // namespace meo
