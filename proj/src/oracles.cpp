// SPDX-License-Identifier: Apache-2.0
#include "meo/oracles.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace meo::oracle {

namespace {
constexpr double kPiO = 3.14159265358979323846;

std::string strip(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
} // namespace

KeplerSolution kepler_bisection(double mean_anomaly, double eccentricity, double tolerance)
{
    double lo = mean_anomaly - 1.0;
    double hi = mean_anomaly + 1.0;
    auto f = [&](double E) { return E - eccentricity * std::sin(E) - mean_anomaly; };
    KeplerSolution sol;
    while (hi - lo > tolerance && sol.iterations < 200) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
        ++sol.iterations;
    }
    sol.eccentric_anomaly = 0.5 * (lo + hi);
    return sol;
}

std::vector<double> sinr_bruteforce(const Matrix& H_eff, const Matrix& W, double noise_var)
{
    const int K = H_eff.rows;
    const int N = H_eff.cols;
    std::vector<double> out;
    for (int k = 0; k < K; ++k) {
        double wanted = 0.0;
        double others = 0.0;
        for (int j = 0; j < W.cols; ++j) {
            cplx g = 0.0;
            for (int n = 0; n < N; ++n) g += H_eff(k, n) * W(n, j);
            const double p = g.real() * g.real() + g.imag() * g.imag();
            if (j == k) {
                wanted = p;
            } else {
                others += p;
            }
        }
        // Interference 200 dB under the wanted term is rounding left by a zero-forcing product.
        if (others < 1e-20 * wanted) others = 0.0;
        const double den = others + noise_var;
        out.push_back(den == 0.0 ? std::numeric_limits<double>::infinity() : wanted / den);
    }
    return out;
}

DirectivityResult pattern_integration(const std::function<double(double, double)>& power, double peak_power,
                                      int theta_points, int phi_points, double rel_tolerance, int max_doublings,
                                      bool quadrant_symmetric, double theta_max)
{
    auto integrate = [&](int nt, int np) {
        const double dt = theta_max / (nt - 1);
        const double phi_span = quadrant_symmetric ? kPiO / 2.0 : 2.0 * kPiO;
        const double dp = quadrant_symmetric ? phi_span / (np - 1) : phi_span / np;
        double total = 0.0;
        for (int i = 0; i < nt; ++i) {
            const double th = i * dt;
            const double wt = (i == 0 || i == nt - 1) ? 0.5 : 1.0;
            const double s = std::sin(th);
            if (s == 0.0) continue;
            double ring = 0.0;
            for (int j = 0; j < np; ++j) {
                const double wp = quadrant_symmetric && (j == 0 || j == np - 1) ? 0.5 : 1.0;
                ring += wp * power(th, j * dp);
            }
            total += wt * s * ring;
        }
        return total * dt * dp * (quadrant_symmetric ? 4.0 : 1.0);
    };
    DirectivityResult r;
    int nt = theta_points;
    int np = phi_points;
    double previous = integrate(nt, np);
    for (int level = 0; level < max_doublings; ++level) {
        const int nt2 = 2 * nt - 1;
        const int np2 = quadrant_symmetric ? 2 * np - 1 : 2 * np;
        const double current = integrate(nt2, np2);
        r.richardson_change = std::abs(current - previous) / std::abs(current);
        nt = nt2;
        np = np2;
        if (r.richardson_change < rel_tolerance) {
            r.directivity = 4.0 * kPiO * peak_power / current;
            r.directivity_dbi = 10.0 * std::log10(r.directivity);
            r.theta_points = nt;
            r.phi_points = np;
            return r;
        }
        previous = current;
    }
    throw ConvergenceError("pattern integration did not converge (last relative change " +
                           std::to_string(r.richardson_change) + ")");
}

std::vector<double> welch_psd_at(const std::vector<double>& x, double sample_rate, std::size_t segment,
                                 const std::vector<double>& frequencies_hz)
{
    if (segment < 2 || x.size() < segment) throw std::invalid_argument("welch: segment longer than the record");
    std::vector<double> w(segment);
    double wsq = 0.0;
    for (std::size_t n = 0; n < segment; ++n) {
        w[n] = 0.5 - 0.5 * std::cos(2.0 * kPiO * static_cast<double>(n) / static_cast<double>(segment));
        wsq += w[n] * w[n];
    }
    const std::size_t hop = segment / 2;
    std::vector<double> acc(frequencies_hz.size(), 0.0);
    std::size_t count = 0;
    for (std::size_t start = 0; start + segment <= x.size(); start += hop) {
        for (std::size_t f = 0; f < frequencies_hz.size(); ++f) {
            const double omega = 2.0 * kPiO * frequencies_hz[f] / sample_rate;
            double re = 0.0;
            double im = 0.0;
            // Direct DFT at one frequency; phase recomputed every 1024 samples
            // to bound the recurrence drift.
            cplx rot(std::cos(omega), -std::sin(omega));
            cplx ph(1.0, 0.0);
            for (std::size_t n = 0; n < segment; ++n) {
                if (n % 1024 == 0) ph = std::polar(1.0, -omega * static_cast<double>(n));
                const double v = x[start + n] * w[n];
                re += v * ph.real();
                im += v * ph.imag();
                ph *= rot;
            }
            const double scale = (frequencies_hz[f] == 0.0 ? 1.0 : 2.0) / (sample_rate * wsq);
            acc[f] += (re * re + im * im) * scale;
        }
        ++count;
    }
    for (double& a : acc) a /= static_cast<double>(count);
    return acc;
}

double kepler_third_law_sma(double rev_per_day)
{
    const double mu = 3.986004418e14;
    const double period = 86400.0 / rev_per_day;
    const double r = period / (2.0 * kPiO);
    return std::cbrt(mu * r * r);
}

std::map<std::string, double> tle_line2_fields(const std::string& line2)
{
    auto col = [&](std::size_t from, std::size_t to) { return strip(line2.substr(from - 1, to - from + 1)); };
    std::map<std::string, double> out;
    out["inclination_deg"] = std::stod(col(9, 16));
    out["raan_deg"] = std::stod(col(18, 25));
    out["eccentricity"] = std::stod("0." + col(27, 33));
    out["arg_perigee_deg"] = std::stod(col(35, 42));
    out["mean_anomaly_deg"] = std::stod(col(44, 51));
    out["mean_motion_rev_per_day"] = std::stod(col(53, 63));
    out["revolution_number"] = std::stod(col(64, 68));
    return out;
}

std::vector<double> geodetic_ecef(double lat_deg, double lon_deg, double alt_m)
{
    const double a = 6378137.0;
    const double f = 1.0 / 298.257223563;
    const double e2 = f * (2.0 - f);
    const double lat = lat_deg * kPiO / 180.0;
    const double lon = lon_deg * kPiO / 180.0;
    const double s = std::sin(lat);
    const double n = a / std::sqrt(1.0 - e2 * s * s);
    return {(n + alt_m) * std::cos(lat) * std::cos(lon), (n + alt_m) * std::cos(lat) * std::sin(lon),
            (n * (1.0 - e2) + alt_m) * s};
}

std::vector<GoldenRecord> read_golden(std::istream& in)
{
    std::vector<GoldenRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = strip(line);
        if (t.empty() || t.front() == '#') continue;
        std::vector<std::string> parts;
        std::stringstream ss(t);
        std::string cell;
        while (std::getline(ss, cell, '|')) parts.push_back(strip(cell));
        if (parts.size() != 5) {
            throw std::runtime_error("golden line " + std::to_string(lineno) + ": expected 5 fields");
        }
        GoldenRecord r;
        r.id = parts[0];
        r.provenance = parts[1];
        r.oracle = parts[2] == "-" ? std::string{} : parts[2];
        try {
            r.value = std::stod(parts[3]);
            r.tolerance = std::stod(parts[4]);
        } catch (const std::exception&) {
            throw std::runtime_error("golden line " + std::to_string(lineno) + ": bad number");
        }
        out.push_back(r);
    }
    return out;
}

void write_golden(std::ostream& out, const std::vector<GoldenRecord>& records)
{
    out << "# id | provenance | oracle | value | tolerance\n";
    char buf[64];
    for (const auto& r : records) {
        out << r.id << " | " << r.provenance << " | " << (r.oracle.empty() ? "-" : r.oracle) << " | ";
        std::snprintf(buf, sizeof buf, "%.17g", r.value);
        out << buf << " | ";
        std::snprintf(buf, sizeof buf, "%.6g", r.tolerance);
        out << buf << "\n";
    }
}

std::vector<std::string> check_golden(const std::vector<GoldenRecord>& records)
{
    std::vector<std::string> problems;
    std::set<std::string> ids;
    for (const auto& r : records) {
        if (!ids.insert(r.id).second) problems.push_back("duplicate id " + r.id);
        if (r.provenance != "PAPER" && r.provenance != "TRIVIAL" && r.provenance != "DERIVED") {
            problems.push_back(r.id + ": unknown provenance " + r.provenance);
        }
        if (r.provenance == "DERIVED" && r.oracle.empty()) problems.push_back(r.id + ": DERIVED record without oracle");
        if (!(r.tolerance >= 0.0)) problems.push_back(r.id + ": negative tolerance");
    }
    return problems;
}

} // namespace meo::oracle
