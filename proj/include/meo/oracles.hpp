// SPDX-License-Identifier: Apache-2.0
#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the modules these functions check.

#include <complex>
#include <functional>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace meo::oracle {

using cplx = std::complex<double>;
/// Row-major dense complex matrix.
struct Matrix {
    int rows{};
    int cols{};
    std::vector<cplx> data;

    cplx& operator()(int r, int c) { return data[static_cast<std::size_t>(r * cols + c)]; }
    cplx operator()(int r, int c) const { return data[static_cast<std::size_t>(r * cols + c)]; }
};

struct KeplerSolution {
    double eccentric_anomaly{};
    int iterations{};
};

/// Bracketed bisection on E - e sin E - M over [M - 1, M + 1] (|E - M| <= e).
KeplerSolution kepler_bisection(double mean_anomaly, double eccentricity, double tolerance = 1e-12);

/// +inf marks an interference- and noise-free terminal.
std::vector<double> sinr_bruteforce(const Matrix& H_eff, const Matrix& W, double noise_var);

struct DirectivityResult {
    double directivity{};    // linear
    double directivity_dbi{};
    int theta_points{};
    int phi_points{};
    double richardson_change{}; // relative change between the last two resolutions
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// D = 4 pi |F|^2_peak / integral |F|^2 dOmega over the full sphere, trapezoidal
/// rule in (theta, phi). Resolution doubles until successive estimates differ by
/// less than `rel_tolerance` (Richardson check); `power` returns |F|^2.
/// `quadrant_symmetric` integrates phi over [0, pi/2] and multiplies by four.
DirectivityResult pattern_integration(const std::function<double(double theta, double phi)>& power,
                                      double peak_power, int theta_points = 181, int phi_points = 181,
                                      double rel_tolerance = 1e-3, int max_doublings = 6,
                                      bool quadrant_symmetric = false, double theta_max = 3.14159265358979323846);

/// Welch-averaged one-sided PSD estimate at the requested bins (direct DFT per
/// segment, Hann window, 50 % overlap). Returns units^2/Hz.
std::vector<double> welch_psd_at(const std::vector<double>& x, double sample_rate, std::size_t segment,
                                 const std::vector<double>& frequencies_hz);

/// a = (mu (T / 2 pi)^2)^(1/3) from mean motion in rev/day.
double kepler_third_law_sma(double rev_per_day);

/// Column-slice decode of a TLE line 2 (independent of the library parser).
std::map<std::string, double> tle_line2_fields(const std::string& line2);

/// Plain forward formula for WGS-84 geodetic -> ECEF.
std::vector<double> geodetic_ecef(double lat_deg, double lon_deg, double alt_m);

/// Structured-text golden records: "id | provenance | oracle | value | tolerance".
struct GoldenRecord {
    std::string id;
    std::string provenance; // PAPER, TRIVIAL or DERIVED
    std::string oracle;     // required for DERIVED
    double value{};
    double tolerance{};
};

std::vector<GoldenRecord> read_golden(std::istream& in);
void write_golden(std::ostream& out, const std::vector<GoldenRecord>& records);
/// Problems with a record set (bad provenance, DERIVED without oracle, duplicate ids).
std::vector<std::string> check_golden(const std::vector<GoldenRecord>& records);

} // namespace meo::oracle
