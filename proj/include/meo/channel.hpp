// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "meo/precoder.hpp"

namespace meo {

struct Scenario;
struct PassGeometry;
struct LinkTiming;

struct ChannelSnapshot {
    double t{};
    CMatrix H;                  // K x N
    std::vector<cplx> gamma;    // per-terminal Doppler rotation, unit modulus
    CMatrix H_meo;              // diag(gamma) * H
    std::vector<std::string> warnings;
};

/// Free-space amplitude lambda / (4 pi d).
double fspl_amplitude(double range_m, double carrier_hz);

/// h(k, j) = beam_gain(j -> k) * fspl_amplitude(range_k) * exp(-j 2 pi f_dl range_k / c) * rx_gain.
/// Rows of terminals below the horizon are zeroed with a warning.
CMatrix build_H(const Scenario& scenario, const PassGeometry& pass, std::size_t slow_index, double rx_gain,
                std::vector<std::string>* warnings = nullptr);

/// eps_k(t_i) = 2 pi * trapezoidal integral of freq[k] from t_0 to t_i. [k][t].
std::vector<std::vector<double>> doppler_rotation(const std::vector<double>& t,
                                                  const std::vector<std::vector<double>>& freq_hz);

/// C/I per terminal in dB with beam k serving terminal k; kCappedDb when there is no interference.
std::vector<double> c_over_i(const CMatrix& H);

struct ChannelSeries {
    std::vector<double> t;
    std::vector<CMatrix> H;
    std::vector<std::vector<double>> epsilon;  // [k][t]
    double link_scale{};     // receive-side constant folded into H
    std::uint64_t scenario_hash{};
    std::uint64_t seed{};

    std::size_t size() const { return t.size(); }
    ChannelSnapshot snapshot(std::size_t i) const;
};

/// Builds H on the slow grid with a link constant that makes the mean
/// |h_kk|^2 at the window centre equal to 1 (so noise variance = 1/SNR).
ChannelSeries build_channel_series(const Scenario& scenario, const PassGeometry& pass, const LinkTiming& timing);

/// CSV: t_s, mag_db_k_j..., phase_rad_k_j..., cir_db_k...
void write_channel_csv(std::ostream& out, const ChannelSeries& series);
/// Reads a file produced by write_channel_csv (epsilon left at zero).
ChannelSeries read_channel_csv(std::istream& in);

} // namespace meo
