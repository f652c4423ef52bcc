// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "meo/common.hpp"

namespace meo {

struct Scenario;
struct PassGeometry;
struct FrequencyPlan;
struct ImpairmentFlags;

/// Single-sideband phase-noise mask L(f) in dBc/Hz, log-log interpolated
/// between anchors and flat outside them.
struct PhaseNoiseMask {
    std::vector<std::pair<double, double>> anchors; // (offset Hz, dBc/Hz)

    double dbc_per_hz(double offset_hz) const;
    /// Two-sided phase PSD in rad^2/Hz; equals L(|f|) in linear units.
    double two_sided_psd(double offset_hz) const { return from_db(dbc_per_hz(std::abs(offset_hz))); }
    double highest_offset() const { return anchors.empty() ? 0.0 : anchors.back().first; }

    /// Empty when usable.
    std::vector<std::string> problems() const;

    static PhaseNoiseMask default_mask();

    friend bool operator==(const PhaseNoiseMask&, const PhaseNoiseMask&) = default;
};

/// Real zero-mean Gaussian sequence with the given two-sided PSD (units^2/Hz),
/// synthesized by weighting a white spectrum with sqrt(PSD) and inverse
/// transforming. DC is removed.
std::vector<double> synthesize_gaussian_process(const std::function<double(double)>& two_sided_psd,
                                                double sample_rate, std::size_t n, std::uint64_t seed);

/// Phase noise at `sample_rate`. Throws if the mask extends past Nyquist.
std::vector<double> gen_phase_noise(const PhaseNoiseMask& mask, double sample_rate, std::size_t n,
                                    std::uint64_t seed);

/// Phase noise of a process defined at `source_rate`, observed only every
/// source_rate / target_rate samples. The mask is folded into the target band,
/// so the samples have the same joint statistics as decimating a full-rate draw.
std::vector<double> gen_phase_noise_decimated(const PhaseNoiseMask& mask, double source_rate,
                                              double target_rate, std::size_t n, std::uint64_t seed);

enum class ResidualScaling {
    Common,  ///< one factor for all beams: the largest |Doppler| over beams maps to the bound
    PerBeam, ///< each beam scaled to its own peak
};

/// Residual Doppler left after gateway precompensation: the original curves
/// scaled so that the peak equals `bound_hz`. Input/Output indexed [beam][t].
std::vector<std::vector<double>> residual_uplink_doppler(const std::vector<std::vector<double>>& doppler,
                                                         double bound_hz,
                                                         ResidualScaling scaling = ResidualScaling::Common);

/// Cumulative phase 2*pi*integral of a piecewise-linear frequency series.
class IntegratedPhase {
public:
    IntegratedPhase() = default;
    IntegratedPhase(std::vector<double> t, std::vector<double> freq_hz);

    /// Phase (rad) at time t, relative to t.front(); clamps outside the grid.
    double at(double t) const;
    /// Linearly interpolated frequency (Hz).
    double frequency(double t) const;
    bool empty() const { return t_.empty(); }

private:
    std::vector<double> t_;
    std::vector<double> f_;
    std::vector<double> cum_; // 2*pi*integral up to t_[i]
};

struct PhaseProcess {
    int beam_id{};
    double sample_rate{};
    std::vector<double> phase; // rad
};

/// Per-beam uplink Doppler of the gateway pass (Hz), indexed [beam][t].
std::vector<std::vector<double>> uplink_doppler(const PassGeometry& pass, const FrequencyPlan& plan);

/// Residual per-beam uplink frequency, or all zeros when uplink Doppler is off.
std::vector<std::vector<double>> uplink_residual(const Scenario& scenario, const PassGeometry& pass);

/// Phase process of beam `beam` sampled at `rate` over the whole window:
/// residual-Doppler phase (if enabled) plus phase noise (if enabled). Phase noise
/// is generated at the scenario sample rate and observed at `rate`.
PhaseProcess beam_phase_process(const Scenario& scenario, const PassGeometry& pass, int beam, double rate,
                                std::uint64_t seed);

/// Adds circular complex Gaussian noise of variance 10^(-snr_db/10) (unit-power
/// desired signal). snr_db = +inf leaves the input untouched.
std::vector<cplx> apply_awgn(std::span<const cplx> symbols, double snr_db, std::uint64_t seed);

/// Noise variance for a unit-power signal; 0 for +inf.
double noise_variance_for_snr(double snr_db);

/// Per-path timing and the downlink Doppler that drives the per-terminal rotation.
struct LinkTiming {
    std::vector<double> uplink_delay_s;                 // common to all beams, per t
    std::vector<std::vector<double>> downlink_delay_s;  // [k][t]
    std::vector<std::vector<double>> gamma_frequency_hz; // [k][t]; zeros when downlink Doppler is off

    /// Round-trip CSI latency for terminal k at slow index i.
    double csi_latency(std::size_t k, std::size_t i) const
    {
        return 2.0 * (uplink_delay_s[i] + downlink_delay_s[k][i]);
    }
};

LinkTiming apply_downlink_effects(const PassGeometry& pass, const ImpairmentFlags& flags, const FrequencyPlan& plan);

} // namespace meo
