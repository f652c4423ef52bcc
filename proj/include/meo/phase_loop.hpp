// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meo/common.hpp"
#include "meo/precoder.hpp"

namespace meo {

enum class CsiInterpolation { Hold, Linear };

std::string to_string(CsiInterpolation i);
CsiInterpolation csi_interpolation_from_string(const std::string& text);

/// Gains of the per-beam proportional-integral phase loop.
struct LoopParams {
    double kp = 0.0;              // 1/s
    double ki = 0.0;              // 1/s^2
    double sample_rate_hz = 100e3;
    int reference_beam = 0;
    CsiInterpolation interpolation = CsiInterpolation::Linear;
    double predictor_window_s = 0.5; // span of the CSI phase slope used to advance the output

    /// kp = 2 zeta wn, ki = wn^2 with wn = 2 pi natural_frequency_hz.
    static LoopParams from_natural_frequency(double natural_frequency_hz, double damping, double sample_rate_hz);
    static LoopParams defaults(double sample_rate_hz = 100e3) { return from_natural_frequency(200.0, 1.0 / std::sqrt(2.0), sample_rate_hz); }

    friend bool operator==(const LoopParams&, const LoopParams&) = default;
};

/// Largest pole modulus of the unity-feedback discrete loop realized by loop_step.
double max_pole_modulus(const LoopParams& params);

struct BeamLoopState {
    double integrator{}; // rad/s
    double phase{};      // rad, wrapped
    double last_error{}; // rad
};

/// integrator += ki Ts e;  phase += kp Ts e + integrator Ts;  phase wrapped.
void loop_step(BeamLoopState& state, double error, const LoopParams& params);

class UnstableLoopError : public Error {
public:
    using Error::Error;
};

/// Per-beam error: wrapped, |h|-weighted mean over terminals of the drift of
/// (psi_hat(k, n) - psi_hat(k, ref)) between `reference` and `current`.
/// Both vectors hold one report per terminal. The reference beam is 0.
/// With no current reports, `last_error` is returned unchanged.
std::vector<double> derive_loop_error(const std::vector<CsiReport>& current, const std::vector<CsiReport>& reference,
                                      int reference_beam, int n_beams, const std::vector<double>& last_error = {});

/// Multiplies each sample by exp(-j phi).
std::vector<cplx> apply_nco(std::span<const cplx> samples, std::span<const double> phi);

/// Raw (uncompensated) differential phase of every beam, reconstructed by the
/// gateway at a CSI instant, and the time it becomes usable.
struct LoopInputSample {
    double t_measured{};
    double t_available{};
    std::vector<double> phase; // rad, unwrapped, relative to the reference beam
};

/// Sample-rate tracking loop fed by interpolated CSI phase. Because the input
/// is the raw channel phase (the gateway re-adds the compensation it applied),
/// the feedback path has no transport delay. The output is advanced by the
/// input latency using the CSI phase slope over `predictor_window_s`.
class PhaseLoop {
public:
    PhaseLoop(LoopParams params, int n_beams, double csi_period_s, double t_start = 0.0);

    void push(LoopInputSample sample);
    /// Runs loop steps up to and including time t.
    void advance_to(double t);

    double time() const { return t_; }
    /// Phase to apply at the NCO for beam n (rad, wrapped). Zero for the reference beam.
    double compensation(int beam) const;
    const BeamLoopState& state(int beam) const { return states_.at(beam); }
    const LoopParams& params() const { return params_; }
    std::size_t steps() const { return steps_; }

private:
    double input(int beam) const;
    double lead() const;
    double slope(int beam) const;
    void check_divergence();

    LoopParams params_;
    int n_beams_;
    double csi_period_;
    double ts_;
    double t_;
    double t0_{};
    std::size_t steps_{0};
    std::vector<BeamLoopState> states_;
    std::deque<LoopInputSample> pending_;
    std::optional<LoopInputSample> previous_;
    std::optional<LoopInputSample> current_;
    std::deque<LoopInputSample> history_;
    std::size_t history_limit_{2};
    std::vector<double> error_history_;
    int growth_run_{0};
};

/// Whole-trajectory convenience: runs a loop over [t_start, t_end] and returns
/// the compensation phase of every beam every `decimation` steps, [beam][sample].
std::vector<std::vector<double>> run_loop(const LoopParams& params, int n_beams, double csi_period_s,
                                          const std::vector<LoopInputSample>& inputs, double t_start, double t_end,
                                          std::size_t decimation = 1);

} // namespace meo
