// SPDX-License-Identifier: Apache-2.0
#include "meo/phase_loop.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <fmt/format.h>

namespace meo {

std::string to_string(CsiInterpolation i)
{
    return i == CsiInterpolation::Hold ? "hold" : "linear";
}

CsiInterpolation csi_interpolation_from_string(const std::string& text)
{
    if (text == "hold") return CsiInterpolation::Hold;
    if (text == "linear") return CsiInterpolation::Linear;
    throw Error("unknown interpolation '" + text + "' (expected hold or linear)");
}

LoopParams LoopParams::from_natural_frequency(double natural_frequency_hz, double damping, double sample_rate_hz)
{
    const double wn = kTwoPi * natural_frequency_hz;
    LoopParams p;
    p.kp = 2.0 * damping * wn;
    p.ki = wn * wn;
    p.sample_rate_hz = sample_rate_hz;
    return p;
}

double max_pole_modulus(const LoopParams& params)
{
    // State (phase, integrator*Ts) with e = -phase:
    //   z^2 - (2 - a - b) z + (1 - a) = 0,  a = kp Ts, b = ki Ts^2
    const double ts = 1.0 / params.sample_rate_hz;
    const double a = params.kp * ts;
    const double b = params.ki * ts * ts;
    const std::complex<double> p = -(2.0 - a - b);
    const std::complex<double> q = 1.0 - a;
    const std::complex<double> disc = std::sqrt(p * p - 4.0 * q);
    const auto z1 = (-p + disc) / 2.0;
    const auto z2 = (-p - disc) / 2.0;
    return std::max(std::abs(z1), std::abs(z2));
}

void loop_step(BeamLoopState& state, double error, const LoopParams& params)
{
    const double ts = 1.0 / params.sample_rate_hz;
    state.integrator += params.ki * ts * error;
    state.phase = wrap_pi(state.phase + params.kp * ts * error + state.integrator * ts);
    state.last_error = error;
}

std::vector<double> derive_loop_error(const std::vector<CsiReport>& current, const std::vector<CsiReport>& reference,
                                      int reference_beam, int n_beams, const std::vector<double>& last_error)
{
    if (current.empty() || reference.empty()) {
        if (!last_error.empty()) return last_error;
        return std::vector<double>(static_cast<std::size_t>(n_beams), 0.0);
    }
    std::vector<double> out(static_cast<std::size_t>(n_beams), 0.0);
    const auto ref = static_cast<std::size_t>(reference_beam);
    const std::size_t users = std::min(current.size(), reference.size());
    for (int n = 0; n < n_beams; ++n) {
        if (n == reference_beam) continue;
        const auto b = static_cast<std::size_t>(n);
        cplx acc{0.0, 0.0};
        for (std::size_t k = 0; k < users; ++k) {
            const CsiReport& c = current[k];
            const CsiReport& r = reference[k];
            const double drift = (c.diff_phases[b] - c.diff_phases[ref]) - (r.diff_phases[b] - r.diff_phases[ref]);
            const double w = c.magnitudes[b] * c.magnitudes[ref];
            acc += std::polar(w, drift);
        }
        out[b] = std::abs(acc) > 0.0 ? std::arg(acc) : 0.0;
    }
    return out;
}

std::vector<cplx> apply_nco(std::span<const cplx> samples, std::span<const double> phi)
{
    if (phi.size() < samples.size()) throw Error("NCO phase trajectory shorter than the sample block");
    std::vector<cplx> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i] * std::polar(1.0, -phi[i]);
    return out;
}

PhaseLoop::PhaseLoop(LoopParams params, int n_beams, double csi_period_s, double t_start)
    : params_(params), n_beams_(n_beams), csi_period_(csi_period_s), ts_(1.0 / params.sample_rate_hz), t_(t_start),
      states_(static_cast<std::size_t>(n_beams))
{
    if (!(params_.kp > 0.0) || !(params_.ki > 0.0)) throw Error("loop gains must be positive");
    if (params_.reference_beam < 0 || params_.reference_beam >= n_beams) throw Error("reference beam out of range");
    const double rho = max_pole_modulus(params_);
    if (!(rho < 1.0)) throw UnstableLoopError(fmt::format("loop poles outside the unit circle (|z| = {:.6f})", rho));
    t0_ = t_start;
    history_limit_ = static_cast<std::size_t>(std::max(1L, std::lround(params_.predictor_window_s / csi_period_s))) + 1;
}

void PhaseLoop::push(LoopInputSample sample)
{
    if (sample.phase.size() != static_cast<std::size_t>(n_beams_)) throw Error("loop input has wrong beam count");
    pending_.push_back(std::move(sample));
}

double PhaseLoop::input(int beam) const
{
    if (!current_) return 0.0;
    const double cur = current_->phase[static_cast<std::size_t>(beam)];
    if (params_.interpolation == CsiInterpolation::Hold || !previous_) return cur;
    const double prev = previous_->phase[static_cast<std::size_t>(beam)];
    const double frac = std::clamp((t_ - current_->t_available) / csi_period_, 0.0, 1.0);
    return prev + frac * (cur - prev);
}

double PhaseLoop::lead() const
{
    if (!current_) return 0.0;
    const double latency = current_->t_available - current_->t_measured;
    // A type-2 loop driven by e[n] = u[n] - phase[n-1] settles one sample ahead of its input.
    return latency + (params_.interpolation == CsiInterpolation::Linear ? csi_period_ : 0.5 * csi_period_) - ts_;
}

void PhaseLoop::check_divergence()
{
    double worst = 0.0;
    for (const auto& s : states_) worst = std::max(worst, std::abs(s.last_error));
    if (!error_history_.empty() && worst > 0.5 && worst > error_history_.back()) {
        ++growth_run_;
    } else {
        growth_run_ = 0;
    }
    error_history_.push_back(worst);
    if (growth_run_ > 5) {
        std::string trail;
        const std::size_t from = error_history_.size() > 8 ? error_history_.size() - 8 : 0;
        for (std::size_t i = from; i < error_history_.size(); ++i) trail += fmt::format(" {:.3f}", error_history_[i]);
        throw UnstableLoopError(fmt::format("phase loop diverging at t = {:.6f} s: |error| grew for {} CSI periods:{}",
                                            t_, growth_run_, trail));
    }
}

void PhaseLoop::advance_to(double t)
{
    const double eps = 1e-9 * ts_;
    while (t0_ + static_cast<double>(steps_ + 1) * ts_ <= t + eps) {
        ++steps_;
        t_ = t0_ + static_cast<double>(steps_) * ts_;
        bool fresh = false;
        while (!pending_.empty() && pending_.front().t_available <= t_ + eps) {
            previous_ = std::move(current_);
            current_ = std::move(pending_.front());
            pending_.pop_front();
            history_.push_back(*current_);
            while (history_.size() > history_limit_) history_.pop_front();
            fresh = true;
        }
        for (int n = 0; n < n_beams_; ++n) {
            if (n == params_.reference_beam) continue;
            auto& s = states_[static_cast<std::size_t>(n)];
            loop_step(s, wrap_pi(input(n) - s.phase), params_);
        }
        if (fresh) check_divergence();
    }
}

double PhaseLoop::compensation(int beam) const
{
    if (beam == params_.reference_beam) return 0.0;
    const auto& s = states_.at(static_cast<std::size_t>(beam));
    return wrap_pi(s.phase + slope(beam) * lead());
}

double PhaseLoop::slope(int beam) const
{
    if (history_.size() < 2) return 0.0;
    const auto& a = history_.front();
    const auto& b = history_.back();
    const double dt = b.t_measured - a.t_measured;
    if (!(dt > 0.0)) return 0.0;
    const auto n = static_cast<std::size_t>(beam);
    return (b.phase[n] - a.phase[n]) / dt;
}

std::vector<std::vector<double>> run_loop(const LoopParams& params, int n_beams, double csi_period_s,
                                          const std::vector<LoopInputSample>& inputs, double t_start, double t_end,
                                          std::size_t decimation)
{
    if (decimation == 0) throw Error("decimation must be at least 1");
    PhaseLoop loop(params, n_beams, csi_period_s, t_start);
    std::vector<LoopInputSample> sorted = inputs;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const LoopInputSample& a, const LoopInputSample& b) { return a.t_available < b.t_available; });
    for (auto& s : sorted) loop.push(std::move(s));
    const double ts = 1.0 / params.sample_rate_hz;
    const auto steps = static_cast<std::size_t>(std::floor((t_end - t_start) / ts + 1e-9));
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n_beams));
    for (auto& v : out) v.reserve(steps / decimation + 1);
    for (std::size_t s = 0; s <= steps; s += decimation) {
        loop.advance_to(t_start + static_cast<double>(s) * ts);
        for (int n = 0; n < n_beams; ++n) out[static_cast<std::size_t>(n)].push_back(loop.compensation(n));
    }
    return out;
}

} // namespace meo
