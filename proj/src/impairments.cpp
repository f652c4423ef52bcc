// SPDX-License-Identifier: Apache-2.0
#include "meo/impairments.hpp"

#include <algorithm>
#include <fftw3.h>
#include <memory>

#include "meo/orbit.hpp"
#include "meo/scenario.hpp"

namespace meo {

double PhaseNoiseMask::dbc_per_hz(double f) const
{
    if (anchors.empty()) return -300.0;
    if (f <= anchors.front().first) return anchors.front().second;
    if (f >= anchors.back().first) return anchors.back().second;
    const auto it = std::upper_bound(anchors.begin(), anchors.end(), f,
                                     [](double x, const std::pair<double, double>& a) { return x < a.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = std::log10(f / lo.first) / std::log10(hi.first / lo.first);
    return lo.second + w * (hi.second - lo.second);
}

std::vector<std::string> PhaseNoiseMask::problems() const
{
    std::vector<std::string> out;
    if (anchors.empty()) out.emplace_back("phase_noise: mask needs at least one anchor");
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (!(anchors[i].first > 0.0)) out.push_back("phase_noise: offset " + std::to_string(i) + " must be positive");
        if (!std::isfinite(anchors[i].second)) out.push_back("phase_noise: PSD " + std::to_string(i) + " not finite");
        if (i > 0 && !(anchors[i].first > anchors[i - 1].first)) {
            out.emplace_back("phase_noise: offsets must be strictly increasing");
        }
    }
    return out;
}

PhaseNoiseMask PhaseNoiseMask::default_mask()
{
    // The 10 kHz -> 100 kHz segment (-10 dB/decade) is cut at 50 kHz, the
    // Nyquist frequency of the default 100 kHz sample grid.
    return {{{100.0, -60.0}, {1e3, -75.0}, {1e4, -90.0}, {5e4, -90.0 - 10.0 * std::log10(5.0)}}};
}

std::vector<double> synthesize_gaussian_process(const std::function<double(double)>& two_sided_psd,
                                                double sample_rate, std::size_t n, std::uint64_t seed)
{
    if (n == 0) return {};
    if (n == 1) return {0.0};
    const std::size_t bins = n / 2 + 1;
    auto* spectrum = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
    std::vector<double> out(n);
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> guard(spectrum, fftw_free);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double nd = static_cast<double>(n);
    spectrum[0][0] = 0.0;
    spectrum[0][1] = 0.0;
    for (std::size_t k = 1; k < bins; ++k) {
        const double f = static_cast<double>(k) * sample_rate / nd;
        const bool nyquist = (n % 2 == 0) && k == n / 2;
        const double power = two_sided_psd(f) * sample_rate * nd;
        if (nyquist) {
            spectrum[k][0] = std::sqrt(power) * normal(rng);
            spectrum[k][1] = 0.0;
        } else {
            const double a = std::sqrt(0.5 * power);
            spectrum[k][0] = a * normal(rng);
            spectrum[k][1] = a * normal(rng);
        }
    }
    fftw_plan plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), spectrum, out.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    for (double& x : out) x /= nd;
    return out;
}

std::vector<double> gen_phase_noise(const PhaseNoiseMask& mask, double sample_rate, std::size_t n, std::uint64_t seed)
{
    if (mask.highest_offset() > 0.5 * sample_rate * (1.0 + 1e-12)) {
        throw Error("phase-noise mask extends to " + std::to_string(mask.highest_offset()) +
                    " Hz, beyond the Nyquist frequency " + std::to_string(0.5 * sample_rate) + " Hz");
    }
    return synthesize_gaussian_process([&](double f) { return mask.two_sided_psd(f); }, sample_rate, n, seed);
}

std::vector<double> gen_phase_noise_decimated(const PhaseNoiseMask& mask, double source_rate, double target_rate,
                                              std::size_t n, std::uint64_t seed)
{
    if (!(target_rate > 0.0) || target_rate > source_rate) throw Error("target rate must be in (0, source rate]");
    if (target_rate == source_rate) return gen_phase_noise(mask, source_rate, n, seed);
    if (mask.highest_offset() > 0.5 * source_rate * (1.0 + 1e-12)) {
        throw Error("phase-noise mask extends beyond the source Nyquist frequency");
    }
    // Folded PSD tabulated on a fine grid over [0, target/2] and interpolated.
    constexpr std::size_t grid = 8192;
    const double half_target = 0.5 * target_rate;
    const double half_source = 0.5 * source_rate;
    std::vector<double> folded(grid + 1);
    for (std::size_t i = 0; i <= grid; ++i) {
        const double f = half_target * static_cast<double>(i) / grid;
        double sum = 0.0;
        for (int m = 0;; ++m) {
            const double up = f + m * target_rate;
            const double down = m * target_rate - f;
            bool any = false;
            if (up <= half_source) {
                sum += mask.two_sided_psd(up);
                any = true;
            }
            if (m > 0 && down <= half_source) {
                sum += mask.two_sided_psd(down);
                any = true;
            }
            if (!any) break;
        }
        folded[i] = sum;
    }
    auto psd = [&](double f) {
        const double x = std::clamp(f / half_target, 0.0, 1.0) * grid;
        const auto i = std::min<std::size_t>(static_cast<std::size_t>(x), grid - 1);
        const double w = x - static_cast<double>(i);
        return (1.0 - w) * folded[i] + w * folded[i + 1];
    };
    return synthesize_gaussian_process(psd, target_rate, n, seed);
}

std::vector<std::vector<double>> residual_uplink_doppler(const std::vector<std::vector<double>>& doppler,
                                                         double bound_hz, ResidualScaling scaling)
{
    if (bound_hz < 0.0) throw Error("residual Doppler bound must be non-negative");
    std::vector<std::vector<double>> out(doppler.size());
    auto peak_of = [](const std::vector<double>& v) {
        double p = 0.0;
        for (double x : v) p = std::max(p, std::abs(x));
        return p;
    };
    double common_peak = 0.0;
    for (const auto& beam : doppler) common_peak = std::max(common_peak, peak_of(beam));
    for (std::size_t b = 0; b < doppler.size(); ++b) {
        const double peak = scaling == ResidualScaling::Common ? common_peak : peak_of(doppler[b]);
        const double scale = peak > 0.0 ? bound_hz / peak : 0.0;
        out[b].reserve(doppler[b].size());
        for (double x : doppler[b]) out[b].push_back(x * scale);
    }
    return out;
}

IntegratedPhase::IntegratedPhase(std::vector<double> t, std::vector<double> freq_hz)
    : t_(std::move(t)), f_(std::move(freq_hz))
{
    if (t_.size() != f_.size() || t_.empty()) throw Error("IntegratedPhase: time and frequency sizes differ");
    cum_.resize(t_.size());
    cum_[0] = 0.0;
    for (std::size_t i = 1; i < t_.size(); ++i) {
        cum_[i] = cum_[i - 1] + kPi * (f_[i - 1] + f_[i]) * (t_[i] - t_[i - 1]);
    }
}

double IntegratedPhase::frequency(double t) const
{
    if (t <= t_.front()) return f_.front();
    if (t >= t_.back()) return f_.back();
    const auto i = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
    const double w = (t - t_[i]) / (t_[i + 1] - t_[i]);
    return f_[i] + w * (f_[i + 1] - f_[i]);
}

double IntegratedPhase::at(double t) const
{
    if (t <= t_.front()) return kTwoPi * f_.front() * (t - t_.front());
    if (t >= t_.back()) return cum_.back() + kTwoPi * f_.back() * (t - t_.back());
    const auto i = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
    const double dt = t_[i + 1] - t_[i];
    const double tau = t - t_[i];
    return cum_[i] + kTwoPi * (f_[i] * tau + 0.5 * (f_[i + 1] - f_[i]) * tau * tau / dt);
}

std::vector<std::vector<double>> uplink_doppler(const PassGeometry& pass, const FrequencyPlan& plan)
{
    std::vector<std::vector<double>> out(plan.uplink_hz.size());
    for (std::size_t b = 0; b < plan.uplink_hz.size(); ++b) {
        out[b].reserve(pass.t.size());
        for (const auto& g : pass.gateway().samples) out[b].push_back(doppler_shift(g.range_rate_mps, plan.uplink_hz[b]));
    }
    return out;
}

std::vector<std::vector<double>> uplink_residual(const Scenario& scenario, const PassGeometry& pass)
{
    if (!scenario.flags.uplink_doppler) {
        return std::vector<std::vector<double>>(static_cast<std::size_t>(scenario.n_beams),
                                                std::vector<double>(pass.t.size(), 0.0));
    }
    return residual_uplink_doppler(uplink_doppler(pass, scenario.plan), scenario.flags.residual_doppler_bound_hz,
                                   scenario.flags.residual_scaling);
}

PhaseProcess beam_phase_process(const Scenario& scenario, const PassGeometry& pass, int beam, double rate,
                                 std::uint64_t seed)
{
    const auto n = static_cast<std::size_t>(std::llround(scenario.grid.duration_s * rate));
    PhaseProcess p{beam, rate, std::vector<double>(n, 0.0)};
    if (scenario.flags.uplink_doppler) {
        const auto residual = uplink_residual(scenario, pass);
        const IntegratedPhase integ(pass.t, residual.at(static_cast<std::size_t>(beam)));
        for (std::size_t i = 0; i < n; ++i) p.phase[i] = integ.at(static_cast<double>(i) / rate);
    }
    if (scenario.flags.payload_phase_noise) {
        const auto pn = gen_phase_noise_decimated(scenario.phase_noise, scenario.grid.sample_rate_hz, rate, n, seed);
        for (std::size_t i = 0; i < n; ++i) p.phase[i] += pn[i];
    }
    return p;
}

double noise_variance_for_snr(double snr_db)
{
    if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
    return from_db(-snr_db);
}

std::vector<cplx> apply_awgn(std::span<const cplx> symbols, double snr_db, std::uint64_t seed)
{
    std::vector<cplx> out(symbols.begin(), symbols.end());
    const double var = noise_variance_for_snr(snr_db);
    if (var == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * var));
    for (auto& s : out) {
        const double re = normal(rng);
        const double im = normal(rng);
        s += cplx(re, im);
    }
    return out;
}

LinkTiming apply_downlink_effects(const PassGeometry& pass, const ImpairmentFlags& flags, const FrequencyPlan& plan)
{
    const std::size_t n = pass.t.size();
    const std::size_t users = pass.stations.size() - 1;
    LinkTiming timing;
    timing.uplink_delay_s.assign(n, 0.0);
    timing.downlink_delay_s.assign(users, std::vector<double>(n, 0.0));
    timing.gamma_frequency_hz.assign(users, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        if (flags.uplink_delay) timing.uplink_delay_s[i] = path_delay(pass.gateway().samples[i].range_m);
        for (std::size_t k = 0; k < users; ++k) {
            const GeometrySample& g = pass.terminal(k).samples[i];
            if (flags.downlink_delay) timing.downlink_delay_s[k][i] = path_delay(g.range_m);
            if (flags.downlink_doppler) timing.gamma_frequency_hz[k][i] = doppler_shift(g.range_rate_mps, plan.downlink_hz);
        }
    }
    return timing;
}

} // namespace meo
