// SPDX-License-Identifier: Apache-2.0
#include "meo/engine.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "meo/phase_loop.hpp"

namespace meo {

namespace {

// Stream tags for mix_seed.
constexpr std::uint64_t kStreamCsi = 0x435349;
constexpr std::uint64_t kStreamEvm = 0x45564d;
constexpr std::uint64_t kStreamPhaseNoise = 0x504e00;

// Pre-roll before t = 0 so CSI queues, precoder and loop are in steady state
// when measurement starts.
constexpr double kWarmupS = 1.0;

struct PendingReport {
    double available;
    CsiReport report;
};

double mean_of(const std::vector<double>& v)
{
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string flag_list(const ImpairmentFlags& f)
{
    std::vector<std::string> on;
    if (f.uplink_doppler) on.emplace_back("ul_doppler");
    if (f.downlink_doppler) on.emplace_back("dl_doppler");
    if (f.uplink_delay) on.emplace_back("ul_delay");
    if (f.downlink_delay) on.emplace_back("dl_delay");
    if (f.payload_phase_noise) on.emplace_back("phase_noise");
    if (f.awgn) on.emplace_back("awgn");
    std::string s;
    for (std::size_t i = 0; i < on.size(); ++i) s += (i ? "+" : "") + on[i];
    return s.empty() ? "none" : s;
}

} // namespace

std::string to_string(SinrMode m)
{
    return m == SinrMode::ClosedForm ? "closed_form" : "evm";
}

SinrMode sinr_mode_from_string(const std::string& text)
{
    if (text == "closed_form") return SinrMode::ClosedForm;
    if (text == "evm") return SinrMode::Evm;
    throw Error("unknown SINR mode '" + text + "' (expected closed_form or evm)");
}

SinrMeter::SinrMeter(int users, SinrMode mode, std::uint64_t seed)
    : users_(users), mode_(mode), rng_(seed), signal_(static_cast<std::size_t>(users), 0.0),
      disturbance_(static_cast<std::size_t>(users), 0.0)
{
}

void SinrMeter::add(const CMatrix& H_eff, const CMatrix& W, double noise_var, std::size_t weight)
{
    const CMatrix G = H_eff * W;
    if (G.rows() != users_) throw Error("SINR meter: terminal count mismatch");
    if (mode_ == SinrMode::ClosedForm) {
        const double w = static_cast<double>(weight);
        for (int k = 0; k < users_; ++k) {
            double interference = 0.0;
            for (Eigen::Index j = 0; j < G.cols(); ++j) {
                if (j != k) interference += std::norm(G(k, j));
            }
            signal_[static_cast<std::size_t>(k)] += w * std::norm(G(k, k));
            disturbance_[static_cast<std::size_t>(k)] += w * (interference + noise_var);
        }
    } else {
        for (std::size_t n = 0; n < weight; ++n) {
            const CMatrix s = qpsk_symbols(users_, 1, rng_);
            const CMatrix r = forward_link(H_eff, W, s, noise_var, rng_);
            for (int k = 0; k < users_; ++k) {
                const cplx wanted = G(k, k) * s(k, 0);
                signal_[static_cast<std::size_t>(k)] += std::norm(wanted);
                disturbance_[static_cast<std::size_t>(k)] += std::norm(r(k, 0) - wanted);
            }
        }
    }
    samples_ += weight;
}

std::vector<double> SinrMeter::sinr_db() const
{
    std::vector<double> out(static_cast<std::size_t>(users_));
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = disturbance_[k] > 0.0 ? to_db(signal_[k] / disturbance_[k]) : kCappedDb;
    }
    return out;
}

void SinrMeter::reset()
{
    std::fill(signal_.begin(), signal_.end(), 0.0);
    std::fill(disturbance_.begin(), disturbance_.end(), 0.0);
    samples_ = 0;
}

std::vector<double> measure_sinr(const CMatrix& H_eff, const CMatrix& W, double noise_var,
                                 const MeasurementWindow& window, std::uint64_t seed)
{
    SinrMeter meter(static_cast<int>(H_eff.rows()), window.mode, seed);
    if (window.mode == SinrMode::Evm) {
        if (window.symbols < 100) throw Error("evm measurement needs at least 100 symbols");
        meter.add(H_eff, W, noise_var, window.symbols);
    } else {
        meter.add(H_eff, W, noise_var);
    }
    return meter.sinr_db();
}

double ExperimentResult::overall_mean_db() const
{
    return mean_of(average_db);
}

SimulationContext SimulationContext::prepare(const Scenario& scenario)
{
    SimulationContext ctx;
    ctx.scenario = scenario;
    ctx.pass = build_geometry_series(scenario);
    ctx.uplink_doppler_hz = uplink_doppler(ctx.pass, scenario.plan);
    const LinkTiming still = apply_downlink_effects(ctx.pass, ImpairmentFlags{}, scenario.plan);
    ctx.channel = build_channel_series(scenario, ctx.pass, still);
    return ctx;
}

void SimulationContext::replay(ChannelSeries external)
{
    if (external.size() != pass.t.size()) {
        throw Error(fmt::format("replayed channel has {} rows, the pass grid has {}", external.size(), pass.t.size()));
    }
    for (const auto& H : external.H) {
        if (H.rows() != scenario.n_terminals() || H.cols() != scenario.n_beams) {
            throw Error("replayed channel dimensions differ from the scenario");
        }
    }
    external.scenario_hash = channel.scenario_hash;
    channel = std::move(external);
}

ExperimentResult run_condition(const SimulationContext& ctx, const ExperimentCondition& cond, std::uint64_t seed,
                               const RunOptions& options, ConditionTrace* trace)
{
    ExperimentResult res;
    res.condition = cond;
    res.seed = seed;
    res.scenario_hash = scenario_hash(ctx.scenario);

    const int K = ctx.scenario.n_terminals();
    const int N = ctx.scenario.n_beams;
    res.sinr_db.assign(static_cast<std::size_t>(K), {});

    try {
        Scenario sc = ctx.scenario;
        sc.flags = cond.flags;
        const TimeGrid& grid = sc.grid;
        const PassGeometry& pass = ctx.pass;
        const double fm = grid.measure_rate_hz;
        const long per_slow = std::lround(grid.slow_step_s * fm);
        const long per_csi = std::lround(grid.csi_period_s * fm);
        const long per_w = std::lround(grid.precoder_period_s * fm);
        const long n_meas = static_cast<long>(pass.t.size() - 1) * per_slow;
        const long warm = static_cast<long>(std::ceil(kWarmupS / grid.precoder_period_s)) * per_w;
        const double power = K;

        const LinkTiming timing = apply_downlink_effects(pass, sc.flags, sc.plan);
        const auto eps = doppler_rotation(pass.t, timing.gamma_frequency_hz);
        const double noise_var = sc.flags.awgn ? noise_variance_for_snr(sc.flags.snr_db) : 0.0;

        const bool ul = sc.flags.uplink_doppler;
        const bool pn = sc.flags.payload_phase_noise;
        const bool dynamic = ul || pn || cond.compensation || options.mode == SinrMode::Evm;
        const long stride = dynamic ? 1 : per_csi;

        std::vector<IntegratedPhase> drift;
        if (ul) {
            const auto residual = residual_uplink_doppler(ctx.uplink_doppler_hz, sc.flags.residual_doppler_bound_hz,
                                                          sc.flags.residual_scaling);
            for (int b = 0; b < N; ++b) drift.emplace_back(pass.t, residual[static_cast<std::size_t>(b)]);
        }
        std::vector<std::vector<double>> noise;
        if (pn) {
            for (int b = 0; b < N; ++b) {
                noise.push_back(gen_phase_noise_decimated(sc.phase_noise, grid.sample_rate_hz, fm,
                                                          static_cast<std::size_t>(n_meas + warm),
                                                          mix_seed(seed, kStreamPhaseNoise + static_cast<std::uint64_t>(b))));
            }
        }
        auto uplink_phase = [&](int b, long m) {
            double p = 0.0;
            if (ul) p += drift[static_cast<std::size_t>(b)].at(static_cast<double>(m) / fm);
            if (pn) p += noise[static_cast<std::size_t>(b)][static_cast<std::size_t>(m + warm)];
            return p;
        };

        std::optional<PhaseLoop> loop;
        if (cond.compensation) loop.emplace(sc.loop, N, grid.csi_period_s, static_cast<double>(-warm) / fm);

        std::vector<std::deque<PendingReport>> queue(static_cast<std::size_t>(K));
        std::vector<std::optional<CsiReport>> latest(static_cast<std::size_t>(K));
        std::vector<CsiReport> prev_reports;
        std::vector<double> out_phase(static_cast<std::size_t>(N), 0.0);
        std::vector<double> prev_out(static_cast<std::size_t>(N), 0.0);
        std::vector<double> raw_phase(static_cast<std::size_t>(N), 0.0);
        double last_available = -std::numeric_limits<double>::infinity();

        PrecoderState W = identity_precoder(N, K, power);
        SinrMeter meter(K, options.mode, mix_seed(seed, kStreamEvm));
        std::mt19937_64 csi_rng(mix_seed(seed, kStreamCsi));
        std::vector<cplx> row(static_cast<std::size_t>(N));
        CMatrix H_eff(K, N);

        for (long m = -warm; m < n_meas; m += stride) {
            const double t = static_cast<double>(m) / fm;
            const auto i = static_cast<std::size_t>(m < 0 ? 0 : m / per_slow);
            const CMatrix& H = ctx.channel.H[i];

            if (loop) {
                loop->advance_to(t);
                for (int b = 0; b < N; ++b) out_phase[static_cast<std::size_t>(b)] = loop->compensation(b);
            }
            for (int b = 0; b < N; ++b) {
                const cplx beam = dynamic ? std::polar(1.0, uplink_phase(b, m) - out_phase[static_cast<std::size_t>(b)])
                                          : cplx(1.0, 0.0);
                for (int k = 0; k < K; ++k) {
                    H_eff(k, b) = H(k, b) * beam * std::polar(1.0, eps[static_cast<std::size_t>(k)][i]);
                }
            }

            if (m % per_csi == 0) {
                std::vector<CsiReport> reports;
                double available = t;
                for (int k = 0; k < K; ++k) {
                    for (int b = 0; b < N; ++b) row[static_cast<std::size_t>(b)] = H_eff(k, b);
                    CsiReport rep = estimate_csi(row, k, t, sc.csi.pilot_len, noise_var, csi_rng);
                    const double arrive = t + timing.csi_latency(static_cast<std::size_t>(k), i);
                    available = std::max(available, arrive);
                    reports.push_back(rep);
                    queue[static_cast<std::size_t>(k)].push_back({arrive, std::move(rep)});
                }
                if (loop) {
                    if (!prev_reports.empty()) {
                        const auto err = derive_loop_error(reports, prev_reports, sc.loop.reference_beam, N);
                        for (std::size_t b = 0; b < raw_phase.size(); ++b) {
                            raw_phase[b] += wrap_pi(err[b] + out_phase[b] - prev_out[b]);
                        }
                    }
                    last_available = std::max(last_available, available);
                    loop->push({t, last_available, raw_phase});
                    prev_reports = reports;
                    prev_out = out_phase;
                }
                if (trace && m >= 0 && m % per_w == 0) {
                    trace->csi.insert(trace->csi.end(), reports.begin(), reports.end());
                }
            }

            for (std::size_t k = 0; k < queue.size(); ++k) {
                while (!queue[k].empty() && queue[k].front().available <= t + 1e-12) {
                    latest[k] = std::move(queue[k].front().report);
                    queue[k].pop_front();
                }
            }

            if (cond.precoding && m % per_w == 0 &&
                std::all_of(latest.begin(), latest.end(), [](const auto& r) { return r.has_value(); })) {
                const auto view = assemble_gw_channel_view(latest, N, t, sc.csi.staleness_bound_s);
                W = compute_precoder(view.H_hat, sc.precoder, noise_var, power, t);
                if (trace && m >= 0) trace->precoders.emplace_back(t, W.W);
            }

            if (trace && loop && m >= 0 && m % static_cast<long>(options.loop_trace_decimation) == 0) {
                trace->loop_t.push_back(t);
                trace->loop_phase.resize(static_cast<std::size_t>(N));
                for (int b = 0; b < N; ++b) trace->loop_phase[static_cast<std::size_t>(b)].push_back(out_phase[static_cast<std::size_t>(b)]);
            }

            if (m >= 0) {
                meter.add(H_eff, W.W, noise_var, static_cast<std::size_t>(stride));
                if ((m + stride) % per_slow == 0) {
                    const auto s = meter.sinr_db();
                    for (int k = 0; k < K; ++k) res.sinr_db[static_cast<std::size_t>(k)].push_back(s[static_cast<std::size_t>(k)]);
                    res.t.push_back(pass.t[i]);
                    meter.reset();
                }
            }
        }
        res.completed = true;
    } catch (const std::exception& e) {
        res.failure = e.what();
        res.completed = false;
    }

    res.average_db.assign(res.t.size(), 0.0);
    for (std::size_t i = 0; i < res.t.size(); ++i) {
        double acc = 0.0;
        for (const auto& series : res.sinr_db) acc += series[i];
        res.average_db[i] = acc / static_cast<double>(K);
    }
    for (const auto& series : res.sinr_db) res.mean_db.push_back(mean_of(series));
    return res;
}

ExperimentResult run_condition(const Scenario& scenario, const ExperimentCondition& condition, std::uint64_t seed,
                               const RunOptions& options)
{
    return run_condition(SimulationContext::prepare(scenario), condition, seed, options);
}

std::vector<ExperimentCondition> default_matrix(const Scenario& scenario)
{
    ImpairmentFlags base = scenario.flags;
    base.uplink_doppler = base.downlink_doppler = base.uplink_delay = base.downlink_delay = false;
    base.payload_phase_noise = false;
    base.awgn = true;
    ImpairmentFlags all = base;
    all.uplink_doppler = all.downlink_doppler = all.uplink_delay = all.downlink_delay = true;
    all.payload_phase_noise = true;

    auto with = [&](bool ImpairmentFlags::*flag) {
        ImpairmentFlags f = base;
        f.*flag = true;
        return f;
    };
    return {
        {"off_all", false, false, all},
        {"on_baseline", true, false, base},
        {"on_ul_doppler", true, false, with(&ImpairmentFlags::uplink_doppler)},
        {"on_dl_doppler", true, false, with(&ImpairmentFlags::downlink_doppler)},
        {"on_ul_delay", true, false, with(&ImpairmentFlags::uplink_delay)},
        {"on_dl_delay", true, false, with(&ImpairmentFlags::downlink_delay)},
        {"on_phase_noise", true, false, with(&ImpairmentFlags::payload_phase_noise)},
        {"on_all", true, false, all},
        {"on_all_comp", true, true, all},
    };
}

std::uint64_t condition_seed(std::uint64_t master_seed, const std::string& label)
{
    return mix_seed(master_seed, fnv1a64(label));
}

std::vector<ExperimentResult> run_matrix(const SimulationContext& context,
                                         const std::vector<ExperimentCondition>& conditions,
                                         std::uint64_t master_seed, const RunOptions& options)
{
    std::vector<ExperimentResult> out;
    out.reserve(conditions.size());
    for (const auto& c : conditions) out.push_back(run_condition(context, c, condition_seed(master_seed, c.label), options));
    return out;
}

void write_condition_csv(std::ostream& out, const ExperimentResult& r)
{
    out << "t_s";
    for (std::size_t k = 0; k < r.sinr_db.size(); ++k) out << fmt::format(",ut{}_sinr_db", k);
    out << ",avg_sinr_db\n";
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        out << fmt::format("{:.6f}", r.t[i]);
        for (const auto& s : r.sinr_db) out << fmt::format(",{:.6f}", s[i]);
        out << fmt::format(",{:.6f}\n", r.average_db[i]);
    }
}

namespace {

const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Redraws the SINR panels from the CSV files in this directory."""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

HERE = os.path.dirname(os.path.abspath(__file__))


def load(label):
    path = os.path.join(HERE, label + ".csv")
    if not os.path.exists(path):
        return None
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    cols = {name: [float(r[i]) for r in body] for i, name in enumerate(head)}
    return cols


def per_ut(ax, cols, title):
    for name in cols:
        if name.startswith("ut"):
            ax.plot(cols["t_s"], cols[name], lw=0.8, label=name.split("_")[0].upper())
    ax.set_title(title)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("SINR (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)


def averages(ax, labels, title):
    for label in labels:
        cols = load(label)
        if cols is not None:
            ax.plot(cols["t_s"], cols["avg_sinr_db"], lw=0.9, label=label)
    ax.set_title(title)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("average SINR (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)


def save(fig, name):
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, name), dpi=120, metadata={"Software": None})
    plt.close(fig)


def main():
    panels = [("off_all", "precoding OFF, all impairments"), ("on_baseline", "precoding ON, baseline"),
              ("on_all", "precoding ON, all impairments"), ("on_all_comp", "precoding ON, all + compensation")]
    fig, axes = plt.subplots(2, 2, figsize=(11, 7), sharey=True)
    for ax, (label, title) in zip(axes.flat, panels):
        cols = load(label)
        if cols is not None:
            per_ut(ax, cols, title)
    save(fig, "sinr_per_ut.png")

    fig, ax = plt.subplots(figsize=(9, 5))
    averages(ax, ["off_all", "on_baseline", "on_ul_doppler", "on_dl_doppler", "on_ul_delay", "on_dl_delay",
                  "on_phase_noise"], "single impairments")
    save(fig, "sinr_single_impairments.png")

    fig, ax = plt.subplots(figsize=(9, 5))
    averages(ax, ["off_all", "on_baseline", "on_all", "on_all_comp"], "compensation")
    save(fig, "sinr_compensation.png")
    return 0


if __name__ == "__main__":
    sys.exit(main())
)PY";

} // namespace

void emit_results(const std::vector<ExperimentResult>& results, const Scenario& scenario,
                  const std::filesystem::path& out_dir, std::uint64_t master_seed, const RunOptions& options)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create " + out_dir.string() + ": " + ec.message());
    auto open = [](const std::filesystem::path& p) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw Error("cannot write " + p.string());
        return f;
    };

    for (const auto& r : results) {
        auto f = open(out_dir / (r.condition.label + ".csv"));
        write_condition_csv(f, r);
        if (!f) throw Error("write failed: " + (out_dir / (r.condition.label + ".csv")).string());
    }

    {
        auto f = open(out_dir / "summary.csv");
        f << "label,precoding,compensation,impairments,completed";
        const std::size_t K = scenario.terminals.size();
        for (std::size_t k = 0; k < K; ++k) f << fmt::format(",ut{}_mean_db", k);
        f << ",avg_mean_db\n";
        for (const auto& r : results) {
            f << fmt::format("{},{},{},{},{}", r.condition.label, r.condition.precoding ? "on" : "off",
                             r.condition.compensation ? "on" : "off", flag_list(r.condition.flags),
                             r.completed ? "yes" : "no");
            for (std::size_t k = 0; k < K; ++k) {
                f << fmt::format(",{:.6f}", k < r.mean_db.size() ? r.mean_db[k] : std::nan(""));
            }
            f << fmt::format(",{:.6f}\n", r.overall_mean_db());
        }
    }

    {
        auto f = open(out_dir / "metadata.txt");
        f << fmt::format("software_version = {}\n", kSoftwareVersion);
        f << fmt::format("scenario_name = {}\n", scenario.name);
        f << fmt::format("scenario_hash = {:016x}\n", scenario_hash(scenario));
        f << fmt::format("master_seed = {}\n", master_seed);
        f << fmt::format("sinr_mode = {}\n", to_string(options.mode));
        f << fmt::format("precoder = {}\n", to_string(scenario.precoder));
        f << "power_budget = K (sum-power constraint)\n";
        f << "non_precoded_reference = beam k -> terminal k, same total power\n";
        f << fmt::format("slow_step_s = {}\n", scenario.grid.slow_step_s);
        f << fmt::format("csi_period_s = {}\n", scenario.grid.csi_period_s);
        f << fmt::format("precoder_period_s = {}\n", scenario.grid.precoder_period_s);
        f << fmt::format("sample_rate_hz = {}\n", scenario.grid.sample_rate_hz);
        f << fmt::format("measure_rate_hz = {}\n", scenario.grid.measure_rate_hz);
        f << fmt::format("snr_db = {}\n", scenario.flags.snr_db);
        f << fmt::format("residual_doppler_bound_hz = {}\n", scenario.flags.residual_doppler_bound_hz);
        f << fmt::format("residual_scaling = {}\n",
                         scenario.flags.residual_scaling == ResidualScaling::Common ? "common" : "per_beam");
        f << fmt::format("element_exponent = {}\n", scenario.antenna.element_exponent);
        f << fmt::format("loop_kp = {}\nloop_ki = {}\n", scenario.loop.kp, scenario.loop.ki);
        f << fmt::format("loop_interpolation = {}\n", to_string(scenario.loop.interpolation));
        f << fmt::format("loop_predictor_window_s = {}\n", scenario.loop.predictor_window_s);
        f << fmt::format("pilot_len = {}\n", scenario.csi.pilot_len);
        f << "phase_noise_mask =";
        for (const auto& [off, dbc] : scenario.phase_noise.anchors) f << fmt::format(" ({}, {})", off, dbc);
        f << "\n";
        f << fmt::format("warmup_s = {}\n", kWarmupS);
        for (const auto& r : results) {
            f << fmt::format("condition {} seed={} completed={}{}\n", r.condition.label, r.seed,
                             r.completed ? "yes" : "no", r.failure.empty() ? "" : " failure=" + r.failure);
        }
    }

    {
        auto f = open(out_dir / "scenario.txt");
        f << serialize_scenario(scenario);
    }
    {
        auto f = open(out_dir / "plot_results.py");
        f << kPlotScript;
    }
    std::filesystem::permissions(out_dir / "plot_results.py", std::filesystem::perms::owner_exec,
                                 std::filesystem::perm_options::add, ec);
}

} // namespace meo
