// SPDX-License-Identifier: Apache-2.0
#include "meo/channel.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "meo/antenna.hpp"
#include "meo/impairments.hpp"
#include "meo/orbit.hpp"
#include "meo/scenario.hpp"

namespace meo {

double fspl_amplitude(double range_m, double carrier_hz)
{
    if (!(range_m > 0.0)) throw Error("free-space loss needs a positive range");
    return kSpeedOfLight / carrier_hz / (4.0 * kPi * range_m);
}

CMatrix build_H(const Scenario& scenario, const PassGeometry& pass, std::size_t slow_index, double rx_gain,
                std::vector<std::string>* warnings)
{
    const auto K = static_cast<Eigen::Index>(scenario.terminals.size());
    const Eigen::Index N = scenario.n_beams;
    CMatrix H = CMatrix::Zero(K, N);
    const auto beams = steer_beams(scenario, pass, slow_index);
    const auto dirs = terminal_directions(scenario, pass, slow_index);
    const double f = scenario.plan.downlink_hz;
    for (Eigen::Index k = 0; k < K; ++k) {
        const GeometrySample& g = pass.terminal(static_cast<std::size_t>(k)).samples.at(slow_index);
        if (g.elevation_deg < 0.0) {
            if (warnings) {
                warnings->push_back(fmt::format("t = {:.3f} s: {} below the horizon, row zeroed", g.t,
                                                scenario.terminals[static_cast<std::size_t>(k)].name));
            }
            continue;
        }
        const cplx path = std::polar(fspl_amplitude(g.range_m, f) * rx_gain,
                                     -kTwoPi * std::fmod(f * g.range_m / kSpeedOfLight, 1.0));
        for (Eigen::Index j = 0; j < N; ++j) {
            const BeamGain bg = beam_gain(scenario.antenna, beams[static_cast<std::size_t>(j)],
                                          dirs[static_cast<std::size_t>(k)]);
            if (bg.behind_array && warnings) {
                warnings->push_back(fmt::format("t = {:.3f} s: {} behind the array for beam {}", g.t,
                                                scenario.terminals[static_cast<std::size_t>(k)].name, j));
            }
            H(k, j) = bg.value * path;
        }
    }
    return H;
}

std::vector<std::vector<double>> doppler_rotation(const std::vector<double>& t,
                                                  const std::vector<std::vector<double>>& freq_hz)
{
    std::vector<std::vector<double>> eps(freq_hz.size());
    for (std::size_t k = 0; k < freq_hz.size(); ++k) {
        if (freq_hz[k].size() != t.size()) throw Error("Doppler series length differs from the time grid");
        eps[k].assign(t.size(), 0.0);
        for (std::size_t i = 1; i < t.size(); ++i) {
            eps[k][i] = eps[k][i - 1] + kPi * (freq_hz[k][i - 1] + freq_hz[k][i]) * (t[i] - t[i - 1]);
        }
    }
    return eps;
}

std::vector<double> c_over_i(const CMatrix& H)
{
    if (H.rows() > H.cols()) throw Error("C/I needs K <= N");
    std::vector<double> out(static_cast<std::size_t>(H.rows()));
    for (Eigen::Index k = 0; k < H.rows(); ++k) {
        double interference = 0.0;
        for (Eigen::Index j = 0; j < H.cols(); ++j) {
            if (j != k) interference += std::norm(H(k, j));
        }
        const double carrier = std::norm(H(k, k));
        out[static_cast<std::size_t>(k)] = interference > 0.0 ? to_db(carrier / interference) : kCappedDb;
    }
    return out;
}

ChannelSnapshot ChannelSeries::snapshot(std::size_t i) const
{
    ChannelSnapshot s;
    s.t = t.at(i);
    s.H = H.at(i);
    s.H_meo = s.H;
    for (Eigen::Index k = 0; k < s.H.rows(); ++k) {
        const double e = epsilon.empty() ? 0.0 : epsilon[static_cast<std::size_t>(k)][i];
        const cplx g = std::polar(1.0, e);
        s.gamma.push_back(g);
        s.H_meo.row(k) *= g;
    }
    return s;
}

ChannelSeries build_channel_series(const Scenario& scenario, const PassGeometry& pass, const LinkTiming& timing)
{
    ChannelSeries series;
    series.t = pass.t;
    series.H.reserve(pass.t.size());
    for (std::size_t i = 0; i < pass.t.size(); ++i) series.H.push_back(build_H(scenario, pass, i, 1.0));
    const std::size_t centre = pass.t.size() / 2;
    const CMatrix& Hc = series.H[centre];
    double mean = 0.0;
    const Eigen::Index K = Hc.rows();
    for (Eigen::Index k = 0; k < K; ++k) mean += std::norm(Hc(k, k));
    mean /= static_cast<double>(std::max<Eigen::Index>(K, 1));
    if (!(mean > 0.0)) throw Error("no desired-signal power at the window centre");
    series.link_scale = 1.0 / std::sqrt(mean);
    for (auto& H : series.H) H *= series.link_scale;
    series.epsilon = doppler_rotation(series.t, timing.gamma_frequency_hz);
    series.scenario_hash = scenario_hash(scenario);
    return series;
}

void write_channel_csv(std::ostream& out, const ChannelSeries& series)
{
    if (series.H.empty()) throw Error("empty channel series");
    const Eigen::Index K = series.H.front().rows();
    const Eigen::Index N = series.H.front().cols();
    out << "t_s";
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index j = 0; j < N; ++j) out << fmt::format(",mag_db_{}_{}", k, j);
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index j = 0; j < N; ++j) out << fmt::format(",phase_rad_{}_{}", k, j);
    for (Eigen::Index k = 0; k < K; ++k) out << fmt::format(",cir_db_{}", k);
    out << '\n';
    for (std::size_t i = 0; i < series.size(); ++i) {
        const CMatrix& H = series.H[i];
        out << fmt::format("{:.17g}", series.t[i]);
        for (Eigen::Index k = 0; k < K; ++k)
            for (Eigen::Index j = 0; j < N; ++j) out << fmt::format(",{:.17g}", 20.0 * std::log10(std::abs(H(k, j))));
        for (Eigen::Index k = 0; k < K; ++k)
            for (Eigen::Index j = 0; j < N; ++j) out << fmt::format(",{:.17g}", std::arg(H(k, j)));
        for (double c : c_over_i(H)) out << fmt::format(",{:.17g}", c);
        out << '\n';
    }
}

ChannelSeries read_channel_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw Error("channel CSV is empty");
    int mags = 0;
    int cirs = 0;
    {
        std::stringstream hs(line);
        std::string col;
        while (std::getline(hs, col, ',')) {
            if (col.rfind("mag_db_", 0) == 0) ++mags;
            if (col.rfind("cir_db_", 0) == 0) ++cirs;
        }
    }
    if (cirs == 0 || mags % cirs != 0) throw Error("channel CSV header lacks mag_db/cir_db columns");
    const int K = cirs;
    const int N = mags / cirs;
    ChannelSeries series;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> v;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                v.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error(fmt::format("channel CSV line {}: bad number '{}'", lineno, cell));
            }
        }
        if (v.size() != static_cast<std::size_t>(1 + 2 * K * N + K)) {
            throw Error(fmt::format("channel CSV line {}: expected {} columns, got {}", lineno, 1 + 2 * K * N + K,
                                    v.size()));
        }
        CMatrix H(K, N);
        for (int k = 0; k < K; ++k) {
            for (int j = 0; j < N; ++j) {
                const double mag = std::pow(10.0, v[static_cast<std::size_t>(1 + k * N + j)] / 20.0);
                const double ph = v[static_cast<std::size_t>(1 + K * N + k * N + j)];
                H(k, j) = std::polar(mag, ph);
            }
        }
        series.t.push_back(v[0]);
        series.H.push_back(std::move(H));
    }
    if (series.t.size() < 2) throw Error("channel CSV needs at least two rows");
    series.epsilon.assign(static_cast<std::size_t>(K), std::vector<double>(series.t.size(), 0.0));
    series.link_scale = 1.0;
    return series;
}

} // namespace meo
