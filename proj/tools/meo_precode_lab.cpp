// SPDX-License-Identifier: Apache-2.0
// meo-precode-lab: command-line front end of the simulator.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "meo/antenna.hpp"
#include "meo/channel.hpp"
#include "meo/engine.hpp"
#include "meo/scenario.hpp"

using namespace meo;

namespace {

Scenario scenario_from(const std::string& path)
{
    return path.empty() ? default_scenario() : load_scenario(path);
}

bool on_off(const std::string& v, const char* what)
{
    if (v == "on") return true;
    if (v == "off") return false;
    throw Error(fmt::format("--{} expects on or off, got '{}'", what, v));
}

ImpairmentFlags parse_impairments(const std::string& csv, ImpairmentFlags base)
{
    base.uplink_doppler = base.downlink_doppler = base.uplink_delay = base.downlink_delay = false;
    base.payload_phase_noise = false;
    base.awgn = false;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "ul_doppler") base.uplink_doppler = true;
        else if (item == "dl_doppler") base.downlink_doppler = true;
        else if (item == "ul_delay") base.uplink_delay = true;
        else if (item == "dl_delay") base.downlink_delay = true;
        else if (item == "phase_noise") base.payload_phase_noise = true;
        else if (item == "awgn") base.awgn = true;
        else if (item == "all") base = [&] { auto f = ImpairmentFlags::all(); f.snr_db = base.snr_db; f.residual_doppler_bound_hz = base.residual_doppler_bound_hz; f.residual_scaling = base.residual_scaling; return f; }();
        else if (item == "none" || item.empty()) continue;
        else throw Error("unknown impairment '" + item + "'");
    }
    return base;
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    return f;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"MEO multibeam precoding testbed simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kSoftwareVersion);

    std::string scenario_path;
    std::string matrix = "default";
    std::uint64_t seed = 1;
    std::string out_dir = "results";
    std::string precoding, compensation, impairments, mode = "closed_form", channel_path;
    bool trace = false;

    auto* run = app.add_subcommand("run", "Run experiment conditions over the pass");
    run->add_option("--scenario", scenario_path, "Scenario file (bundled default when omitted)");
    run->add_option("--matrix", matrix, "default, custom, or a comma list of condition labels");
    run->add_option("--seed", seed, "Master seed");
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--precoding", precoding, "Override precoding: on|off");
    run->add_option("--compensation", compensation, "Override compensation: on|off");
    run->add_option("--impairments", impairments,
                    "Override impairments: comma list of ul_doppler,dl_doppler,ul_delay,dl_delay,phase_noise,awgn,all,none");
    run->add_option("--mode", mode, "SINR estimator: closed_form|evm");
    run->add_option("--channel", channel_path, "Replay a channel CSV instead of the synthesized channel");
    run->add_flag("--trace", trace, "Also write CSI reports, loop phases and precoders");

    std::string geo_out = "geometry.csv";
    auto* geo = app.add_subcommand("geometry", "Write the pass geometry CSV");
    geo->add_option("--scenario", scenario_path, "Scenario file");
    geo->add_option("--out", geo_out, "Output CSV");

    std::string ch_out = "channel.csv";
    auto* ch = app.add_subcommand("channel", "Write the channel series CSV (magnitude, phase, C/I)");
    ch->add_option("--scenario", scenario_path, "Scenario file");
    ch->add_option("--out", ch_out, "Output CSV");

    std::string pat_out = "pattern.csv";
    double theta_max = 10.0, theta_step = 0.05, phi_step = 5.0, steer_theta = 0.0, steer_phi = 0.0;
    auto* pat = app.add_subcommand("pattern", "Write an array pattern grid and print beam figures");
    pat->add_option("--scenario", scenario_path, "Scenario file (antenna section)");
    pat->add_option("--out", pat_out, "Output CSV");
    pat->add_option("--theta-max", theta_max, "Largest off-boresight angle, deg");
    pat->add_option("--theta-step", theta_step, "Theta step, deg");
    pat->add_option("--phi-step", phi_step, "Phi step, deg");
    pat->add_option("--steer-theta", steer_theta, "Steering theta, deg");
    pat->add_option("--steer-phi", steer_phi, "Steering phi, deg");

    bool dump_default = false;
    auto* scn = app.add_subcommand("scenario", "Print a scenario in normalized form");
    scn->add_option("--scenario", scenario_path, "Scenario file");
    scn->add_flag("--default", dump_default, "Print the bundled default scenario text");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*scn) {
            if (dump_default) {
                std::cout << default_scenario_text();
            } else {
                std::cout << serialize_scenario(scenario_from(scenario_path));
            }
            return 0;
        }

        const Scenario scenario = scenario_from(scenario_path);

        if (*geo) {
            const PassGeometry pass = build_geometry_series(scenario);
            auto f = open_out(geo_out);
            write_geometry_csv(f, pass, scenario.plan);
            std::cerr << fmt::format("pass: max elevation {:.3f} deg at {}\n", pass.max_elevation_deg,
                                     format_iso8601(pass.max_elevation_time));
            return 0;
        }
        if (*ch) {
            const SimulationContext ctx = SimulationContext::prepare(scenario);
            auto f = open_out(ch_out);
            write_channel_csv(f, ctx.channel);
            return 0;
        }
        if (*pat) {
            const BeamSteering steer = BeamSteering::toward(0, {steer_theta * kDeg, steer_phi * kDeg});
            auto f = open_out(pat_out);
            write_pattern_csv(f, scenario.antenna, steer, theta_max, theta_step, phi_step);
            const PatternSample peak = pattern_sample(scenario.antenna, steer, {steer_theta * kDeg, steer_phi * kDeg});
            std::cout << fmt::format("peak co-polar gain     {:.3f} dBi\n", peak.co_polar_dbi);
            std::cout << fmt::format("peak cross-polar gain  {:.3f} dBi\n", peak.cross_polar_dbi);
            std::cout << fmt::format("HPBW phi=0             {:.4f} deg\n", half_power_beamwidth_deg(scenario.antenna, steer, 0.0));
            std::cout << fmt::format("HPBW phi=90            {:.4f} deg\n", half_power_beamwidth_deg(scenario.antenna, steer, kPi / 2));
            std::cout << fmt::format("aperture directivity   {:.3f} dBi\n", 10.0 * std::log10(aperture_directivity(scenario.antenna)));
            return 0;
        }

        // run
        RunOptions options;
        options.mode = sinr_mode_from_string(mode);
        options.trace = trace;
        SimulationContext ctx = SimulationContext::prepare(scenario);
        if (!channel_path.empty()) {
            std::ifstream in(channel_path);
            if (!in) throw Error("cannot open channel file " + channel_path);
            ctx.replay(read_channel_csv(in));
        }

        const auto canonical = default_matrix(scenario);
        std::vector<ExperimentCondition> conditions;
        if (matrix == "default") {
            conditions = canonical;
        } else if (matrix == "custom") {
            conditions.push_back({"custom", true, false, scenario.flags});
        } else {
            std::stringstream ss(matrix);
            std::string label;
            while (std::getline(ss, label, ',')) {
                auto it = std::find_if(canonical.begin(), canonical.end(),
                                       [&](const ExperimentCondition& c) { return c.label == label; });
                if (it == canonical.end()) throw Error("unknown condition '" + label + "'");
                conditions.push_back(*it);
            }
        }
        for (auto& c : conditions) {
            if (!precoding.empty()) c.precoding = on_off(precoding, "precoding");
            if (!compensation.empty()) c.compensation = on_off(compensation, "compensation");
            if (!impairments.empty()) c.flags = parse_impairments(impairments, c.flags);
        }

        std::vector<ExperimentResult> results;
        bool all_ok = true;
        for (const auto& c : conditions) {
            ConditionTrace tr;
            const auto s = condition_seed(seed, c.label);
            results.push_back(run_condition(ctx, c, s, options, trace ? &tr : nullptr));
            const auto& r = results.back();
            all_ok = all_ok && r.completed;
            std::cerr << fmt::format("{:<16} mean SINR {:7.3f} dB{}\n", c.label, r.overall_mean_db(),
                                     r.completed ? "" : "  FAILED: " + r.failure);
            if (trace) {
                std::filesystem::create_directories(out_dir);
                auto csi = open_out((std::filesystem::path(out_dir) / (c.label + "_csi.csv")).string());
                write_csi_csv_header(csi);
                for (const auto& rep : tr.csi) write_csi_csv(csi, rep);
                if (!tr.loop_t.empty()) {
                    auto lp = open_out((std::filesystem::path(out_dir) / (c.label + "_loop.csv")).string());
                    lp << "t_s";
                    for (std::size_t b = 0; b < tr.loop_phase.size(); ++b) lp << fmt::format(",phi{}_rad", b);
                    lp << '\n';
                    for (std::size_t i = 0; i < tr.loop_t.size(); ++i) {
                        lp << fmt::format("{:.6f}", tr.loop_t[i]);
                        for (const auto& p : tr.loop_phase) lp << fmt::format(",{:.9g}", p[i]);
                        lp << '\n';
                    }
                }
                auto pw = open_out((std::filesystem::path(out_dir) / (c.label + "_precoders.csv")).string());
                pw << "t_s,n,k,re,im\n";
                for (const auto& [t, W] : tr.precoders) {
                    for (Eigen::Index n = 0; n < W.rows(); ++n)
                        for (Eigen::Index k = 0; k < W.cols(); ++k)
                            pw << fmt::format("{:.6f},{},{},{:.9g},{:.9g}\n", t, n, k, W(n, k).real(), W(n, k).imag());
                }
            }
        }
        emit_results(results, scenario, out_dir, seed, options);
        return all_ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
