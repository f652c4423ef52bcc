// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "meo/channel.hpp"
#include "meo/impairments.hpp"
#include "meo/orbit.hpp"
#include "meo/scenario.hpp"

namespace meo {

inline constexpr const char* kSoftwareVersion = "0.3.0";

struct ExperimentCondition {
    std::string label;
    bool precoding = true;
    bool compensation = false;
    ImpairmentFlags flags;
};

enum class SinrMode { ClosedForm, Evm };

std::string to_string(SinrMode m);
SinrMode sinr_mode_from_string(const std::string& text);

struct MeasurementWindow {
    double start_s{};
    double length_s{};
    std::size_t symbols{};
    SinrMode mode = SinrMode::ClosedForm;
};

/// Accumulates one terminal set's signal and interference-plus-noise power over
/// a measurement window. closed_form uses |g|^2 terms directly; evm transmits
/// one QPSK vector per sample and measures error power against the known
/// symbols (ideal per-terminal gain tracking).
class SinrMeter {
public:
    SinrMeter(int users, SinrMode mode, std::uint64_t seed);

    /// `weight` counts the sample that many times (closed_form only; evm draws one vector per unit).
    void add(const CMatrix& H_eff, const CMatrix& W, double noise_var, std::size_t weight = 1);
    /// Per-terminal SINR in dB over everything added since the last reset.
    std::vector<double> sinr_db() const;
    std::size_t samples() const { return samples_; }
    void reset();

private:
    int users_;
    SinrMode mode_;
    std::mt19937_64 rng_;
    std::vector<double> signal_;
    std::vector<double> disturbance_;
    std::size_t samples_{0};
};

/// Per-terminal SINR (dB) of one channel/precoder pair over `window`.
std::vector<double> measure_sinr(const CMatrix& H_eff, const CMatrix& W, double noise_var,
                                 const MeasurementWindow& window, std::uint64_t seed = 0);

struct ExperimentResult {
    ExperimentCondition condition;
    std::vector<double> t;                 // window-relative start of each slow step, s
    std::vector<std::vector<double>> sinr_db; // [k][t]
    std::vector<double> mean_db;           // per terminal
    std::vector<double> average_db;        // cross-terminal mean of dB values, per t
    std::uint64_t seed{};
    std::uint64_t scenario_hash{};
    std::string version = kSoftwareVersion;
    bool completed = false;
    std::string failure;

    double overall_mean_db() const;
};

/// Geometry and channel shared by every condition of a run.
struct SimulationContext {
    Scenario scenario;
    PassGeometry pass;
    std::vector<std::vector<double>> uplink_doppler_hz; // [beam][t], gateway pass
    ChannelSeries channel;                              // H on the slow grid, no rotation

    static SimulationContext prepare(const Scenario& scenario);
    /// Replaces the synthesized channel with an external one on the same slow grid.
    void replay(ChannelSeries external);
};

struct RunOptions {
    SinrMode mode = SinrMode::ClosedForm;
    bool trace = false;                 // keep CSI / loop traces in the result bundle
    std::size_t loop_trace_decimation = 20; // in measurement samples
};

struct ConditionTrace {
    std::vector<CsiReport> csi;  // reports measured at precoder update instants
    std::vector<double> loop_t;
    std::vector<std::vector<double>> loop_phase; // [beam][sample]
    std::vector<std::pair<double, CMatrix>> precoders;
};

ExperimentResult run_condition(const SimulationContext& context, const ExperimentCondition& condition,
                               std::uint64_t seed, const RunOptions& options = {}, ConditionTrace* trace = nullptr);
ExperimentResult run_condition(const Scenario& scenario, const ExperimentCondition& condition, std::uint64_t seed,
                               const RunOptions& options = {});

/// The nine canonical conditions: precoding OFF with all impairments; precoding
/// ON for the baseline, each single impairment, all impairments, and all
/// impairments with compensation.
std::vector<ExperimentCondition> default_matrix(const Scenario& scenario);

/// Seed of one condition, derived from the master seed and the label.
std::uint64_t condition_seed(std::uint64_t master_seed, const std::string& label);

/// Failures are recorded in the affected result; the matrix continues.
std::vector<ExperimentResult> run_matrix(const SimulationContext& context,
                                         const std::vector<ExperimentCondition>& conditions,
                                         std::uint64_t master_seed, const RunOptions& options = {});

/// Writes <label>.csv per condition, summary.csv, metadata.txt and plot_results.py.
void emit_results(const std::vector<ExperimentResult>& results, const Scenario& scenario,
                  const std::filesystem::path& out_dir, std::uint64_t master_seed, const RunOptions& options = {});

void write_condition_csv(std::ostream& out, const ExperimentResult& result);

} // namespace meo
