// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "meo/antenna.hpp"
#include "meo/impairments.hpp"
#include "meo/orbit.hpp"
#include "meo/phase_loop.hpp"
#include "meo/precoder.hpp"

namespace meo {

struct FrequencyPlan {
    std::vector<double> uplink_hz; // one carrier per beam
    double downlink_hz{};

    friend bool operator==(const FrequencyPlan&, const FrequencyPlan&) = default;
};

struct TimeGrid {
    std::optional<UtcInstant> epoch;  // pass search start; element epoch when unset
    double duration_s = 1200.0;
    double slow_step_s = 1.0;
    double csi_period_s = 0.01;
    double precoder_period_s = 0.1;
    double sample_rate_hz = 100e3;
    double measure_rate_hz = 2000.0;  // SINR/CSI evaluation grid, a divisor of sample_rate_hz
    double min_elevation_deg = 10.0;

    std::size_t slow_points() const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

struct ImpairmentFlags {
    bool uplink_doppler = false;
    bool downlink_doppler = false;
    bool uplink_delay = false;
    bool downlink_delay = false;
    bool payload_phase_noise = false;
    bool awgn = true;
    double residual_doppler_bound_hz = 1000.0;
    ResidualScaling residual_scaling = ResidualScaling::Common;
    double snr_db = 10.0;

    static ImpairmentFlags baseline() { return {}; }
    static ImpairmentFlags all();

    friend bool operator==(const ImpairmentFlags&, const ImpairmentFlags&) = default;
};

struct CsiConfig {
    int pilot_len = 128;
    double staleness_bound_s = 0.5;

    friend bool operator==(const CsiConfig&, const CsiConfig&) = default;
};

struct Scenario {
    std::string name = "default";
    GroundStation gateway;
    std::vector<GroundStation> terminals;
    int n_beams = 4;
    OrbitalElements elements;
    J2Mode j2 = J2Mode::On;
    FrequencyPlan plan;
    TimeGrid grid;
    ImpairmentFlags flags;
    ArrayConfig antenna;
    LoopParams loop = LoopParams::defaults();
    PhaseNoiseMask phase_noise = PhaseNoiseMask::default_mask();
    CsiConfig csi;
    PrecoderMethod precoder = PrecoderMethod::MMSE;

    int n_terminals() const { return static_cast<int>(terminals.size()); }
    UtcInstant search_epoch() const { return grid.epoch.value_or(elements.epoch); }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

class ScenarioParseError : public Error {
public:
    ScenarioParseError(const std::string& source, int line, const std::string& what);
    int line() const { return line_; }

private:
    int line_;
};

class ScenarioInvalidError : public Error {
public:
    explicit ScenarioInvalidError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Every violated invariant, one message per problem; empty iff usable.
std::vector<std::string> validate(const Scenario& scenario);

Scenario parse_scenario(std::string_view text, const std::string& source = "<text>");
Scenario load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const Scenario& scenario);
std::uint64_t scenario_hash(const Scenario& scenario);

/// The bundled O3b-class pass over Dakar with four terminals.
Scenario default_scenario();
std::string default_scenario_text();

/// Bundled two-line element set used by the default scenario.
extern const char* const kDefaultTleLine1;
extern const char* const kDefaultTleLine2;

} // namespace meo
