// SPDX-License-Identifier: Apache-2.0
#include "meo/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace meo {

const char* const kDefaultTleLine1 = "1 39191U 13031D   24001.50000000 -.00000028  00000-0  00000-0 0  9994";
const char* const kDefaultTleLine2 = "2 39191   0.0362 250.1234 0002420 190.5678  79.4321  5.00115800 48218";

ImpairmentFlags ImpairmentFlags::all()
{
    ImpairmentFlags f;
    f.uplink_doppler = true;
    f.downlink_doppler = true;
    f.uplink_delay = true;
    f.downlink_delay = true;
    f.payload_phase_noise = true;
    f.awgn = true;
    return f;
}

std::size_t TimeGrid::slow_points() const
{
    return static_cast<std::size_t>(std::llround(duration_s / slow_step_s)) + 1;
}

ScenarioParseError::ScenarioParseError(const std::string& source, int line, const std::string& what)
    : Error(line > 0 ? fmt::format("{}:{}: {}", source, line, what) : fmt::format("{}: {}", source, what)), line_(line)
{
}

namespace {

std::string join_problems(const std::vector<std::string>& problems)
{
    std::string s = "invalid scenario:";
    for (const auto& p : problems) s += "\n  " + p;
    return s;
}

bool near_integer(double x, double tol = 1e-9)
{
    return std::abs(x - std::round(x)) <= tol * std::max(1.0, std::abs(x));
}

void check_station(const GroundStation& s, const std::string& where, std::vector<std::string>& out)
{
    if (!(s.latitude_deg >= -90.0 && s.latitude_deg <= 90.0)) {
        out.push_back(fmt::format("{}.latitude: {} outside [-90, 90]", where, s.latitude_deg));
    }
    if (!(s.longitude_deg >= -180.0 && s.longitude_deg <= 180.0)) {
        out.push_back(fmt::format("{}.longitude: {} outside [-180, 180]", where, s.longitude_deg));
    }
    if (!std::isfinite(s.altitude_m)) out.push_back(where + ".altitude: not finite");
}

} // namespace

ScenarioInvalidError::ScenarioInvalidError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems))
{
}

std::vector<std::string> validate(const Scenario& s)
{
    std::vector<std::string> out;
    check_station(s.gateway, "gateway", out);
    for (std::size_t k = 0; k < s.terminals.size(); ++k) check_station(s.terminals[k], fmt::format("terminals[{}] ({})", k, s.terminals[k].name), out);
    if (s.n_beams < 1) out.push_back("scenario.n_beams: must be at least 1");
    if (s.terminals.empty()) out.emplace_back("terminals: at least one terminal required");
    if (static_cast<int>(s.terminals.size()) > s.n_beams) {
        out.push_back(fmt::format("terminals: K ≤ N violated (K = {}, N = {})", s.terminals.size(), s.n_beams));
    }

    if (static_cast<int>(s.plan.uplink_hz.size()) != s.n_beams) {
        out.push_back(fmt::format("frequency_plan.uplink_hz: {} carriers for {} beams", s.plan.uplink_hz.size(), s.n_beams));
    }
    for (double f : s.plan.uplink_hz) {
        if (!(f > 0.0)) out.push_back(fmt::format("frequency_plan.uplink_hz: carrier {} must be positive", f));
    }
    if (std::set<double>(s.plan.uplink_hz.begin(), s.plan.uplink_hz.end()).size() != s.plan.uplink_hz.size()) {
        out.emplace_back("frequency_plan.uplink_hz: FDM carriers must be distinct");
    }
    if (!(s.plan.downlink_hz > 0.0)) out.emplace_back("frequency_plan.downlink_hz: must be positive");

    const auto& e = s.elements;
    if (!(e.eccentricity >= 0.0 && e.eccentricity < 1.0)) out.emplace_back("orbit.eccentricity: must be in [0, 1)");
    if (!(e.mean_motion_rev_per_day > 0.0)) out.emplace_back("orbit.mean_motion_rev_per_day: must be positive");

    const auto& g = s.grid;
    if (!(g.slow_step_s > 0.0) || !(g.duration_s > 0.0)) {
        out.emplace_back("time: duration_s and slow_step_s must be positive");
    } else if (!near_integer(g.duration_s / g.slow_step_s) || std::llround(g.duration_s / g.slow_step_s) < 2) {
        out.emplace_back("time: duration_s / slow_step_s must be an integer >= 2");
    }
    if (!(g.csi_period_s > 0.0) || !(g.sample_rate_hz * g.csi_period_s >= 1.0 - 1e-12)) {
        out.emplace_back("time: sample_rate_hz * csi_period_s must be >= 1");
    }
    if (!(g.precoder_period_s >= g.csi_period_s * (1.0 - 1e-12))) {
        out.emplace_back("time: precoder_period_s must be >= csi_period_s");
    }
    if (!(g.measure_rate_hz > 0.0) || !(g.measure_rate_hz <= g.sample_rate_hz) ||
        !near_integer(g.sample_rate_hz / g.measure_rate_hz)) {
        out.emplace_back("time: measure_rate_hz must divide sample_rate_hz");
    } else if (!near_integer(g.csi_period_s * g.measure_rate_hz) || std::llround(g.csi_period_s * g.measure_rate_hz) < 1) {
        out.emplace_back("time: csi_period_s must be a whole number of measurement samples");
    } else if (g.csi_period_s > 0.0 && (!near_integer(g.precoder_period_s / g.csi_period_s) ||
                                        !near_integer(g.slow_step_s / g.csi_period_s))) {
        out.emplace_back("time: precoder_period_s and slow_step_s must be multiples of csi_period_s");
    }
    if (!(g.min_elevation_deg >= -90.0 && g.min_elevation_deg < 90.0)) {
        out.emplace_back("time.min_elevation_deg: outside [-90, 90)");
    }

    if (!(s.flags.residual_doppler_bound_hz >= 0.0)) out.emplace_back("impairments.residual_doppler_bound_hz: must be >= 0");
    if (std::isnan(s.flags.snr_db) || s.flags.snr_db == -std::numeric_limits<double>::infinity()) {
        out.emplace_back("impairments.snr_db: must be a number or inf");
    }

    const auto& a = s.antenna;
    if (a.n_x < 1 || a.n_y < 1) out.emplace_back("antenna: n_x and n_y must be >= 1");
    if (!(a.spacing_wl > 0.0)) out.emplace_back("antenna.spacing_wl: must be positive");
    if (!(a.element_exponent >= 0.0)) out.emplace_back("antenna.element_exponent: must be >= 0");
    if (!(a.cross_pol_floor_db > 0.0)) out.emplace_back("antenna.cross_pol_floor_db: must be positive");
    if (!(a.carrier_hz > 0.0)) out.emplace_back("antenna.carrier_hz: must be positive");

    const auto& l = s.loop;
    if (!(l.kp > 0.0) || !(l.ki > 0.0)) {
        out.emplace_back("loop: kp and ki must be positive");
    } else if (!(max_pole_modulus(l) < 1.0)) {
        out.emplace_back("loop: gains place the discrete poles outside the unit circle");
    }
    if (!(l.predictor_window_s >= 0.0)) out.emplace_back("loop.predictor_window_s: must be >= 0");
    if (l.reference_beam < 0 || l.reference_beam >= s.n_beams) out.emplace_back("loop.reference_beam: out of range");
    if (l.sample_rate_hz != g.sample_rate_hz) out.emplace_back("loop: sample rate differs from time.sample_rate_hz");

    for (const auto& p : s.phase_noise.problems()) out.push_back(p);
    if (s.phase_noise.highest_offset() > 0.5 * g.sample_rate_hz) {
        out.push_back(fmt::format("phase_noise: mask reaches {} Hz, beyond the Nyquist frequency {} Hz",
                                  s.phase_noise.highest_offset(), 0.5 * g.sample_rate_hz));
    }

    if (s.csi.pilot_len < 1) out.emplace_back("csi.pilot_len: must be >= 1");
    if (!(s.csi.staleness_bound_s > 0.0)) out.emplace_back("csi.staleness_bound_s: must be positive");
    return out;
}

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> tokens(const std::string& s)
{
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

class Parser {
public:
    Parser(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& what) const { throw ScenarioParseError(source_, line_, what); }

    double number(const std::string& text, const std::string& field) const
    {
        const std::string t = trim(text);
        if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            fail(fmt::format("{}: '{}' is not a number", field, t));
        }
        if (used != t.size()) fail(fmt::format("{}: '{}' is not a number", field, t));
        return v;
    }

    int integer(const std::string& text, const std::string& field) const
    {
        const double v = number(text, field);
        if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 1e9) fail(field + ": expected an integer");
        return static_cast<int>(v);
    }

    bool boolean(const std::string& text, const std::string& field) const
    {
        const std::string t = trim(text);
        if (t == "on" || t == "true" || t == "yes" || t == "1") return true;
        if (t == "off" || t == "false" || t == "no" || t == "0") return false;
        fail(field + ": expected on or off");
    }

    GroundStation station(const std::string& line, const std::string& field) const
    {
        const auto t = tokens(line);
        if (t.size() != 3 && t.size() != 4) fail(field + ": expected 'name lat_deg lon_deg [alt_m]'");
        GroundStation s;
        s.name = t[0];
        s.latitude_deg = number(t[1], field + ".latitude");
        s.longitude_deg = number(t[2], field + ".longitude");
        s.altitude_m = t.size() == 4 ? number(t[3], field + ".altitude") : 0.0;
        return s;
    }

    Scenario parse(std::string_view text);

private:
    std::string source_;
    int line_ = 0;
};

Scenario Parser::parse(std::string_view text)
{
    Scenario s;
    s.terminals.clear();
    s.phase_noise.anchors.clear();
    std::string section;
    std::set<std::string> seen;
    bool mask_given = false;
    std::string tle1, tle2, tle_file;
    std::map<std::string, std::string> orbit_keys;
    std::optional<double> loop_fn, loop_zeta, loop_kp, loop_ki;
    double predictor = LoopParams{}.predictor_window_s;
    bool have_gateway = false;

    std::istringstream in{std::string(text)};
    std::string raw;
    line_ = 0;
    while (std::getline(in, raw)) {
        ++line_;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            static const std::set<std::string> known{"scenario", "gateway", "terminals", "frequency_plan", "orbit",
                                                     "time", "impairments", "phase_noise", "antenna", "loop", "csi"};
            if (!known.count(section)) fail("unknown section [" + section + "]");
            if (!seen.insert(section).second) fail("duplicate section [" + section + "]");
            if (section == "phase_noise") mask_given = true;
            continue;
        }
        if (section.empty()) fail("content before the first section");

        if (section == "gateway") {
            if (have_gateway) fail("gateway: only one row allowed");
            s.gateway = station(line, "gateway");
            have_gateway = true;
            continue;
        }
        if (section == "terminals") {
            s.terminals.push_back(station(line, fmt::format("terminals[{}]", s.terminals.size())));
            continue;
        }
        if (section == "phase_noise") {
            const auto t = tokens(line);
            if (t.size() != 2) fail("phase_noise: expected 'offset_hz dbc_per_hz'");
            s.phase_noise.anchors.emplace_back(number(t[0], "phase_noise.offset_hz"),
                                               number(t[1], "phase_noise.dbc_per_hz"));
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string field = section + "." + key;
        auto unknown = [&] { fail("unknown key '" + field + "'"); };

        if (section == "scenario") {
            if (key == "name") s.name = value;
            else if (key == "n_beams") s.n_beams = integer(value, field);
            else if (key == "precoder") {
                try {
                    s.precoder = precoder_method_from_string(value);
                } catch (const Error& e) {
                    fail(field + ": " + e.what());
                }
            } else unknown();
        } else if (section == "frequency_plan") {
            if (key == "uplink_hz") {
                s.plan.uplink_hz.clear();
                std::string v = value;
                for (char& c : v)
                    if (c == ',') c = ' ';
                for (const auto& t : tokens(v)) s.plan.uplink_hz.push_back(number(t, field));
            } else if (key == "downlink_hz") s.plan.downlink_hz = number(value, field);
            else unknown();
        } else if (section == "orbit") {
            if (key == "tle1") tle1 = value;
            else if (key == "tle2") tle2 = value;
            else if (key == "tle_file") tle_file = value;
            else if (key == "j2") s.j2 = boolean(value, field) ? J2Mode::On : J2Mode::Off;
            else if (key == "name" || key == "catalog_number" || key == "epoch" || key == "epoch_unix_s" ||
                     key == "inclination_deg" || key == "raan_deg" || key == "eccentricity" ||
                     key == "arg_perigee_deg" || key == "mean_anomaly_deg" || key == "mean_motion_rev_per_day" ||
                     key == "bstar") {
                orbit_keys[key] = value;
            } else unknown();
        } else if (section == "time") {
            auto& g = s.grid;
            if (key == "epoch") {
                try {
                    g.epoch = parse_iso8601(value);
                } catch (const Error& e) {
                    fail(field + ": " + e.what());
                }
            } else if (key == "epoch_unix_s") g.epoch = UtcInstant{number(value, field)};
            else if (key == "duration_s") g.duration_s = number(value, field);
            else if (key == "slow_step_s") g.slow_step_s = number(value, field);
            else if (key == "csi_period_s") g.csi_period_s = number(value, field);
            else if (key == "precoder_period_s") g.precoder_period_s = number(value, field);
            else if (key == "sample_rate_hz") g.sample_rate_hz = number(value, field);
            else if (key == "measure_rate_hz") g.measure_rate_hz = number(value, field);
            else if (key == "min_elevation_deg") g.min_elevation_deg = number(value, field);
            else unknown();
        } else if (section == "impairments") {
            auto& f = s.flags;
            if (key == "uplink_doppler") f.uplink_doppler = boolean(value, field);
            else if (key == "downlink_doppler") f.downlink_doppler = boolean(value, field);
            else if (key == "uplink_delay") f.uplink_delay = boolean(value, field);
            else if (key == "downlink_delay") f.downlink_delay = boolean(value, field);
            else if (key == "payload_phase_noise") f.payload_phase_noise = boolean(value, field);
            else if (key == "awgn") f.awgn = boolean(value, field);
            else if (key == "residual_doppler_bound_hz") f.residual_doppler_bound_hz = number(value, field);
            else if (key == "residual_scaling") {
                if (value == "common") f.residual_scaling = ResidualScaling::Common;
                else if (value == "per_beam") f.residual_scaling = ResidualScaling::PerBeam;
                else fail(field + ": expected common or per_beam");
            } else if (key == "snr_db") f.snr_db = number(value, field);
            else unknown();
        } else if (section == "antenna") {
            auto& a = s.antenna;
            if (key == "n_x") a.n_x = integer(value, field);
            else if (key == "n_y") a.n_y = integer(value, field);
            else if (key == "spacing_wl") a.spacing_wl = number(value, field);
            else if (key == "element_exponent") a.element_exponent = number(value, field);
            else if (key == "cross_pol_floor_db") a.cross_pol_floor_db = number(value, field);
            else if (key == "carrier_hz") a.carrier_hz = number(value, field);
            else unknown();
        } else if (section == "loop") {
            if (key == "kp") loop_kp = number(value, field);
            else if (key == "ki") loop_ki = number(value, field);
            else if (key == "natural_frequency_hz") loop_fn = number(value, field);
            else if (key == "damping") loop_zeta = number(value, field);
            else if (key == "reference_beam") s.loop.reference_beam = integer(value, field);
            else if (key == "predictor_window_s") predictor = number(value, field);
            else if (key == "interpolation") {
                try {
                    s.loop.interpolation = csi_interpolation_from_string(value);
                } catch (const Error& e) {
                    fail(field + ": " + e.what());
                }
            } else unknown();
        } else if (section == "csi") {
            if (key == "pilot_len") s.csi.pilot_len = integer(value, field);
            else if (key == "staleness_bound_s") s.csi.staleness_bound_s = number(value, field);
            else unknown();
        }
    }
    line_ = 0;

    for (const char* required : {"gateway", "terminals", "frequency_plan", "orbit"}) {
        if (!seen.count(required)) fail(std::string("missing section [") + required + "]");
    }
    if (!have_gateway) fail("gateway: one row required");

    if (!tle_file.empty()) {
        if (!tle1.empty() || !tle2.empty()) fail("orbit.tle_file: not allowed together with tle1/tle2");
        std::filesystem::path path(tle_file);
        if (path.is_relative() && source_ != "<text>") path = std::filesystem::path(source_).parent_path() / path;
        std::ifstream file(path);
        if (!file) fail("orbit.tle_file: cannot open " + path.string());
        std::vector<std::string> lines;
        for (std::string l; std::getline(file, l);) {
            while (!l.empty() && (l.back() == '\r' || l.back() == ' ')) l.pop_back();
            if (!l.empty()) lines.push_back(l);
        }
        if (lines.size() < 2) fail("orbit.tle_file: expected two element lines in " + path.string());
        tle1 = lines[lines.size() - 2];
        tle2 = lines[lines.size() - 1];
        if (lines.size() >= 3 && !orbit_keys.count("name")) orbit_keys["name"] = trim(lines[lines.size() - 3]);
    }
    if (!tle1.empty() || !tle2.empty()) {
        if (tle1.empty() || tle2.empty()) fail("orbit: tle1 and tle2 must be given together");
        try {
            s.elements = parse_tle(tle1, tle2, orbit_keys.count("name") ? orbit_keys["name"] : std::string{});
        } catch (const Error& e) {
            fail(std::string("orbit: ") + e.what());
        }
        for (const auto& [k, v] : orbit_keys) {
            if (k != "name") fail("orbit." + k + ": not allowed together with tle1/tle2");
        }
    } else {
        static const char* needed[] = {"inclination_deg", "raan_deg", "eccentricity", "arg_perigee_deg",
                                       "mean_anomaly_deg", "mean_motion_rev_per_day"};
        for (const char* k : needed) {
            if (!orbit_keys.count(k)) fail(std::string("orbit.") + k + ": required without tle1/tle2");
        }
        if (!orbit_keys.count("epoch") && !orbit_keys.count("epoch_unix_s")) fail("orbit.epoch: required without tle1/tle2");
        auto& el = s.elements;
        el.name = orbit_keys.count("name") ? orbit_keys["name"] : std::string{};
        if (orbit_keys.count("catalog_number")) el.catalog_number = integer(orbit_keys["catalog_number"], "orbit.catalog_number");
        if (orbit_keys.count("epoch_unix_s")) {
            el.epoch = UtcInstant{number(orbit_keys["epoch_unix_s"], "orbit.epoch_unix_s")};
        } else {
            try {
                el.epoch = parse_iso8601(orbit_keys["epoch"]);
            } catch (const Error& e) {
                fail(std::string("orbit.epoch: ") + e.what());
            }
        }
        el.inclination_deg = number(orbit_keys["inclination_deg"], "orbit.inclination_deg");
        el.raan_deg = number(orbit_keys["raan_deg"], "orbit.raan_deg");
        el.eccentricity = number(orbit_keys["eccentricity"], "orbit.eccentricity");
        el.arg_perigee_deg = number(orbit_keys["arg_perigee_deg"], "orbit.arg_perigee_deg");
        el.mean_anomaly_deg = number(orbit_keys["mean_anomaly_deg"], "orbit.mean_anomaly_deg");
        el.mean_motion_rev_per_day = number(orbit_keys["mean_motion_rev_per_day"], "orbit.mean_motion_rev_per_day");
        if (orbit_keys.count("bstar")) el.bstar = number(orbit_keys["bstar"], "orbit.bstar");
    }

    if (!mask_given) s.phase_noise = PhaseNoiseMask::default_mask();

    const int ref = s.loop.reference_beam;
    const auto interp = s.loop.interpolation;
    if (loop_kp || loop_ki) {
        if (!loop_kp || !loop_ki || loop_fn || loop_zeta) fail("loop: give kp and ki, or natural_frequency_hz and damping");
        s.loop.kp = *loop_kp;
        s.loop.ki = *loop_ki;
        s.loop.sample_rate_hz = s.grid.sample_rate_hz;
    } else {
        s.loop = LoopParams::from_natural_frequency(loop_fn.value_or(200.0), loop_zeta.value_or(1.0 / std::sqrt(2.0)),
                                                    s.grid.sample_rate_hz);
    }
    s.loop.reference_beam = ref;
    s.loop.interpolation = interp;
    s.loop.predictor_window_s = predictor;
    return s;
}

std::string num(double v)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);
}

const char* on_off(bool b) { return b ? "on" : "off"; }

} // namespace

Scenario parse_scenario(std::string_view text, const std::string& source)
{
    Scenario s = Parser(source).parse(text);
    auto problems = validate(s);
    if (!problems.empty()) throw ScenarioInvalidError(std::move(problems));
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

std::string serialize_scenario(const Scenario& s)
{
    std::string o;
    auto line = [&o](const std::string& l) { o += l + "\n"; };
    line("[scenario]");
    line("name = " + s.name);
    line(fmt::format("n_beams = {}", s.n_beams));
    line("precoder = " + to_string(s.precoder));
    line("");
    line("[gateway]");
    line(fmt::format("{} {} {} {}", s.gateway.name, num(s.gateway.latitude_deg), num(s.gateway.longitude_deg),
                     num(s.gateway.altitude_m)));
    line("");
    line("[terminals]");
    for (const auto& t : s.terminals) {
        line(fmt::format("{} {} {} {}", t.name, num(t.latitude_deg), num(t.longitude_deg), num(t.altitude_m)));
    }
    line("");
    line("[frequency_plan]");
    std::string ul;
    for (std::size_t i = 0; i < s.plan.uplink_hz.size(); ++i) ul += (i ? ", " : "") + num(s.plan.uplink_hz[i]);
    line("uplink_hz = " + ul);
    line("downlink_hz = " + num(s.plan.downlink_hz));
    line("");
    const auto& e = s.elements;
    line("[orbit]");
    if (!e.name.empty()) line("name = " + e.name);
    line(fmt::format("catalog_number = {}", e.catalog_number));
    line("epoch_unix_s = " + num(e.epoch.unix_seconds));
    line("inclination_deg = " + num(e.inclination_deg));
    line("raan_deg = " + num(e.raan_deg));
    line("eccentricity = " + num(e.eccentricity));
    line("arg_perigee_deg = " + num(e.arg_perigee_deg));
    line("mean_anomaly_deg = " + num(e.mean_anomaly_deg));
    line("mean_motion_rev_per_day = " + num(e.mean_motion_rev_per_day));
    line("bstar = " + num(e.bstar));
    line(std::string("j2 = ") + on_off(s.j2 == J2Mode::On));
    line("");
    const auto& g = s.grid;
    line("[time]");
    if (g.epoch) line("epoch_unix_s = " + num(g.epoch->unix_seconds));
    line("duration_s = " + num(g.duration_s));
    line("slow_step_s = " + num(g.slow_step_s));
    line("csi_period_s = " + num(g.csi_period_s));
    line("precoder_period_s = " + num(g.precoder_period_s));
    line("sample_rate_hz = " + num(g.sample_rate_hz));
    line("measure_rate_hz = " + num(g.measure_rate_hz));
    line("min_elevation_deg = " + num(g.min_elevation_deg));
    line("");
    const auto& f = s.flags;
    line("[impairments]");
    line(std::string("uplink_doppler = ") + on_off(f.uplink_doppler));
    line(std::string("downlink_doppler = ") + on_off(f.downlink_doppler));
    line(std::string("uplink_delay = ") + on_off(f.uplink_delay));
    line(std::string("downlink_delay = ") + on_off(f.downlink_delay));
    line(std::string("payload_phase_noise = ") + on_off(f.payload_phase_noise));
    line(std::string("awgn = ") + on_off(f.awgn));
    line("residual_doppler_bound_hz = " + num(f.residual_doppler_bound_hz));
    line(std::string("residual_scaling = ") + (f.residual_scaling == ResidualScaling::Common ? "common" : "per_beam"));
    line("snr_db = " + num(f.snr_db));
    line("");
    line("[phase_noise]");
    for (const auto& [off, dbc] : s.phase_noise.anchors) line(num(off) + " " + num(dbc));
    line("");
    const auto& a = s.antenna;
    line("[antenna]");
    line(fmt::format("n_x = {}", a.n_x));
    line(fmt::format("n_y = {}", a.n_y));
    line("spacing_wl = " + num(a.spacing_wl));
    line("element_exponent = " + num(a.element_exponent));
    line("cross_pol_floor_db = " + num(a.cross_pol_floor_db));
    line("carrier_hz = " + num(a.carrier_hz));
    line("");
    line("[loop]");
    line("kp = " + num(s.loop.kp));
    line("ki = " + num(s.loop.ki));
    line(fmt::format("reference_beam = {}", s.loop.reference_beam));
    line("interpolation = " + to_string(s.loop.interpolation));
    line("predictor_window_s = " + num(s.loop.predictor_window_s));
    line("");
    line("[csi]");
    line(fmt::format("pilot_len = {}", s.csi.pilot_len));
    line("staleness_bound_s = " + num(s.csi.staleness_bound_s));
    return o;
}

std::uint64_t scenario_hash(const Scenario& scenario)
{
    return fnv1a64(serialize_scenario(scenario));
}

std::string default_scenario_text()
{
    return std::string(R"(# O3b-class MEO pass over Dakar, four co-channel spot beams.
[scenario]
name = dakar-o3b
n_beams = 4
precoder = mmse

[gateway]
# name  lat_deg  lon_deg  alt_m
GW  14.743  -17.491  0

[terminals]
UT0  12.935  -19.349  0
UT1  12.935  -17.491  0
UT2  14.743  -19.349  0
UT3  14.743  -17.491  0

[frequency_plan]
uplink_hz = 47.2e9, 47.7e9, 48.2e9, 48.7e9
downlink_hz = 20.0e9

[orbit]
name = O3B FM5
tle1 = )") + kDefaultTleLine1 + R"(
tle2 = )" + kDefaultTleLine2 + R"(
j2 = on

[time]
duration_s = 1200
slow_step_s = 1
csi_period_s = 0.01
precoder_period_s = 0.1
sample_rate_hz = 100000
measure_rate_hz = 2000
min_elevation_deg = 10

[impairments]
uplink_doppler = off
downlink_doppler = off
uplink_delay = off
downlink_delay = off
payload_phase_noise = off
awgn = on
residual_doppler_bound_hz = 1000
residual_scaling = common
snr_db = 10

[phase_noise]
# offset_hz  dbc_per_hz; the last anchor sits at the 50 kHz Nyquist limit
100    -60
1000   -75
10000  -90
50000  -96.98970004336019

[antenna]
n_x = 50
n_y = 50
spacing_wl = 0.5
element_exponent = 0.2906
cross_pol_floor_db = 20
carrier_hz = 20e9

[loop]
natural_frequency_hz = 200
damping = 0.7071067811865476
reference_beam = 0
interpolation = linear
predictor_window_s = 0.5

[csi]
pilot_len = 128
staleness_bound_s = 0.5
)";
}

Scenario default_scenario()
{
    return parse_scenario(default_scenario_text(), "<default>");
}

} // namespace meo
