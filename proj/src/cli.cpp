// Copyright 2026 The iongate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "iongate/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "iongate/addressing.hpp"
#include "iongate/common.hpp"
#include "iongate/freqplan.hpp"
#include "iongate/io.hpp"
#include "iongate/msgate.hpp"
#include "iongate/noisekit.hpp"
#include "iongate/parallel.hpp"
#include "iongate/qcore.hpp"
#include "iongate/readout.hpp"
#include "iongate/seqlab.hpp"

namespace iongate::cli {

using nlohmann::json;

namespace {

std::string join(const std::string &path, const std::string &key) { return path.empty() ? key : path + "." + key; }

/// Typed, path-aware view of one config object. Every key must be read
/// before done(); leftovers are reported as unknown.
class Node {
public:
    Node(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    double number(const char *key) {
        const json &v = at(key);
        if (!v.is_number()) throw ConfigError(join(path_, key) + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(join(path_, key) + ": must be finite");
        return x;
    }

    std::uint64_t count(const char *key) {
        const json &v = at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ConfigError(join(path_, key) + ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    int integer(const char *key) {
        const json &v = at(key);
        if (!v.is_number_integer()) throw ConfigError(join(path_, key) + ": expected an integer");
        return v.get<int>();
    }

    bool flag(const char *key) {
        const json &v = at(key);
        if (!v.is_boolean()) throw ConfigError(join(path_, key) + ": expected true or false");
        return v.get<bool>();
    }

    std::string text(const char *key) {
        const json &v = at(key);
        if (!v.is_string()) throw ConfigError(join(path_, key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const char *key) {
        const json &v = at(key);
        if (!v.is_array()) throw ConfigError(join(path_, key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto &x : v) {
            if (!x.is_number()) throw ConfigError(join(path_, key) + ": expected an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    /// Either an explicit array or {"start", "stop", "points"}.
    std::vector<double> grid(const char *key) {
        const json &v = at(key);
        if (v.is_array()) return numbers(key);
        Node g(v, join(path_, key));
        const double a = g.number("start"), b = g.number("stop");
        const std::uint64_t n = g.count("points");
        g.done();
        if (n < 1) throw ConfigError(join(path_, key) + ".points: must be >= 1");
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        return out;
    }

    Node child(const char *key) { return Node(at(key), join(path_, key)); }

    const json &raw(const char *key) { return at(key); }

    std::string path(const char *key) const { return join(path_, key); }

    void done() const {
        for (const auto &[k, v] : j_.items())
            if (!used_.count(k)) throw ConfigError(join(path_, k) + ": unknown key");
    }

private:
    const json &at(const char *key) {
        if (!j_.contains(key)) throw ConfigError(join(path_, key) + ": missing");
        used_.insert(key);
        return j_.at(key);
    }

    std::string where() const { return path_.empty() ? "config" : path_; }

    const json &j_;
    std::string path_;
    std::set<std::string> used_;
};

/// Runs a module-level parser and prefixes its errors with the config path.
template <class Fn>
auto parse_at(const std::string &path, Fn &&fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConfigError &e) {
        throw ConfigError(path + ": " + e.what());
    }
}

json grid_json(double start, double stop, int points) { return {{"start", start}, {"stop", stop}, {"points", points}}; }

json gate_defaults() {
    return {{"omega_hz", 0.0}, {"eta", 0.05},  {"delta_hz", 10.5e3}, {"delta_asym_hz", 0.0},
            {"nu_hz", 0.98e6}, {"n_max", 20}, {"initial_n", 0}};
}

qcore::GateParams read_gate(Node n) {
    qcore::GateParams p;
    const double omega_hz = n.number("omega_hz");
    p.eta = n.number("eta");
    p.delta = hz_to_angular(n.number("delta_hz"));
    p.delta_asym = hz_to_angular(n.number("delta_asym_hz"));
    p.nu = hz_to_angular(n.number("nu_hz"));
    p.n_max = n.integer("n_max");
    p.initial_n = n.integer("initial_n");
    n.done();
    if (omega_hz < 0.0) throw ConfigError(n.path("omega_hz") + ": must be >= 0");
    if (omega_hz > 0.0)
        p.omega = hz_to_angular(omega_hz);
    else {
        if (p.delta == 0.0) throw ConfigError(n.path("omega_hz") + ": 0 (gate-consistent) needs delta_hz != 0");
        p.omega = msgate::omega_for_gate_detuning(std::abs(p.delta), p.eta);
    }
    parse_at("gate", [&] {
        p.validate();
        return 0;
    });
    return p;
}

json laser_defaults() { return noisekit::to_json(noisekit::servo_bump_psd(0.08)); }

json white_laser_defaults() {
    noisekit::NoisePsd p;
    p.white_level = 4.0 * kPi * 11.0;
    return noisekit::to_json(p);
}

json field_defaults() {
    noisekit::NoisePsd p;
    p.quasi_static_rms = 3e-9;
    p.lines.push_back({50.0, 3e-9, noisekit::PhasePolicy::kRandom, 0.0});
    return noisekit::to_json(p);
}

noisekit::NoisePsd read_psd(Node &parent, const char *key) {
    const json &j = parent.raw(key);
    return parse_at(parent.path(key), [&] { return noisekit::psd_from_json(j); });
}

json cavity_defaults() {
    const noisekit::CavityParams c;
    return {{"linewidth_hz", c.linewidth_hz}, {"finesse", c.finesse}, {"fsr_hz", c.fsr_hz}};
}

json full_plan_defaults() {
    freqplan::FrequencyPlan p;
    p.set(freqplan::Channel::kBase, 80e6);
    p.set(freqplan::Channel::kCarrier, 110e6);
    p.configure_mm_from_carrier();
    p.set(freqplan::Channel::kF1, 200e6);
    p.configure_ms(hz_to_angular(0.98e6 + 10.5e3) / kTwoPi);
    p.set(freqplan::Channel::kF2, 180e6);
    return freqplan::to_json(p);
}

}  // namespace

namespace {

const std::map<std::string, std::string> &descriptions() {
    static const std::map<std::string, std::string> d = {
        {"ms-scan", "two-ion gate population map over time and detuning"},
        {"ms-parity", "parity scan at the gate time and fidelity fit"},
        {"spectrum", "Rabi spectroscopy and saturation with and without the cavity filter"},
        {"ramsey", "Ramsey contrast vs wait time"},
        {"mfdd", "multi-pulse dynamical decoupling contrast vs time"},
        {"echo", "single echo contrast vs time"},
        {"address", "micromotion-sideband flops and composite pulse infidelity"},
        {"readout-sim", "simulate a fluorescence count histogram"},
        {"readout-fit", "infer register populations from a histogram"},
        {"readout-calibrate", "estimate count rates from reference histograms"},
        {"freq-table", "pulse frequency table, phase ledger and drift correction"},
        {"calibrate-lightshift", "light shift from registering measured and calculated maps"}};
    return d;
}

}  // namespace

std::vector<std::string> subcommands() {
    return {"ms-scan", "ms-parity", "spectrum", "ramsey", "mfdd", "echo", "address", "readout-sim", "readout-fit",
            "readout-calibrate", "freq-table", "calibrate-lightshift"};
}

json default_config(const std::string &sub) {
    json c = {{"scenario", sub}, {"seed", 0}, {"threads", 0}};
    if (sub == "ms-scan") {
        c["gate"] = gate_defaults();
        c["scan"] = {{"axis1", "time"},
                     {"grid1", grid_json(0.0, 190.4e-6, 21)},
                     {"axis2", "delta"},
                     {"grid2", grid_json(5e3, 30e3, 21)},
                     {"mode", "numeric"},
                     {"shots", 0},
                     {"fixed_time", 0.0},
                     {"tol", 1e-8},
                     {"leak_tol", 1e-6}};
    } else if (sub == "ms-parity") {
        c["gate"] = gate_defaults();
        c["parity"] = {{"phases", 20}, {"shots", 0}, {"population_shots", 0}, {"time", 0.0}, {"tol", 1e-10}};
    } else if (sub == "spectrum") {
        c["laser_noise"] = laser_defaults();
        c["spectrum"] = {{"pulse", 100e-6},
                         {"detuning_hz", grid_json(-2e6, 2e6, 41)},
                         {"omega_hz", 100e3},
                         {"realizations", 24},
                         {"dt", 0.0},
                         {"compare_cavity", true},
                         {"cavity", cavity_defaults()},
                         {"bump_center_hz", 1.1e6},
                         {"bump_fwhm_hz", 1e6}};
        c["saturation"] = {{"enabled", false},
                           {"detuning_hz", 1.1e6},
                           {"durations", grid_json(0.0, 400e-6, 21)},
                           {"linear_window", 60e-6},
                           {"calibrate_target", 0.0},
                           {"calibrate_duration", 400e-6},
                           {"realizations", 100}};
    } else if (sub == "ramsey" || sub == "mfdd" || sub == "echo") {
        c["laser_noise"] = white_laser_defaults();
        c["field_noise"] = field_defaults();
        c["coherence"] = {{"times", grid_json(0.5e-3, 10e-3, 11)},
                          {"blocks", sub == "mfdd" ? 4 : 1},
                          {"realizations", 200},
                          {"phase_points", 12},
                          {"shots", 0},
                          {"dt", 0.0},
                          {"rf_error", 0.0},
                          {"optical_error", 0.0},
                          {"model", "exponential"}};
        c["tune"] = {{"enabled", false}, {"target", 0.5}, {"time", 1.7e-3}, {"with_laser", false}};
    } else if (sub == "address") {
        addressing::AddressingParams p;
        p.k_dot_x = {0.0, 0.1};
        c["addressing"] = addressing::to_json(p);
        c["address"] = {{"drive", "mm"},
                        {"duration", 200e-6},
                        {"points", 201},
                        {"shots", 0},
                        {"realizations", 2000},
                        {"composite", {{"eps_lo", 1e-3}, {"eps_hi", 0.1}, {"points", 21}}}};
    } else if (sub == "readout-sim" || sub == "readout-fit" || sub == "readout-calibrate") {
        c["detection"] = readout::to_json(readout::DetectionModel{});
        if (sub == "readout-sim")
            c["readout"] = {{"populations", {0.25, 0.5, 0.25}}, {"shots", 10000}, {"fit", true}};
        else if (sub == "readout-fit")
            c["readout"] = {{"histogram", ""}};
        else
            c["readout"] = {{"dark_histogram", ""}, {"bright_histogram", ""}};
    } else if (sub == "freq-table") {
        c["plan"] = full_plan_defaults();
        c["sequence"] = {{"pulses", json::array()}, {"updates", json::array()}};
        c["drift"] = {{"points", json::array()}, {"max_slope", 2e3 / 60.0}, {"max_curvature", 0.0}};
        c["drift_times"] = json::array();
    } else if (sub == "calibrate-lightshift") {
        c["gate"] = gate_defaults();
        c["lightshift"] = {{"axis", "delta"},
                           {"detuning_hz", grid_json(-60e3, 60e3, 61)},
                           {"time", grid_json(0.0, 300e-6, 31)},
                           {"offset_hz", 35e3},
                           {"shots", 200},
                           {"measured", ""}};
    } else {
        throw ConfigError("unknown subcommand '" + sub + "'");
    }
    return c;
}

void merge_config(json &base, const json &user, const std::string &path) {
    if (!user.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
    for (const auto &[k, v] : user.items()) {
        const std::string p = join(path, k);
        if (base.contains(k) && base[k].is_object() && v.is_object() && !base[k].empty())
            merge_config(base[k], v, p);
        else
            base[k] = v;
    }
}

void apply_override(json &config, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json *node = &config;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError("--set: empty path segment in '" + key + "'");
        parts.push_back(part);
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::string &p = parts[i];
        const bool last = i + 1 == parts.size();
        if (node->is_array()) {
            if (!std::all_of(p.begin(), p.end(), ::isdigit)) throw ConfigError("--set: '" + p + "' is not an index");
            const std::size_t ix = std::stoul(p);
            if (ix >= node->size()) throw ConfigError("--set: index " + p + " out of range in '" + key + "'");
            node = &(*node)[ix];
        } else if (node->is_object()) {
            node = &(*node)[p];
        } else {
            throw ConfigError("--set: '" + key + "' descends into a non-object");
        }
        if (last) *node = value;
    }
}

namespace {

struct Context {
    std::filesystem::path out;
    std::ostream &log;
    json artifacts = json::array();

    void write(const std::string &name, const std::string &content) {
        io::write_file(out / name, content);
        artifacts.push_back(name);
    }
};

msgate::Axis read_axis(Node &n, const char *key) {
    const std::string s = n.text(key);
    return parse_at(n.path(key), [&] { return msgate::parse_axis(s); });
}

RunOutcome run_ms_scan(Node &root, Context &ctx, std::uint64_t seed, std::size_t threads) {
    const auto gate = read_gate(root.child("gate"));
    Node s = root.child("scan");
    const auto a1 = read_axis(s, "axis1");
    const auto g1 = s.grid("grid1");
    const auto a2 = read_axis(s, "axis2");
    const auto g2 = s.grid("grid2");
    const std::string mode = s.text("mode");
    const std::uint64_t shots = s.count("shots");
    const double fixed = s.number("fixed_time");
    msgate::ScanOptions o;
    o.propagate.tol = s.number("tol");
    o.propagate.leak_tol = s.number("leak_tol");
    s.done();
    if (mode != "numeric" && mode != "analytic") throw ConfigError(s.path("mode") + ": expected numeric or analytic");
    if (shots) o.shots = shots;
    o.seed = seed;
    o.threads = threads;
    if (fixed > 0.0) o.fixed_time = fixed;
    const auto map = mode == "numeric" ? msgate::scan_map(gate, a1, g1, a2, g2, o) : msgate::analytic_map(gate, a1, g1, a2, g2, o);
    ctx.write("map.csv", msgate::map_to_csv(map));
    double worst = 0.0;
    for (std::size_t k = 0; k < map.p0.size(); ++k) worst = std::max(worst, std::abs(map.p0[k] + map.p1[k] + map.p2[k] - 1.0));
    json sum = msgate::map_metadata(map, gate);
    sum["mode"] = mode;
    sum["max_normalization_error"] = worst;
    const auto gp = msgate::gate_point(gate.omega, gate.eta);
    sum["gate_time"] = gp.t_gate;
    return {kExitOk, sum};
}

RunOutcome run_ms_parity(Node &root, Context &ctx, std::uint64_t seed) {
    const auto gate = read_gate(root.child("gate"));
    Node s = root.child("parity");
    const std::uint64_t nph = s.count("phases");
    msgate::ParityScanOptions o;
    o.shots = s.count("shots");
    o.population_shots = s.count("population_shots");
    double t = s.number("time");
    qcore::PropagateOptions po;
    po.tol = s.number("tol");
    s.done();
    o.seed = seed;
    if (t <= 0.0) t = kTwoPi / std::abs(gate.delta);
    const auto psi0 = qcore::RegisterState::basis(qcore::Qubit::kS, qcore::Qubit::kS, gate.initial_n, gate.n_max);
    const auto out = qcore::propagate(psi0, gate, 0.0, t, po);
    const auto rho = qcore::reduce_spin_density(out);
    std::vector<double> phases(nph);
    for (std::size_t i = 0; i < nph; ++i) phases[i] = kPi * static_cast<double>(i) / static_cast<double>(nph);
    const auto data = msgate::parity_scan(rho, phases, o);
    const auto fit = msgate::ml_fit_parity(data);
    io::CsvWriter w({"phase", "parity"});
    for (std::size_t i = 0; i < nph; ++i) w.row({data.phases[i], data.parity[i]});
    ctx.write("parity.csv", w.str());
    const Populations p = qcore::populations_of(rho);
    json sum = msgate::to_json(fit);
    sum["time"] = t;
    sum["populations"] = {p.p0, p.p1, p.p2};
    sum["even_population"] = data.even_population;
    sum["coherence_abs"] = std::abs(rho(0, 3));
    sum["direct_fidelity"] = 0.5 * (rho(0, 0).real() + rho(3, 3).real()) + std::abs(rho(0, 3));
    sum["params"] = msgate::to_json(gate);
    return {kExitOk, sum};
}

RunOutcome run_spectrum(Node &root, Context &ctx, std::uint64_t seed, std::size_t threads) {
    noisekit::NoisePsd laser = read_psd(root, "laser_noise");
    Node s = root.child("spectrum");
    const double pulse = s.number("pulse");
    const auto det = s.grid("detuning_hz");
    noisekit::DriveOptions o;
    o.omega = hz_to_angular(s.number("omega_hz"));
    o.realizations = s.count("realizations");
    o.dt = s.number("dt");
    o.seed = seed;
    o.threads = threads;
    const bool compare = s.flag("compare_cavity");
    Node cav = s.child("cavity");
    noisekit::CavityParams cp;
    cp.linewidth_hz = cav.number("linewidth_hz");
    cp.finesse = cav.number("finesse");
    cp.fsr_hz = cav.number("fsr_hz");
    cav.done();
    const double center = s.number("bump_center_hz"), fwhm = s.number("bump_fwhm_hz");
    s.done();

    Node sat = root.child("saturation");
    const bool sat_on = sat.flag("enabled");
    const double sat_det = sat.number("detuning_hz");
    const auto durations = sat.grid("durations");
    const double window = sat.number("linear_window");
    const double target = sat.number("calibrate_target");
    const double cal_dur = sat.number("calibrate_duration");
    const std::uint64_t sat_real = sat.count("realizations");
    sat.done();

    json sum;
    const noisekit::NoisePsd filtered = parse_at("spectrum.cavity", [&] { return noisekit::cavity_filter(laser, cp); });
    sum["cavity_transfer_at_bump"] = cp.transfer(center);
    sum["cavity_consistent"] = cp.consistent();

    const auto raw = noisekit::rabi_spectroscopy(laser, pulse, det, o);
    std::vector<std::string> header{"detuning_hz", "excitation", "baseline", "stderr", "excess"};
    noisekit::Spectrum filt;
    if (compare) {
        filt = noisekit::rabi_spectroscopy(filtered, pulse, det, o);
        header.insert(header.end(), {"filtered_excitation", "filtered_stderr", "filtered_excess"});
    }
    io::CsvWriter w(header);
    const auto ex = raw.excess();
    const auto fex = compare ? filt.excess() : std::vector<double>{};
    for (std::size_t i = 0; i < det.size(); ++i) {
        std::vector<double> row{det[i], raw.excitation[i], raw.baseline[i], raw.stderr_[i], ex[i]};
        if (compare) row.insert(row.end(), {filt.excitation[i], filt.stderr_[i], fex[i]});
        w.row(row);
    }
    ctx.write("spectrum.csv", w.str());
    const bool in_band = std::any_of(det.begin(), det.end(), [&](double d) { return std::abs(std::abs(d) - center) <= fwhm / 2; });
    if (in_band) {
        sum["shoulder_excess"] = noisekit::shoulder_level(raw, center, fwhm);
        if (compare) {
            const double f = noisekit::shoulder_level(filt, center, fwhm);
            sum["filtered_shoulder_excess"] = f;
            if (f > 0.0) sum["suppression_db"] = 10.0 * std::log10(sum["shoulder_excess"].get<double>() / f);
        }
    }

    if (sat_on) {
        noisekit::DriveOptions so = o;
        so.realizations = sat_real;
        if (target > 0.0) {
            noisekit::NoisePsd cal = laser;
            if (cal.bumps.empty()) throw ConfigError("saturation.calibrate_target: laser_noise has no bump");
            const double power = noisekit::calibrate_bump_power(cal, 0, sat_det, cal_dur, target, so);
            sum["calibrated_bump_power"] = power;
            laser = cal;
        }
        const auto a = noisekit::saturation_curve(laser, sat_det, durations, window, so);
        const auto b = noisekit::saturation_curve(noisekit::cavity_filter(laser, cp), sat_det, durations, window, so);
        io::CsvWriter sw({"duration", "excitation", "stderr", "filtered_excitation", "filtered_stderr"});
        for (std::size_t i = 0; i < durations.size(); ++i)
            sw.row({durations[i], a.excitation[i], a.stderr_[i], b.excitation[i], b.stderr_[i]});
        ctx.write("saturation.csv", sw.str());
        sum["slope"] = a.slope;
        sum["filtered_slope"] = b.slope;
        if (b.slope > 0.0) sum["slope_ratio"] = a.slope / b.slope;
    }
    sum["laser_noise"] = noisekit::to_json(laser);
    return {kExitOk, sum};
}

RunOutcome run_coherence(const std::string &sub, Node &root, Context &ctx, std::uint64_t seed, std::size_t threads) {
    const noisekit::NoisePsd laser = read_psd(root, "laser_noise");
    noisekit::NoisePsd field = read_psd(root, "field_noise");
    Node c = root.child("coherence");
    const auto times = c.grid("times");
    const int blocks = c.integer("blocks");
    seqlab::CoherenceOptions o;
    o.realizations = c.count("realizations");
    o.phase_points = c.count("phase_points");
    o.shots = c.count("shots");
    o.dt = c.number("dt");
    o.rf_error = c.number("rf_error");
    o.optical_error = c.number("optical_error");
    const std::string model = c.text("model");
    c.done();
    Node t = root.child("tune");
    const bool tune = t.flag("enabled");
    const double target = t.number("target"), tune_time = t.number("time");
    const bool with_laser = t.flag("with_laser");
    t.done();
    o.seed = seed;
    o.threads = threads;
    const auto kind = seqlab::parse_kind(sub);
    json sum;
    if (tune) {
        const auto ref = seqlab::build_ramsey(tune_time);
        const double scale = seqlab::tune_field_noise(field, ref, with_laser ? laser : noisekit::NoisePsd{}, target, o);
        sum["field_scale"] = scale;
        sum["field_noise"] = noisekit::to_json(field);
    }
    const auto curve = seqlab::scan_contrast(kind, blocks, times, laser, field, o);
    ctx.write("contrast.csv", seqlab::curve_to_csv(curve));
    sum["kind"] = sub;
    sum["blocks"] = blocks;
    sum["sequence"] = seqlab::to_json(seqlab::build_sequence(kind, times.back(), blocks));
    if (model != "none") {
        const auto m = parse_at(c.path("model"), [&] { return seqlab::parse_model(model); });
        sum["fit"] = seqlab::to_json(seqlab::fit_contrast(curve, m));
    }
    return {kExitOk, sum};
}

RunOutcome run_address(Node &root, Context &ctx, std::uint64_t seed, std::size_t threads) {
    const json &pj = root.raw("addressing");
    const auto params = parse_at("addressing", [&] { return addressing::params_from_json(pj); });
    Node a = root.child("address");
    const auto drive = parse_at(a.path("drive"), [&] { return addressing::parse_drive(a.text("drive")); });
    const double duration = a.number("duration");
    addressing::FlopOptions o;
    o.points = a.count("points");
    o.shots = a.count("shots");
    o.realizations = a.count("realizations");
    Node comp = a.child("composite");
    const double lo = comp.number("eps_lo"), hi = comp.number("eps_hi");
    const std::uint64_t cn = comp.count("points");
    comp.done();
    a.done();
    o.seed = seed;
    o.threads = threads;
    const auto trace = addressing::simulate_register_flops(params, drive, duration, o);
    ctx.write("flops.csv", addressing::trace_to_csv(trace));

    io::CsvWriter cw({"epsilon", "plain_infidelity", "composite_infidelity"});
    for (std::size_t i = 0; i < cn; ++i) {
        const double e = cn == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / double(cn - 1));
        const auto r = addressing::composite_pi(e);
        cw.row({e, r.plain_infidelity(), r.composite_infidelity()});
    }
    ctx.write("composite.csv", cw.str());

    const auto w = addressing::ion_rabi(params, drive);
    json sum;
    sum["drive"] = addressing::drive_name(drive);
    sum["ion_rabi_hz"] = {angular_to_hz(w[0]), angular_to_hz(w[1])};
    double max_p0 = 0.0;
    for (const auto &q : trace.pops) max_p0 = std::max(max_p0, q.p0);
    sum["max_p0"] = max_p0;
    if (cn >= 2) {
        const auto sl = addressing::infidelity_slopes(lo, hi, cn);
        sum["plain_slope"] = sl[0];
        sum["composite_slope"] = sl[1];
    }
    if (drive == addressing::Drive::kCarrier && w[0] > 0.0 && w[0] == w[1]) {
        const auto f = addressing::fit_flop_envelope(trace, w[0]);
        sum["envelope_sigma"] = f.sigma;
        sum["flip_fidelity"] = f.flip_fidelity;
    }
    sum["params"] = addressing::to_json(params);
    return {kExitOk, sum};
}

readout::DetectionModel read_detection(Node &root) {
    const json &j = root.raw("detection");
    return parse_at("detection", [&] { return readout::model_from_json(j); });
}

readout::PhotonHistogram read_histogram(Node &n, const char *key) {
    const std::string path = n.text(key);
    if (path.empty()) throw ConfigError(n.path(key) + ": a histogram CSV path is required");
    return parse_at(n.path(key), [&] { return readout::histogram_from_csv(io::read_file(path)); });
}

RunOutcome fit_and_report(const readout::PhotonHistogram &h, const readout::DetectionModel &m, Context &ctx, json sum) {
    const auto r = readout::infer_populations(h, m);
    const auto model_pmf = readout::mixture_pmf(r.pops, m, std::max<std::size_t>(h.occurrences.size(), 1) - 1);
    io::CsvWriter w({"count", "observed", "expected"});
    const double total = h.total();
    for (std::size_t n = 0; n < h.occurrences.size(); ++n) w.row({double(n), h.occurrences[n], total * model_pmf.occurrences[n]});
    ctx.write("fit.csv", w.str());
    sum["inference"] = readout::to_json(r);
    return {r.low_confidence ? kExitPhysics : kExitOk, sum};
}

RunOutcome run_readout(const std::string &sub, Node &root, Context &ctx, std::uint64_t seed) {
    const auto model = read_detection(root);
    Node r = root.child("readout");
    json sum;
    sum["detection"] = readout::to_json(model);
    if (sub == "readout-sim") {
        const auto pv = r.numbers("populations");
        if (pv.size() != 3) throw ConfigError(r.path("populations") + ": expected [p0, p1, p2]");
        const std::uint64_t shots = r.count("shots");
        const bool fit = r.flag("fit");
        r.done();
        const Populations pops{pv[0], pv[1], pv[2]};
        const auto h = parse_at("readout", [&] { return readout::simulate_histogram(pops, model, shots, seed); });
        ctx.write("histogram.csv", readout::histogram_to_csv(h));
        sum["shots"] = shots;
        sum["mean_count"] = h.mean();
        if (fit && shots > 0) return fit_and_report(h, model, ctx, sum);
        return {kExitOk, sum};
    }
    if (sub == "readout-fit") {
        const auto h = read_histogram(r, "histogram");
        r.done();
        return fit_and_report(h, model, ctx, sum);
    }
    const auto dark = read_histogram(r, "dark_histogram");
    const auto bright = read_histogram(r, "bright_histogram");
    r.done();
    const auto cal = readout::calibrate(dark, bright, model);
    sum["detection"] = readout::to_json(cal);
    sum["poorly_separated"] = readout::poorly_separated(cal);
    ctx.write("detection.json", readout::to_json(cal).dump(2) + "\n");
    return {readout::poorly_separated(cal) ? kExitPhysics : kExitOk, sum};
}

RunOutcome run_freq_table(Node &root, Context &ctx) {
    const json &pj = root.raw("plan");
    const auto plan = parse_at("plan", [&] { return freqplan::plan_from_json(pj); });
    const json &sj = root.raw("sequence");
    const auto seq = parse_at("sequence", [&] { return freqplan::sequence_from_json(sj); });
    const json &dj = root.raw("drift");
    const auto drift = parse_at("drift", [&] { return freqplan::drift_from_json(dj); });
    const auto times = root.grid("drift_times");

    const std::string table = freqplan::frequency_table(plan);
    ctx.log << table;
    ctx.write("table.txt", table);
    const auto rows = parse_at("sequence", [&] { return freqplan::phase_ledger(plan, seq); });
    ctx.write("ledger.csv", freqplan::ledger_to_csv(rows));

    json sum;
    sum["plan"] = freqplan::to_json(plan);
    sum["ledger"] = freqplan::to_json(rows);
    std::size_t flagged = 0;
    for (const auto &r : rows) flagged += r.flagged ? 1 : 0;
    sum["flagged_pulses"] = flagged;
    if (!times.empty()) {
        io::CsvWriter w({"time", "offset", "base_correction", "residual_bound", "extrapolated"});
        bool warn = false;
        for (double t : times) {
            const auto c = parse_at("drift", [&] { return freqplan::compensate_drift(drift, t); });
            warn = warn || c.slope_warning;
            w.row({t, c.offset, c.base_correction, c.residual_bound, c.extrapolated ? 1.0 : 0.0});
        }
        ctx.write("drift.csv", w.str());
        sum["drift_slope_warning"] = warn;
        sum["drift_max_step"] = freqplan::max_step(drift);
    }
    return {flagged ? kExitPhysics : kExitOk, sum};
}

RunOutcome run_lightshift(Node &root, Context &ctx, std::uint64_t seed, std::size_t threads) {
    const auto gate = read_gate(root.child("gate"));
    Node l = root.child("lightshift");
    const auto axis = read_axis(l, "axis");
    const auto det = l.grid("detuning_hz");
    const auto times = l.grid("time");
    const double offset = l.number("offset_hz");
    const std::uint64_t shots = l.count("shots");
    const std::string measured_path = l.text("measured");
    l.done();
    if (axis == msgate::Axis::kTime) throw ConfigError(l.path("axis") + ": must be a detuning axis");
    msgate::ScanOptions o;
    o.threads = threads;
    const auto calc = msgate::analytic_map(gate, axis, det, msgate::Axis::kTime, times, o);
    msgate::PopulationMap meas;
    json sum;
    if (!measured_path.empty()) {
        meas = parse_at(l.path("measured"),
                        [&] { return msgate::map_from_csv(io::read_file(measured_path), axis, msgate::Axis::kTime); });
        sum["source"] = measured_path;
    } else {
        std::vector<double> moved = det;
        for (double &x : moved) x -= offset;
        if (shots) o.shots = shots;
        o.seed = seed;
        meas = msgate::analytic_map(gate, axis, moved, msgate::Axis::kTime, times, o);
        meas.grid1 = det;
        sum["source"] = "synthetic";
        sum["true_offset_hz"] = offset;
    }
    ctx.write("calculated.csv", msgate::map_to_csv(calc));
    ctx.write("measured.csv", msgate::map_to_csv(meas));
    const auto r = msgate::register_maps(meas, calc, axis);
    sum["offset_hz"] = r.offset_hz;
    sum["grid_shift"] = r.grid_shift;
    sum["cost"] = r.cost;
    sum["grid_step_hz"] = det.size() > 1 ? det[1] - det[0] : 0.0;
    return {kExitOk, sum};
}

}  // namespace

RunOutcome run(const std::string &sub, const json &config, const std::filesystem::path &out_dir, std::ostream &log) {
    const auto names = subcommands();
    if (std::find(names.begin(), names.end(), sub) == names.end()) throw ConfigError("unknown subcommand '" + sub + "'");
    Node root(config, "");
    root.text("scenario");
    const std::uint64_t seed = root.count("seed");
    const std::size_t threads = root.count("threads");

    std::filesystem::create_directories(out_dir);
    Context ctx{out_dir, log};
    io::write_file(out_dir / "config.snapshot.json", config.dump(2) + "\n");
    ctx.artifacts.push_back("config.snapshot.json");

    RunOutcome res;
    if (sub == "ms-scan")
        res = run_ms_scan(root, ctx, seed, threads);
    else if (sub == "ms-parity")
        res = run_ms_parity(root, ctx, seed);
    else if (sub == "spectrum")
        res = run_spectrum(root, ctx, seed, threads);
    else if (sub == "ramsey" || sub == "mfdd" || sub == "echo")
        res = run_coherence(sub, root, ctx, seed, threads);
    else if (sub == "address")
        res = run_address(root, ctx, seed, threads);
    else if (sub == "freq-table")
        res = run_freq_table(root, ctx);
    else if (sub == "calibrate-lightshift")
        res = run_lightshift(root, ctx, seed, threads);
    else
        res = run_readout(sub, root, ctx, seed);
    root.done();

    json run_json = {{"subcommand", sub},
                     {"scenario", config.at("scenario")},
                     {"seed", seed},
                     {"status", res.exit_code == kExitOk ? "ok" : "physics_flag"},
                     {"summary", res.summary}};
    ctx.artifacts.push_back("run.json");
    run_json["artifacts"] = ctx.artifacts;
    io::write_file(out_dir / "run.json", run_json.dump(2) + "\n");
    return res;
}

int main(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"iongate: trapped-ion gate, noise and control simulations"};
    app.require_subcommand(1);
    std::string config_path, out_dir = "out";
    std::vector<std::string> sets;
    std::int64_t seed = -1;
    long threads = -1;
    for (const auto &name : subcommands()) {
        auto *sc = app.add_subcommand(name, descriptions().at(name));
        sc->add_option("--config", config_path, "JSON configuration file");
        sc->add_option("--set", sets, "override key.path=value (repeatable)");
        sc->add_option("--out", out_dir, "output directory");
        sc->add_option("--seed", seed, "root random seed");
        sc->add_option("--threads", threads, "worker threads (0 = all cores)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }
    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        json cfg = default_config(sub);
        if (!config_path.empty()) {
            json user = json::parse(io::read_file(config_path), nullptr, false);
            if (user.is_discarded()) throw ConfigError(config_path + ": not valid JSON");
            merge_config(cfg, user);
        }
        for (const auto &s : sets) apply_override(cfg, s);
        if (seed >= 0) cfg["seed"] = seed;
        if (seed < -1) throw ConfigError("--seed must be >= 0");
        if (threads >= 0) cfg["threads"] = threads;
        if (threads < -1) throw ConfigError("--threads must be >= 0");
        if (cfg.contains("threads") && cfg["threads"].is_number_integer() && cfg["threads"].get<long long>() >= 0)
            default_threads() = cfg["threads"].get<std::size_t>();
        const RunOutcome r = run(sub, cfg, out_dir, out);
        out << sub << ": " << (r.exit_code == kExitOk ? "ok" : "physics flag raised") << ", results in " << out_dir << "\n";
        return r.exit_code;
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const PhysicsError &e) {
        err << "physics error: " << e.what() << "\n";
        try {
            std::filesystem::create_directories(out_dir);
            const json j = {{"subcommand", sub}, {"status", "physics_error"}, {"error", e.what()}};
            io::write_file(std::filesystem::path(out_dir) / "run.json", j.dump(2) + "\n");
        } catch (...) {
        }
        return kExitPhysics;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace iongate::cli
