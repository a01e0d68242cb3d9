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


// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "iongate/addressing.hpp"
#include "iongate/cli.hpp"
#include "iongate/freqplan.hpp"
#include "iongate/io.hpp"
#include "iongate/msgate.hpp"
#include "iongate/noisekit.hpp"
#include "iongate/qcore.hpp"
#include "iongate/readout.hpp"
#include "iongate/rng.hpp"
#include "iongate/seqlab.hpp"

using namespace iongate;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * double(i) / double(n - 1);
    return v;
}

qcore::GateParams at_gate(double delta_hz) {
    qcore::GateParams p;
    p.delta = hz_to_angular(delta_hz);
    p.omega = msgate::omega_for_gate_detuning(p.delta, p.eta);
    return p;
}

Outcome analytic_vs_numeric() {
    const auto p = at_gate(10.5e3);
    const auto t = linspace(0.0, 2.0 * kTwoPi / p.delta, 20);
    const auto d = linspace(5e3, 30e3, 20);
    const auto start = std::chrono::steady_clock::now();
    const auto num = msgate::scan_map(p, msgate::Axis::kTime, t, msgate::Axis::kDelta, d);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto ana = msgate::analytic_map(p, msgate::Axis::kTime, t, msgate::Axis::kDelta, d);
    double worst = 0.0;
    for (std::size_t k = 0; k < num.p0.size(); ++k)
        worst = std::max({worst, std::abs(num.p0[k] - ana.p0[k]), std::abs(num.p1[k] - ana.p1[k]),
                          std::abs(num.p2[k] - ana.p2[k])});
    return {worst < 1e-3 && secs < 60.0, fmt("max |dP| = %.2e over 20x20, n_max = %d, %.1f s", worst, p.n_max, secs)};
}

Outcome gate_point() {
    const auto p = at_gate(10.5e3);
    const auto gp = msgate::gate_point(p.omega, p.eta);
    qcore::PropagateOptions po;
    po.tol = 1e-10;
    const auto out = qcore::propagate(qcore::RegisterState::basis(qcore::Qubit::kS, qcore::Qubit::kS, 0, p.n_max), p, 0.0,
                                      gp.t_gate, po);
    const auto rho = qcore::reduce_spin_density(out);
    const Populations pop = qcore::populations_of(rho);
    msgate::ParityScanOptions o;
    std::vector<double> phases = linspace(0.0, kPi * 19.0 / 20.0, 20);
    const auto fit = msgate::ml_fit_parity(msgate::parity_scan(rho, phases, o));
    const bool ok = std::abs(gp.t_gate - 95.2e-6) < 0.05e-6 && std::abs(pop.p0 - 0.5) < 1e-4 && std::abs(pop.p1) < 1e-4 &&
                    std::abs(pop.p2 - 0.5) < 1e-4 && std::abs(fit.fidelity - 1.0) < 1e-4;
    return {ok, fmt("t_gate = %.3f us, P = (%.6f, %.6f, %.6f), F = %.6f", gp.t_gate * 1e6, pop.p0, pop.p1, pop.p2,
                    fit.fidelity)};
}

Outcome parity_pipeline() {
    const auto rho = msgate::bell_like_density(0.495, 0.495, cplx(0.0, 0.485));
    const auto phases = linspace(0.0, kPi * 19.0 / 20.0, 20);
    const int reps = 200;
    double sum = 0, sum2 = 0, sig = 0;
    for (int r = 0; r < reps; ++r) {
        msgate::ParityScanOptions o;
        o.shots = 100;
        o.seed = 50000 + r;
        const auto f = msgate::ml_fit_parity(msgate::parity_scan(rho, phases, o));
        sum += f.fidelity;
        sum2 += f.fidelity * f.fidelity;
        sig += f.fidelity_sigma;
    }
    const double mean = sum / reps, sd = std::sqrt(sum2 / reps - mean * mean), msig = sig / reps;
    const bool ok = std::abs(mean - 0.980) <= 0.01 && msig >= 0.005 && msig <= 0.02 && std::abs(msig / sd - 1.0) < 0.5;
    return {ok, fmt("mean F = %.4f (target 0.980), reported sigma %.4f, empirical sd %.4f", mean, msig, sd)};
}

Outcome registration() {
    const auto p = at_gate(10.5e3);
    const auto d = linspace(-60e3, 60e3, 61);
    const auto t = linspace(0.0, 300e-6, 31);
    const double step = d[1] - d[0];
    const auto calc = msgate::analytic_map(p, msgate::Axis::kDelta, d, msgate::Axis::kTime, t);
    std::vector<double> moved = d;
    for (double &x : moved) x -= 35e3;
    auto measure = [&](std::optional<std::uint64_t> shots, std::uint64_t seed) {
        msgate::ScanOptions o;
        o.shots = shots;
        o.seed = seed;
        auto m = msgate::analytic_map(p, msgate::Axis::kDelta, moved, msgate::Axis::kTime, t, o);
        m.grid1 = d;
        return msgate::register_maps(m, calc, msgate::Axis::kDelta).offset_hz;
    };
    const double clean = measure(std::nullopt, 0);
    double worst = std::abs(clean - 35e3);
    bool ok = worst <= step / 2;
    double worst_noisy = 0.0;
    for (std::uint64_t s = 1; s <= 20; ++s) worst_noisy = std::max(worst_noisy, std::abs(measure(200, s) - 35e3));
    ok = ok && worst_noisy <= step / 2;
    return {ok, fmt("noiseless %.2f kHz, worst of 20 noisy = %.2f kHz off, half step %.1f kHz", clean / 1e3,
                    worst_noisy / 1e3, step / 2e3)};
}

Outcome cavity_filter() {
    const noisekit::CavityParams cav;
    const double h = cav.transfer(1.1e6);
    const double exact = 1.0 / (1.0 + std::pow(2.0 * 1.1e6 / cav.linewidth_hz, 2));
    noisekit::NoisePsd raw = noisekit::servo_bump_psd(0.08);
    noisekit::DriveOptions o;
    o.realizations = 100;
    o.seed = 404;
    const double power = noisekit::calibrate_bump_power(raw, 0, 1.1e6, 400e-6, 0.475, o);
    noisekit::DriveOptions check = o;
    check.seed = 405;
    check.realizations = 200;
    const double sat = noisekit::saturation_curve(raw, 1.1e6, {400e-6}, 0.0, check).excitation[0];
    noisekit::DriveOptions so;
    so.realizations = 200;
    so.seed = 406;
    const auto durations = linspace(0.0, 60e-6, 7);
    const auto a = noisekit::saturation_curve(raw, 1.1e6, durations, 60e-6, so);
    const auto b = noisekit::saturation_curve(noisekit::cavity_filter(raw, cav), 1.1e6, durations, 60e-6, so);
    // Filtered excess is below Monte Carlo noise: bound its slope from above,
    // treating the per-duration errors as fully correlated.
    double xbar = 0, sxx = 0, spread = 0;
    for (double t : durations) xbar += t / double(durations.size());
    for (double t : durations) sxx += (t - xbar) * (t - xbar);
    for (std::size_t i = 0; i < durations.size(); ++i) spread += std::abs(durations[i] - xbar) / sxx * b.stderr_[i];
    const double upper = std::max(b.slope, 0.0) + 3.0 * spread;
    const double ratio = a.slope / upper;
    const bool ok = std::abs(h - exact) <= 1e-18 && std::abs(h - 9.999e-5) < 5e-9 && ratio >= 30.0 &&
                    std::abs(sat - 0.5) <= 0.05;
    return {ok, fmt("|H|^2 = %.6e, slope raw %.4g /s vs filtered %.3g /s (3-sigma bound %.3g), ratio >= %.3g, "
                    "calibrated power %.4f rad^2, excitation at 400 us = %.3f",
                    h, a.slope, b.slope, upper, ratio, power, sat)};
}

noisekit::NoisePsd gaussian_laser(double fwhm_hz) {
    noisekit::NoisePsd p;
    p.quasi_static_rms = kTwoPi * fwhm_hz / std::sqrt(8.0 * std::log(2.0));
    return p;
}

double interp_stderr(const seqlab::ContrastCurve &c, double t) {
    for (std::size_t i = 1; i < c.times.size(); ++i)
        if (t <= c.times[i]) {
            const double w = (t - c.times[i - 1]) / (c.times[i] - c.times[i - 1]);
            return (1 - w) * c.stderr_[i - 1] + w * c.stderr_[i];
        }
    return c.stderr_.back();
}

// Half-contrast time of a Gaussian fit and its Monte Carlo error bar.
std::pair<double, double> half_time(const seqlab::ContrastCurve &c) {
    const auto f = seqlab::fit_contrast(c, seqlab::ContrastModel::kGaussian);
    const double t = f.half_time, h = 1e-6;
    const double slope = (seqlab::model_value(f, t + h) - seqlab::model_value(f, t - h)) / (2 * h);
    return {t, interp_stderr(c, t) / std::abs(slope)};
}

Outcome mfdd() {
    noisekit::NoisePsd field;
    field.lines.push_back({50.0, 1e-10});
    field.quasi_static_rms = 1e-10;
    seqlab::CoherenceOptions o;
    o.realizations = 400;
    o.seed = 606;
    const double t0 = 1.7e-3;
    seqlab::tune_field_noise(field, seqlab::build_ramsey(t0), noisekit::NoisePsd{}, 0.5, o);
    seqlab::CoherenceOptions v = o;
    v.seed = 607;
    const double ramsey = seqlab::simulate_coherence(seqlab::build_ramsey(t0), {}, field, v).contrast;
    const double n4 = seqlab::simulate_coherence(seqlab::build_mfdd(t0, 4), {}, field, v).contrast;

    const auto laser = gaussian_laser(65.0);
    seqlab::CoherenceOptions w = o;
    w.seed = 608;
    w.realizations = 600;
    const auto times = linspace(1e-3, 14e-3, 14);
    const auto c4 = seqlab::scan_contrast(seqlab::SequenceKind::kMfdd, 4, times, laser, field, w);
    const auto c8 = seqlab::scan_contrast(seqlab::SequenceKind::kMfdd, 8, times, laser, field, w);
    const auto [h4, e4] = half_time(c4);
    const auto [h8, e8] = half_time(c8);
    const double bar = std::hypot(e4, e8);
    const bool ok = std::abs(ramsey - 0.5) < 0.03 && n4 > 0.95 && std::abs(h4 - 6.7e-3) <= 0.15 * 6.7e-3 && h8 - h4 < bar;
    return {ok, fmt("Ramsey(1.7 ms) = %.3f, MFDD N=4(1.7 ms) = %.4f; 50%% time N=4 %.2f ms, N=8 %.2f ms, "
                    "N=8 gain %.3f ms vs error bar %.3f ms",
                    ramsey, n4, h4 * 1e3, h8 * 1e3, (h8 - h4) * 1e3, bar * 1e3)};
}

Outcome linewidths() {
    noisekit::NoisePsd white;
    white.white_level = 4.0 * kPi * 11.0;
    seqlab::CoherenceOptions o;
    o.realizations = 400;
    o.seed = 707;
    const auto echo = seqlab::scan_contrast(seqlab::SequenceKind::kEcho, 1, linspace(2e-3, 60e-3, 12), white, {}, o);
    const double lw_echo = seqlab::fit_contrast(echo, seqlab::ContrastModel::kExponential).linewidth_hz;
    seqlab::CoherenceOptions g = o;
    g.realizations = 1000;
    g.seed = 708;
    const auto ram = seqlab::scan_contrast(seqlab::SequenceKind::kRamsey, 1, linspace(1e-3, 14e-3, 14), gaussian_laser(65.0), {}, g);
    const double lw_gauss = seqlab::fit_contrast(ram, seqlab::ContrastModel::kGaussian).linewidth_hz;
    const bool ok = std::abs(lw_echo - 11.0) <= 1.5 && std::abs(lw_gauss - 65.0) <= 7.0;
    return {ok, fmt("echo (white, 11 Hz) -> %.2f Hz; Ramsey (Gaussian, 65 Hz FWHM) -> %.2f Hz", lw_echo, lw_gauss)};
}

double matrix_transfer(double eps, bool composite) {
    auto rot = [](double theta, double phi) { return qcore::rotation_matrix(theta, phi); };
    const double s = 1.0 + eps;
    const Eigen::Matrix2cd u = composite ? Eigen::Matrix2cd(rot(s * kPi / 2, 0) * rot(s * kPi, kPi / 2) * rot(s * kPi / 2, 0))
                                         : rot(s * kPi, 0);
    return std::norm(u(1, 0));
}

Outcome composite() {
    const auto slopes = addressing::infidelity_slopes(1e-3, 1e-1, 41);
    const auto r = addressing::composite_pi(0.05);
    const double dp = std::abs(r.plain_infidelity() - (1 - matrix_transfer(0.05, false)));
    const double dc = std::abs(r.composite_infidelity() - (1 - matrix_transfer(0.05, true)));
    const bool ok = std::abs(slopes[0] - 2.0) <= 0.05 && std::abs(slopes[1] - 4.0) <= 0.05 && dp < 1e-9 && dc < 1e-9;
    return {ok, fmt("slopes %.4f / %.4f; eps = 0.05: %.4e / %.4e (matrix oracle diff %.1e / %.1e)", slopes[0], slopes[1],
                    r.plain_infidelity(), r.composite_infidelity(), dp, dc)};
}

Outcome addressing_mm() {
    addressing::AddressingParams p;
    p.k_dot_x = {0.0, 0.1};
    addressing::FlopOptions o;
    o.points = 2001;
    const double w = addressing::ion_rabi(p, addressing::Drive::kSideband)[1];
    const auto tr = addressing::simulate_register_flops(p, addressing::Drive::kSideband, 10 * kTwoPi / w, o);
    double max_p0 = 0, max_p1 = 0, max_p2 = 0, anti = 0;
    for (const auto &q : tr.pops) {
        max_p0 = std::max(max_p0, q.p0);
        max_p1 = std::max(max_p1, q.p1);
        max_p2 = std::max(max_p2, q.p2);
        anti = std::max(anti, std::abs(q.p1 + q.p2 - 1.0));
    }
    const double ratio = addressing::mm_rabi(1.0, 0.1).omega_mm;
    const bool ok = max_p0 < 0.01 && max_p1 > 0.99 && max_p2 > 0.99 && anti < 1e-12 && std::abs(ratio - 0.049938) < 1e-6;
    return {ok, fmt("max P0 = %.1e, P1+P2-1 within %.1e, amplitudes %.4f/%.4f, J1(0.1) = %.7f", max_p0, anti, max_p1,
                    max_p2, ratio)};
}

Outcome readout_round_trip() {
    const readout::DetectionModel m;
    const Populations truth{0.25, 0.5, 0.25};
    int ok_count = 0;
    double worst = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto r = readout::infer_populations(readout::simulate_histogram(truth, m, 10000, 9000 + s), m);
        const double e = std::max({std::abs(r.pops.p0 - 0.25), std::abs(r.pops.p1 - 0.5), std::abs(r.pops.p2 - 0.25)});
        worst = std::max(worst, e);
        if (e <= 0.02) ++ok_count;
    }
    return {ok_count >= 95, fmt("%d/100 within 0.02 (worst component error %.4f)", ok_count, worst)};
}

Outcome freqplan_checks() {
    using namespace freqplan;
    FrequencyPlan p;
    p.set(Channel::kBase, 80e6);
    p.set(Channel::kCarrier, 110e6);
    p.configure_mm_from_carrier();
    p.set(Channel::kF1, 200e6, 0.2);
    p.configure_ms(0.9905e6, 0.4, 1.3);
    double switch_err = 0;
    for (Sideband s : {Sideband::kNone, Sideband::kRsb, Sideband::kBsb, Sideband::kF1})
        switch_err = std::max(switch_err, std::abs(pulse_frequency(p, {Path::kMm, s}) - pulse_frequency(p, {Path::kCarrier, s}) - 21.75e6));

    Engine eng(1111);
    std::uniform_real_distribution<double> u(0, 1);
    bool bound_ok = true;
    for (int rep = 0; rep < 50 && bound_ok; ++rep) {
        const double K = 0.05 + 2 * u(eng);
        const double w = kTwoPi / (200 + 2000 * u(eng)), ph = kTwoPi * u(eng);
        const double a = 0.5 * K / (w * w), c = 0.25 * K * (u(eng) < 0.5 ? -1 : 1);
        auto f = [&](double t) { return a * std::sin(w * t + ph) + c * t * t + 40 * t; };
        DriftModel m;
        m.max_curvature = K;
        m.max_slope = 1e12;
        for (int i = 0; i <= 6; ++i) m.points.push_back({180.0 * i, f(180.0 * i)});
        for (double t = 0; t <= 1260; t += 0.25) {
            const auto cr = compensate_drift(m, t);
            if (std::abs(f(t) - cr.offset) > cr.residual_bound) bound_ok = false;
        }
    }

    PulseSequence seq;
    for (int i = 0; i < 10; ++i) {
        seq.pulses.push_back({"rsb", 1e-4 * (i + 1), 1e-6, {Path::kCarrier, Sideband::kRsb}});
        seq.pulses.push_back({"bsb", 1e-4 * (i + 1) + 1e-8, 1e-6, {Path::kCarrier, Sideband::kBsb}});
    }
    const auto plain = phase_ledger(p, seq);
    PulseSequence ramp = seq;
    for (int k = 0; k < 200; ++k) ramp.updates.push_back({5e-6 * k, Channel::kBase, 80e6 + 1e4 * (u(eng) - 0.5)});
    const auto ramped = phase_ledger(p, ramp);
    const std::size_t ir = std::size_t(Channel::kRsb), ib = std::size_t(Channel::kBsb);
    double rel_err = 0;
    for (std::size_t i = 0; i < plain.size(); ++i) {
        double d = (ramped[i].channel_phase[ir] - ramped[i].channel_phase[ib]) -
                   (plain[i].channel_phase[ir] - plain[i].channel_phase[ib]);
        d = std::remainder(d, kTwoPi);
        rel_err = std::max(rel_err, std::abs(d));
    }
    const bool ok = switch_err == 0.0 && bound_ok && rel_err <= 1e-9;
    return {ok, fmt("switch error %.1e Hz; residual <= bound on 50 drifts: %s; rsb-bsb phase change %.1e rad", switch_err,
                    bound_ok ? "yes" : "no", rel_err)};
}

Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "iongate_acceptance";
    fs::remove_all(root);
    const std::vector<std::vector<std::string>> runs = {
        {"ms-scan", "--set", "scan.shots=100", "--set", "scan.grid1.points=8", "--set", "scan.grid2.points=6"},
        {"ms-parity", "--set", "parity.shots=100"},
        {"spectrum", "--set", "spectrum.realizations=8", "--set", "spectrum.detuning_hz.points=21"},
        {"mfdd", "--set", "coherence.realizations=50"},
        {"address", "--set", "address.shots=200", "--set", "addressing.rabi_jitter=0.01"},
        {"readout-sim"},
        {"calibrate-lightshift"}};
    int identical = 0, files = 0;
    std::string bad;
    for (const auto &args : runs) {
        std::vector<fs::path> dirs;
        for (int k = 0; k < 2; ++k) {
            dirs.push_back(root / (args[0] + "_" + std::to_string(k)));
            std::vector<std::string> a = {"iongate", args[0], "--out", dirs.back().string(), "--seed", "2024", "--threads",
                                          k == 0 ? "1" : "2"};
            a.insert(a.end(), args.begin() + 1, args.end());
            std::vector<const char *> argv;
            for (const auto &s : a) argv.push_back(s.c_str());
            std::ostringstream out, err;
            if (cli::main(int(argv.size()), argv.data(), out, err) != 0) bad += args[0] + "(exit) ";
        }
        for (const auto &e : fs::directory_iterator(dirs[0])) {
            if (e.path().extension() != ".csv") continue;
            ++files;
            if (io::read_file(e.path()) == io::read_file(dirs[1] / e.path().filename()))
                ++identical;
            else
                bad += args[0] + "/" + e.path().filename().string() + " ";
        }
    }
    return {bad.empty() && files > 0 && identical == files,
            fmt("%d/%d CSV files byte-identical across repeated runs of %zu subcommands %s", identical, files, runs.size(),
                bad.c_str())};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"analytic-numeric equivalence", analytic_vs_numeric},
        {"gate point", gate_point},
        {"ML parity pipeline", parity_pipeline},
        {"light-shift registration", registration},
        {"cavity filter", cavity_filter},
        {"MFDD", mfdd},
        {"linewidth round trips", linewidths},
        {"composite pulse", composite},
        {"addressing", addressing_mm},
        {"readout round trip", readout_round_trip},
        {"freqplan", freqplan_checks},
        {"determinism", determinism}};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("criterion %2zu %-30s %s  %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
