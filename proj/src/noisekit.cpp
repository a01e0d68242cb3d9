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

#include "iongate/noisekit.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <set>

#include "iongate/fitting.hpp"
#include "iongate/io.hpp"
#include "iongate/parallel.hpp"
#include "iongate/rng.hpp"

namespace iongate::noisekit {

double CavityParams::transfer(double f_hz) const {
    const double x = 2.0 * f_hz / linewidth_hz;
    return 1.0 / (1.0 + x * x);
}

bool CavityParams::consistent() const {
    const double expected = fsr_hz / finesse;
    return std::abs(linewidth_hz - expected) <= 0.2 * expected;
}

void NoisePsd::validate() const {
    if (!(white_level >= 0.0) || !(flicker_level >= 0.0) || !(quasi_static_rms >= 0.0))
        throw ConfigError("noise psd: levels must be >= 0");
    if (!(flicker_cutoff_hz > 0.0)) throw ConfigError("noise psd: flicker_cutoff_hz must be > 0");
    for (const auto &l : lines) {
        if (!(l.frequency_hz > 0.0)) throw ConfigError("noise psd: line frequency must be > 0");
        if (!(l.rms >= 0.0)) throw ConfigError("noise psd: line rms must be >= 0");
    }
    for (const auto &b : bumps) {
        if (!(b.fwhm_hz > 0.0)) throw ConfigError("noise psd: bump fwhm must be > 0");
        if (!(b.center_hz >= 0.0) || !(b.power >= 0.0)) throw ConfigError("noise psd: bump center/power must be >= 0");
    }
    for (const auto &c : filters)
        if (!(c.linewidth_hz > 0.0)) throw ConfigError("cavity: linewidth must be > 0");
}

double NoisePsd::filter_transfer(double f_hz) const {
    double h = 1.0;
    for (const auto &c : filters) h *= c.transfer(f_hz);
    return h;
}

double bump_phase_density(const Bump &b, double f_hz) {
    const double sigma = b.fwhm_hz / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const double norm = b.power / (sigma * std::sqrt(kTwoPi));
    const double u = (f_hz - b.center_hz) / sigma;
    const double v = (f_hz + b.center_hz) / sigma;
    return norm * (std::exp(-0.5 * u * u) + std::exp(-0.5 * v * v));
}

namespace {

double bump_frequency_density(const std::vector<Bump> &bumps, double f) {
    double s = 0.0;
    const double w = kTwoPi * f;
    for (const auto &b : bumps) s += bump_phase_density(b, f) * w * w;
    return s;
}

}  // namespace

double NoisePsd::density(double f_hz) const {
    if (!(f_hz > 0.0)) return 0.0;
    double s = white_level + bump_frequency_density(bumps, f_hz);
    if (f_hz >= flicker_cutoff_hz) s += flicker_level / f_hz;
    return s * filter_transfer(f_hz);
}

double NoisePsd::band_power(double lo_hz, double hi_hz) const {
    if (!(hi_hz > lo_hz)) return 0.0;
    const double mid = 0.5 * (lo_hz + hi_hz);
    const double h = filter_transfer(mid);
    double p = (white_level + bump_frequency_density(bumps, mid)) * (hi_hz - lo_hz);
    const double flo = std::max(lo_hz, flicker_cutoff_hz);
    if (flicker_level > 0.0 && hi_hz > flo) p += flicker_level * std::log(hi_hz / flo);
    return p * h;
}

double NoisePsd::line_rms(std::size_t i) const { return lines.at(i).rms * std::sqrt(filter_transfer(lines[i].frequency_hz)); }

double NoisePsd::max_frequency() const {
    double f = 0.0;
    for (const auto &l : lines) f = std::max(f, l.frequency_hz);
    for (const auto &b : bumps) f = std::max(f, b.center_hz + b.fwhm_hz);
    return f;
}

bool NoisePsd::is_zero() const {
    if (white_level > 0.0 || flicker_level > 0.0 || quasi_static_rms > 0.0) return false;
    for (const auto &l : lines)
        if (l.rms > 0.0) return false;
    for (const auto &b : bumps)
        if (b.power > 0.0) return false;
    return true;
}

NoisePsd cavity_filter(const NoisePsd &psd, const CavityParams &cavity) {
    if (!(cavity.linewidth_hz > 0.0)) throw ConfigError("cavity: linewidth must be > 0");
    NoisePsd out = psd;
    out.filters.push_back(cavity);
    return out;
}

namespace {

std::mutex &fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

// Inverse real transform, unnormalized: x_n = sum_k X_k e^{2 pi i k n / M}.
std::vector<double> inverse_real_fft(std::vector<cplx> spectrum, std::size_t m) {
    std::vector<double> out(m);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_plan_mutex());
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(m), reinterpret_cast<fftw_complex *>(spectrum.data()),
                                    out.data(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

bool has_continuous(const NoisePsd &psd) {
    if (psd.white_level > 0.0 || psd.flicker_level > 0.0) return true;
    for (const auto &b : psd.bumps)
        if (b.power > 0.0) return true;
    return false;
}

}  // namespace

double auto_dt(const NoisePsd &psd, double duration) {
    const double fmax = psd.max_frequency();
    const double coarse = duration / 1000.0;
    return fmax > 0.0 ? std::min(1.0 / (8.0 * fmax), coarse) : coarse;
}

NoiseTrajectory synthesize(const NoisePsd &psd, double duration, double dt, std::uint64_t seed) {
    psd.validate();
    if (!(duration > 0.0) || !(dt > 0.0)) throw ConfigError("synthesize: duration and dt must be > 0");
    const double fmax = psd.max_frequency();
    if (fmax > 0.0 && dt >= 1.0 / (4.0 * fmax))
        throw PhysicsError(PhysicsError::Kind::kAliasing,
                           "synthesize: dt must be < 1/(4 f_max) = " + std::to_string(1.0 / (4.0 * fmax)) + " s");

    const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(duration / dt - 1e-9)));
    NoiseTrajectory tr;
    tr.dt = dt;
    tr.seed = seed;
    tr.samples.assign(n, 0.0);

    Engine eng = derive_engine(seed, {0});
    std::normal_distribution<double> gauss(0.0, 1.0);

    const std::size_t m = 2 * n;
    const double df = 1.0 / (double(m) * dt);
    double static_var = psd.quasi_static_rms * psd.quasi_static_rms;
    if (has_continuous(psd)) static_var += psd.band_power(0.0, 0.5 * df);
    const double offset = std::sqrt(static_var) * gauss(eng);

    if (has_continuous(psd)) {
        std::vector<cplx> spec(m / 2 + 1, cplx(0.0, 0.0));
        for (std::size_t k = 1; k < m / 2; ++k) {
            const double sd = std::sqrt(psd.band_power((double(k) - 0.5) * df, (double(k) + 0.5) * df));
            const double a = sd * gauss(eng);
            const double b = sd * gauss(eng);
            spec[k] = cplx(0.5 * a, -0.5 * b);
        }
        const auto x = inverse_real_fft(std::move(spec), m);
        for (std::size_t i = 0; i < n; ++i) tr.samples[i] = x[i];
    }
    for (auto &s : tr.samples) s += offset;

    std::uniform_real_distribution<double> uphase(0.0, kTwoPi);
    for (std::size_t l = 0; l < psd.lines.size(); ++l) {
        const auto &line = psd.lines[l];
        const double ph = line.policy == PhasePolicy::kRandom ? uphase(eng) : line.phase;
        const double amp = std::sqrt(2.0) * psd.line_rms(l);
        const double w = kTwoPi * line.frequency_hz;
        for (std::size_t i = 0; i < n; ++i) tr.samples[i] += amp * std::cos(w * (double(i) + 0.5) * dt + ph);
    }
    return tr;
}

double rabi_excitation(double omega, double detuning, double t) {
    const double w2 = omega * omega + detuning * detuning;
    if (w2 == 0.0) return 0.0;
    const double s = std::sin(0.5 * std::sqrt(w2) * t);
    return omega * omega / w2 * s * s;
}

namespace {

struct TwoLevel {
    cplx g{1.0, 0.0};
    cplx e{0.0, 0.0};

    // exp(-i h/2 (omega sx + d sz)) in the (g, e) basis.
    void step(double omega, double d, double h) {
        const double w = std::hypot(omega, d);
        if (w == 0.0 || h == 0.0) return;
        const double c = std::cos(0.5 * w * h);
        const double s = std::sin(0.5 * w * h) / w;
        const cplx ng = cplx(c, -s * d) * g + cplx(0.0, -s * omega) * e;
        const cplx ne = cplx(0.0, -s * omega) * g + cplx(c, s * d) * e;
        g = ng;
        e = ne;
    }
};

// Excited population at each (ascending) time, detuning + noise held per sample.
void evolve(const NoiseTrajectory *noise, double omega, double detuning, const std::vector<double> &times,
            double *out) {
    TwoLevel s;
    double t_cur = 0.0;
    std::size_t k = 0;
    const double dt = noise ? noise->dt : 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double target = times[i];
        if (!noise) {
            s.step(omega, detuning, target - t_cur);
            t_cur = target;
            out[i] = std::norm(s.e);
            continue;
        }
        while (t_cur < target) {
            const double seg_end = double(k + 1) * dt;
            const double nu = k < noise->samples.size() ? noise->samples[k] : noise->samples.back();
            if (target >= seg_end) {
                s.step(omega, detuning + nu, seg_end - t_cur);
                t_cur = seg_end;
                ++k;
            } else {
                s.step(omega, detuning + nu, target - t_cur);
                t_cur = target;
            }
        }
        out[i] = std::norm(s.e);
    }
}

std::vector<NoiseTrajectory> draw(const NoisePsd &psd, double duration, double dt, const DriveOptions &opts) {
    std::vector<NoiseTrajectory> out(opts.realizations);
    parallel_for(
        opts.realizations,
        [&](std::size_t r) { out[r] = synthesize(psd, duration, dt, derive_seed(opts.seed, {stream::kLaser, r})); },
        opts.threads);
    return out;
}

void check_drive(const DriveOptions &opts) {
    if (opts.realizations < 1) throw ConfigError("drive: realizations must be >= 1");
    if (!(opts.omega >= 0.0)) throw ConfigError("drive: omega must be >= 0");
}

// Mean and standard error over rows of a realizations x columns table.
void reduce(const std::vector<double> &table, std::size_t rows, std::size_t cols, std::vector<double> &mean,
            std::vector<double> &se) {
    mean.assign(cols, 0.0);
    se.assign(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) mean[c] += table[r * cols + c];
    for (auto &m : mean) m /= double(rows);
    if (rows < 2) return;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double d = table[r * cols + c] - mean[c];
            se[c] += d * d;
        }
    for (auto &v : se) v = std::sqrt(v / double(rows - 1) / double(rows));
}

}  // namespace

std::vector<double> Spectrum::excess() const {
    std::vector<double> out(excitation.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = excitation[i] - baseline[i];
    return out;
}

Spectrum rabi_spectroscopy(const NoisePsd &psd, double pulse, const std::vector<double> &detunings_hz,
                           const DriveOptions &opts) {
    check_drive(opts);
    if (!(pulse > 0.0)) throw ConfigError("rabi_spectroscopy: pulse must be > 0");
    const double dt = opts.dt > 0.0 ? opts.dt : auto_dt(psd, pulse);
    const auto noise = draw(psd, pulse, dt, opts);
    const std::size_t nd = detunings_hz.size();
    std::vector<double> table(opts.realizations * nd);
    const std::vector<double> times{pulse};
    parallel_for(
        opts.realizations,
        [&](std::size_t r) {
            for (std::size_t j = 0; j < nd; ++j)
                evolve(&noise[r], opts.omega, hz_to_angular(detunings_hz[j]), times, &table[r * nd + j]);
        },
        opts.threads);

    Spectrum s;
    s.detuning_hz = detunings_hz;
    reduce(table, opts.realizations, nd, s.excitation, s.stderr_);
    for (double d : detunings_hz) s.baseline.push_back(rabi_excitation(opts.omega, hz_to_angular(d), pulse));
    return s;
}

double shoulder_level(const Spectrum &s, double center_hz, double fwhm_hz) {
    const auto ex = s.excess();
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ex.size(); ++i) {
        const double f = std::abs(s.detuning_hz[i]);
        if (std::abs(f - center_hz) <= 0.5 * fwhm_hz) {
            acc += ex[i];
            ++n;
        }
    }
    if (n == 0) throw ConfigError("shoulder_level: no grid points inside the shoulder band");
    return acc / double(n);
}

SaturationCurve saturation_curve(const NoisePsd &psd, double detuning_hz, const std::vector<double> &durations,
                                 double linear_window, const DriveOptions &opts) {
    check_drive(opts);
    if (durations.empty()) throw ConfigError("saturation_curve: empty duration grid");
    for (double t : durations)
        if (!(t >= 0.0)) throw ConfigError("saturation_curve: durations must be >= 0");
    std::vector<std::size_t> order(durations.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return durations[a] < durations[b]; });
    std::vector<double> sorted;
    for (auto i : order) sorted.push_back(durations[i]);
    const double tmax = std::max(sorted.back(), 1e-12);
    const double dt = opts.dt > 0.0 ? opts.dt : auto_dt(psd, tmax);
    const auto noise = draw(psd, tmax, dt, opts);

    const std::size_t nt = sorted.size();
    std::vector<double> table(opts.realizations * nt);
    const double det = hz_to_angular(detuning_hz);
    parallel_for(
        opts.realizations, [&](std::size_t r) { evolve(&noise[r], opts.omega, det, sorted, &table[r * nt]); },
        opts.threads);

    std::vector<double> mean, se;
    reduce(table, opts.realizations, nt, mean, se);

    SaturationCurve c;
    c.detuning_hz = detuning_hz;
    c.durations = durations;
    c.excitation.resize(nt);
    c.stderr_.resize(nt);
    c.baseline.resize(nt);
    for (std::size_t s = 0; s < nt; ++s) {
        c.excitation[order[s]] = mean[s];
        c.stderr_[order[s]] = se[s];
    }
    std::vector<double> x, y;
    for (std::size_t i = 0; i < nt; ++i) {
        c.baseline[i] = rabi_excitation(opts.omega, det, durations[i]);
        if (linear_window <= 0.0 || durations[i] <= linear_window) {
            x.push_back(durations[i]);
            y.push_back(c.excitation[i] - c.baseline[i]);
        }
    }
    if (x.size() >= 2) {
        const auto fit = fitting::fit_line(x, y);
        c.slope = fit.slope;
        c.intercept = fit.intercept;
    }
    return c;
}

double calibrate_bump_power(NoisePsd &psd, std::size_t index, double detuning_hz, double duration, double target,
                            const DriveOptions &opts) {
    if (index >= psd.bumps.size()) throw ConfigError("calibrate_bump_power: bump index out of range");
    if (!(target > 0.0 && target < 0.5)) throw ConfigError("calibrate_bump_power: target must be in (0, 0.5)");
    auto excitation_at = [&](double power) {
        NoisePsd p = psd;
        p.bumps[index].power = power;
        return saturation_curve(p, detuning_hz, {duration}, 0.0, opts).excitation[0];
    };
    double lo = std::log(1e-6), hi = std::log(10.0);
    if (excitation_at(std::exp(hi)) < target)
        throw PhysicsError(PhysicsError::Kind::kNonConvergence, "calibrate_bump_power: target not reachable");
    if (excitation_at(std::exp(lo)) > target)
        throw PhysicsError(PhysicsError::Kind::kNonConvergence, "calibrate_bump_power: target below noise floor");
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (excitation_at(std::exp(mid)) < target)
            lo = mid;
        else
            hi = mid;
    }
    psd.bumps[index].power = std::exp(0.5 * (lo + hi));
    return psd.bumps[index].power;
}

std::vector<double> ramsey_coherence(const NoisePsd &psd, const std::vector<double> &times, const DriveOptions &opts) {
    check_drive(opts);
    if (times.empty()) return {};
    const double tmax = *std::max_element(times.begin(), times.end());
    if (!(tmax > 0.0)) throw ConfigError("ramsey_coherence: need a positive time");
    const double dt = opts.dt > 0.0 ? opts.dt : auto_dt(psd, tmax);
    const auto noise = draw(psd, tmax, dt, opts);
    const std::size_t nt = times.size();
    std::vector<double> table(opts.realizations * nt);
    parallel_for(
        opts.realizations,
        [&](std::size_t r) {
            const auto &s = noise[r].samples;
            std::vector<double> cum(s.size() + 1, 0.0);
            for (std::size_t k = 0; k < s.size(); ++k) cum[k + 1] = cum[k] + s[k] * dt;
            for (std::size_t i = 0; i < nt; ++i) {
                const double t = times[i];
                const std::size_t k = std::min(s.size(), static_cast<std::size_t>(t / dt));
                double phase = cum[k];
                if (k < s.size()) phase += s[k] * (t - double(k) * dt);
                table[r * nt + i] = std::cos(phase);
            }
        },
        opts.threads);
    std::vector<double> mean, se;
    reduce(table, opts.realizations, nt, mean, se);
    return mean;
}

nlohmann::json to_json(const NoisePsd &psd) {
    nlohmann::json j;
    j["white_level"] = psd.white_level;
    j["flicker_level"] = psd.flicker_level;
    j["flicker_cutoff_hz"] = psd.flicker_cutoff_hz;
    j["quasi_static_rms"] = psd.quasi_static_rms;
    j["lines"] = nlohmann::json::array();
    for (const auto &l : psd.lines)
        j["lines"].push_back({{"frequency_hz", l.frequency_hz},
                              {"rms", l.rms},
                              {"phase_policy", l.policy == PhasePolicy::kRandom ? "random" : "fixed"},
                              {"phase", l.phase}});
    j["bumps"] = nlohmann::json::array();
    for (const auto &b : psd.bumps)
        j["bumps"].push_back({{"center_hz", b.center_hz}, {"fwhm_hz", b.fwhm_hz}, {"power", b.power}});
    j["filters"] = nlohmann::json::array();
    for (const auto &c : psd.filters)
        j["filters"].push_back({{"linewidth_hz", c.linewidth_hz}, {"finesse", c.finesse}, {"fsr_hz", c.fsr_hz}});
    return j;
}

NoisePsd psd_from_json(const nlohmann::json &j) {
    io::check_keys(j, {"white_level", "flicker_level", "flicker_cutoff_hz", "quasi_static_rms", "lines", "bumps", "filters"},
               "noise psd");
    NoisePsd p;
    try {
        p.white_level = j.value("white_level", 0.0);
        p.flicker_level = j.value("flicker_level", 0.0);
        p.flicker_cutoff_hz = j.value("flicker_cutoff_hz", 1e-3);
        p.quasi_static_rms = j.value("quasi_static_rms", 0.0);
        for (const auto &l : j.value("lines", nlohmann::json::array())) {
            io::check_keys(l, {"frequency_hz", "rms", "phase_policy", "phase"}, "noise line");
            Line line;
            line.frequency_hz = l.value("frequency_hz", 50.0);
            line.rms = l.value("rms", 0.0);
            const std::string pol = l.value("phase_policy", "random");
            if (pol != "random" && pol != "fixed") throw ConfigError("noise line: phase_policy must be random or fixed");
            line.policy = pol == "random" ? PhasePolicy::kRandom : PhasePolicy::kFixed;
            line.phase = l.value("phase", 0.0);
            p.lines.push_back(line);
        }
        for (const auto &b : j.value("bumps", nlohmann::json::array())) {
            io::check_keys(b, {"center_hz", "fwhm_hz", "power"}, "noise bump");
            p.bumps.push_back({b.value("center_hz", 1.1e6), b.value("fwhm_hz", 1e6), b.value("power", 0.0)});
        }
        for (const auto &c : j.value("filters", nlohmann::json::array())) {
            io::check_keys(c, {"linewidth_hz", "finesse", "fsr_hz"}, "cavity");
            p.filters.push_back({c.value("linewidth_hz", 22e3), c.value("finesse", 1e5), c.value("fsr_hz", 1.93e9)});
        }
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("noise psd: ") + e.what());
    }
    p.validate();
    return p;
}

NoisePsd servo_bump_psd(double power) {
    NoisePsd p;
    p.bumps.push_back({1.1e6, 1.0e6, power});
    return p;
}

}  // namespace iongate::noisekit
