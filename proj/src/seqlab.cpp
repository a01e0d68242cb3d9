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

#include "iongate/seqlab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "iongate/fitting.hpp"
#include "iongate/io.hpp"
#include "iongate/parallel.hpp"
#include "iongate/qcore.hpp"
#include "iongate/rng.hpp"

namespace iongate::seqlab {

using noisekit::NoisePsd;
using noisekit::NoiseTrajectory;

void ZeemanModel::validate() const {
    if (!(coeff_minus * coeff_plus < 0.0)) throw ConfigError("zeeman: coefficients must have opposite signs");
}

double DDSequence::switch_value(const Segment &s, const ZeemanModel &z) const {
    return s.sign * (s.plus ? z.coeff_plus : z.coeff_minus) / kMuBOverHbar;
}

double DDSequence::switch_integral(const ZeemanModel &z) const {
    double acc = 0.0;
    for (const auto &s : segments) acc += switch_value(s, z) * (s.t1 - s.t0);
    return acc;
}

std::size_t DDSequence::count(Action a) const {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [a](const Event &e) { return e.action == a; }));
}

namespace {

void derive_segments(DDSequence &seq) {
    seq.segments.clear();
    bool plus = false;
    int sign = 1;
    for (std::size_t i = 0; i + 1 < seq.events.size(); ++i) {
        const auto &e = seq.events[i];
        if (e.action == Action::kRfPi) plus = !plus;
        if (e.action == Action::kOpticalPi) sign = -sign;
        const double t0 = e.time;
        const double t1 = seq.events[i + 1].time;
        if (!(t1 > t0)) throw ConfigError("sequence: events must be strictly increasing in time");
        seq.segments.push_back({t0, t1, plus, sign});
    }
}

void check_total(double total) {
    if (!(total > 0.0) || !std::isfinite(total)) throw ConfigError("sequence: total time must be > 0");
}

}  // namespace

DDSequence build_ramsey(double total) {
    check_total(total);
    DDSequence s;
    s.kind = SequenceKind::kRamsey;
    s.total = total;
    s.blocks = 0;
    s.events = {{0.0, Action::kPiHalf, 0.0}, {total, Action::kPiHalf, 0.0}};
    derive_segments(s);
    return s;
}

DDSequence build_mfdd(double total, int blocks) {
    check_total(total);
    if (blocks < 1) throw ConfigError("mfdd: blocks must be >= 1");
    DDSequence s;
    s.kind = SequenceKind::kMfdd;
    s.total = total;
    s.blocks = blocks;
    const double tn = total / blocks;
    s.events.push_back({0.0, Action::kPiHalf, 0.0});
    for (int j = 0; j < blocks; ++j) {
        const double mid = (j + 0.5) * tn;
        s.events.push_back({mid - 0.1 * tn, Action::kRfPi, 0.0});
        s.events.push_back({mid + 0.1 * tn, Action::kRfPi, 0.0});
    }
    s.events.push_back({total, Action::kPiHalf, 0.0});
    derive_segments(s);
    return s;
}

DDSequence hahn_echo(double total) {
    check_total(total);
    DDSequence s;
    s.kind = SequenceKind::kEcho;
    s.total = total;
    s.blocks = 1;
    s.events = {{0.0, Action::kPiHalf, 0.0}, {0.5 * total, Action::kOpticalPi, 0.0}, {total, Action::kPiHalf, 0.0}};
    derive_segments(s);
    return s;
}

DDSequence build_sequence(SequenceKind kind, double total, int blocks) {
    switch (kind) {
        case SequenceKind::kRamsey: return build_ramsey(total);
        case SequenceKind::kMfdd: return build_mfdd(total, blocks);
        case SequenceKind::kEcho: return hahn_echo(total);
    }
    throw ConfigError("unknown sequence kind");
}

std::string kind_name(SequenceKind k) {
    switch (k) {
        case SequenceKind::kRamsey: return "ramsey";
        case SequenceKind::kMfdd: return "mfdd";
        case SequenceKind::kEcho: return "echo";
    }
    return "?";
}

SequenceKind parse_kind(const std::string &s) {
    if (s == "ramsey") return SequenceKind::kRamsey;
    if (s == "mfdd") return SequenceKind::kMfdd;
    if (s == "echo") return SequenceKind::kEcho;
    throw ConfigError("unknown sequence '" + s + "' (expected ramsey, mfdd or echo)");
}

namespace {

// Exact integral of a sample-and-hold trajectory.
class Integrator {
public:
    Integrator() = default;
    explicit Integrator(const NoiseTrajectory &tr) : dt_(tr.dt), s_(&tr.samples) {
        cum_.assign(tr.samples.size() + 1, 0.0);
        for (std::size_t k = 0; k < tr.samples.size(); ++k) cum_[k + 1] = cum_[k] + tr.samples[k] * dt_;
    }

    double at(double t) const {
        if (!s_ || s_->empty()) return 0.0;
        std::size_t k = static_cast<std::size_t>(std::max(0.0, t / dt_));
        if (k >= s_->size()) k = s_->size() - 1;
        return cum_[k] + (*s_)[k] * (t - double(k) * dt_);
    }

    double between(double a, double b) const { return at(b) - at(a); }

private:
    double dt_ = 0.0;
    const std::vector<double> *s_ = nullptr;
    std::vector<double> cum_;
};

double choose_dt(const DDSequence &seq, const NoisePsd &laser, const NoisePsd &field, double requested) {
    if (requested > 0.0) return requested;
    double dt = std::min(noisekit::auto_dt(laser, seq.total), noisekit::auto_dt(field, seq.total));
    if (seq.blocks > 0) dt = std::min(dt, seq.total / (50.0 * seq.blocks));
    return dt;
}

using State = std::array<cplx, 3>;  // S(m=-1/2), S(m=+1/2), D
constexpr int kSm = 0, kSp = 1, kD = 2;

void rotate(State &c, int a, int b, double angle, double phase) {
    const Eigen::Matrix2cd r = qcore::rotation_matrix(angle, phase);
    const cplx x = c[a], y = c[b];
    c[a] = r(0, 0) * x + r(0, 1) * y;
    c[b] = r(1, 0) * x + r(1, 1) * y;
}

}  // namespace

double magnetic_phase(const DDSequence &seq, const NoiseTrajectory &field, const ZeemanModel &z) {
    const Integrator in(field);
    double acc = 0.0;
    for (const auto &s : seq.segments) acc += seq.switch_value(s, z) * kMuBOverHbar * in.between(s.t0, s.t1);
    return acc;
}

CoherenceResult simulate_coherence(const DDSequence &seq, const NoisePsd &laser, const NoisePsd &field,
                                   const CoherenceOptions &opts) {
    opts.zeeman.validate();
    if (opts.realizations < 1) throw ConfigError("coherence: realizations must be >= 1");
    if (opts.phase_points < 3) throw ConfigError("coherence: need >= 3 analysis phases");
    if (seq.events.size() < 2 || seq.events.front().action != Action::kPiHalf ||
        seq.events.back().action != Action::kPiHalf)
        throw ConfigError("coherence: sequence must start and end with a pi/2 pulse");
    const double dt = choose_dt(seq, laser, field, opts.dt);
    const bool laser_on = !laser.is_zero();
    const bool field_on = !field.is_zero();
    const std::size_t np = opts.phase_points;

    CoherenceResult res;
    for (std::size_t j = 0; j < np; ++j) res.phases.push_back(kTwoPi * double(j) / double(np));

    std::vector<double> table(opts.realizations * np);
    parallel_for(
        opts.realizations,
        [&](std::size_t r) {
            NoiseTrajectory lt, ft;
            Integrator li, fi;
            if (laser_on) {
                lt = noisekit::synthesize(laser, seq.total, dt, derive_seed(opts.seed, {stream::kLaser, r}));
                li = Integrator(lt);
            }
            if (field_on) {
                ft = noisekit::synthesize(field, seq.total, dt, derive_seed(opts.seed, {stream::kField, r}));
                fi = Integrator(ft);
            }
            State c{cplx(1.0), cplx(0.0), cplx(0.0)};
            const auto &ev = seq.events;
            for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
                switch (ev[i].action) {
                    case Action::kPiHalf: rotate(c, kSm, kD, 0.5 * kPi * (1 + opts.optical_error), ev[i].phase); break;
                    case Action::kOpticalPi: rotate(c, kSm, kD, kPi * (1 + opts.optical_error), ev[i].phase); break;
                    case Action::kRfPi: rotate(c, kSm, kSp, kPi * (1 + opts.rf_error), ev[i].phase); break;
                }
                const double a = ev[i].time, b = ev[i + 1].time;
                const double pl = laser_on ? li.between(a, b) : 0.0;
                const double pb = field_on ? fi.between(a, b) : 0.0;
                c[kSm] *= std::polar(1.0, pl + opts.zeeman.coeff_minus * pb);
                c[kSp] *= std::polar(1.0, pl + opts.zeeman.coeff_plus * pb);
            }
            for (std::size_t j = 0; j < np; ++j) {
                State f = c;
                rotate(f, kSm, kD, 0.5 * kPi * (1 + opts.optical_error), ev.back().phase + res.phases[j]);
                table[r * np + j] = std::norm(f[kD]);
            }
        },
        opts.threads);

    res.excitation.assign(np, 0.0);
    std::vector<cplx> z(opts.realizations);
    cplx zmean = 0.0;
    for (std::size_t r = 0; r < opts.realizations; ++r) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < np; ++j) {
            res.excitation[j] += table[r * np + j];
            acc += table[r * np + j] * std::polar(1.0, -res.phases[j]);
        }
        z[r] = 2.0 * acc / double(np);
        zmean += z[r];
    }
    for (auto &e : res.excitation) e /= double(opts.realizations);
    zmean /= double(opts.realizations);

    if (opts.shots > 0) {
        for (std::size_t j = 0; j < np; ++j) {
            auto eng = derive_engine(opts.seed, {stream::kShots, j});
            std::binomial_distribution<std::uint64_t> b(opts.shots, std::clamp(res.excitation[j], 0.0, 1.0));
            res.excitation[j] = double(b(eng)) / double(opts.shots);
        }
    }
    const auto fit = fitting::fit_sinusoid(res.phases, res.excitation);
    res.contrast = 2.0 * fit.amplitude;
    res.fringe_phase = fit.phase;

    if (opts.realizations > 1) {
        const cplx dir = std::abs(zmean) > 0.0 ? zmean / std::abs(zmean) : cplx(1.0);
        double m = 0.0, v = 0.0;
        for (const auto &zz : z) m += (zz / dir).real();
        m /= double(opts.realizations);
        for (const auto &zz : z) v += std::pow((zz / dir).real() - m, 2);
        v /= double(opts.realizations - 1);
        double se = 2.0 * std::sqrt(v / double(opts.realizations));
        if (opts.shots > 0) se = std::hypot(se, std::sqrt(2.0 / double(np * opts.shots)));
        res.contrast_stderr = se;
    }
    return res;
}

ContrastCurve scan_contrast(SequenceKind kind, int blocks, const std::vector<double> &times, const NoisePsd &laser,
                            const NoisePsd &field, const CoherenceOptions &opts) {
    ContrastCurve c;
    for (double t : times) {
        const auto r = simulate_coherence(build_sequence(kind, t, blocks), laser, field, opts);
        c.times.push_back(t);
        c.contrast.push_back(r.contrast);
        c.stderr_.push_back(r.contrast_stderr);
    }
    return c;
}

namespace {

NoisePsd scaled(const NoisePsd &p, double s) {
    NoisePsd q = p;
    q.quasi_static_rms *= s;
    q.white_level *= s * s;
    q.flicker_level *= s * s;
    for (auto &l : q.lines) l.rms *= s;
    for (auto &b : q.bumps) b.power *= s * s;
    return q;
}

}  // namespace

double tune_field_noise(NoisePsd &field, const DDSequence &seq, const NoisePsd &laser, double target,
                        const CoherenceOptions &opts) {
    if (!(target > 0.0 && target < 1.0)) throw ConfigError("tune_field_noise: target must be in (0, 1)");
    if (field.is_zero()) throw ConfigError("tune_field_noise: field spectrum is zero");
    auto contrast = [&](double logs) { return simulate_coherence(seq, laser, scaled(field, std::exp(logs)), opts).contrast; };
    double lo = std::log(1e-4), hi = std::log(1e4);
    if (contrast(lo) < target || contrast(hi) > target)
        throw PhysicsError(PhysicsError::Kind::kNonConvergence, "tune_field_noise: target contrast not bracketed");
    for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (contrast(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    const double s = std::exp(0.5 * (lo + hi));
    field = scaled(field, s);
    return s;
}

ContrastModel parse_model(const std::string &s) {
    if (s == "exponential") return ContrastModel::kExponential;
    if (s == "gaussian") return ContrastModel::kGaussian;
    if (s == "bessel") return ContrastModel::kBessel;
    throw ConfigError("unknown contrast model '" + s + "' (expected exponential, gaussian or bessel)");
}

std::string model_name(ContrastModel m) {
    switch (m) {
        case ContrastModel::kExponential: return "exponential";
        case ContrastModel::kGaussian: return "gaussian";
        case ContrastModel::kBessel: return "bessel";
    }
    return "?";
}

namespace {

double bessel_shape(double b, double f, double t) {
    const double arg = std::abs(f) > 0.0 ? 2.0 * b * std::sin(kPi * f * t) / (kTwoPi * f) : b * t;
    return std::abs(std::cyl_bessel_j(0.0, std::abs(arg)));
}

double eval(ContrastModel m, const Eigen::VectorXd &p, double t) {
    switch (m) {
        case ContrastModel::kExponential: return p(0) * std::exp(-t / p(1));
        case ContrastModel::kGaussian: return p(0) * std::exp(-(t / p(1)) * (t / p(1)));
        case ContrastModel::kBessel: return p(0) * bessel_shape(p(1), p(2), t);
    }
    return 0.0;
}

double sse(ContrastModel m, const Eigen::VectorXd &p, const ContrastCurve &c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < c.times.size(); ++i) acc += std::pow(eval(m, p, c.times[i]) - c.contrast[i], 2);
    return acc;
}

std::vector<double> logspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a * std::pow(b / a, double(i) / (n - 1));
    return v;
}

}  // namespace

double model_value(const ContrastFit &f, double t) {
    Eigen::VectorXd p;
    if (f.model == ContrastModel::kBessel)
        p = Eigen::Vector3d(f.c0, f.amplitude, f.frequency_hz);
    else
        p = Eigen::Vector2d(f.c0, f.tau);
    return eval(f.model, p, t);
}

ContrastFit fit_contrast(const ContrastCurve &curve, ContrastModel model) {
    const std::size_t n = curve.times.size();
    if (n < 6 || curve.contrast.size() != n) throw ConfigError("fit_contrast: need >= 6 matching points");
    const double cmax = *std::max_element(curve.contrast.begin(), curve.contrast.end());
    const double tmax = *std::max_element(curve.times.begin(), curve.times.end());
    if (!(tmax > 0.0)) throw ConfigError("fit_contrast: times must span a positive range");

    // Coarse grid for the starting point, then Levenberg-Marquardt.
    Eigen::VectorXd best;
    double best_sse = std::numeric_limits<double>::infinity();
    if (model == ContrastModel::kBessel) {
        for (double f : logspace(0.2 / tmax, 400.0 / tmax, 240))
            for (double b : logspace(0.05 / tmax, 200.0 / tmax, 120)) {
                const Eigen::VectorXd p = Eigen::Vector3d(cmax, b, f);
                const double s = sse(model, p, curve);
                if (s < best_sse) best_sse = s, best = p;
            }
    } else {
        for (double tau : logspace(0.01 * tmax, 100.0 * tmax, 400)) {
            const Eigen::VectorXd p = Eigen::Vector2d(cmax, tau);
            const double s = sse(model, p, curve);
            if (s < best_sse) best_sse = s, best = p;
        }
    }

    const fitting::ResidualFn fn = [&](const Eigen::VectorXd &p) {
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i) r(i) = eval(model, p, curve.times[i]) - curve.contrast[i];
        return r;
    };
    const auto lsq = fitting::least_squares(fn, best, static_cast<int>(n), curve.contrast);
    if (!lsq.converged || !lsq.params.allFinite()) {
        std::ostringstream os;
        os << "fit_contrast(" << model_name(model) << "): no convergence, residual norm " << lsq.residual_norm;
        throw PhysicsError(PhysicsError::Kind::kNonConvergence, os.str());
    }

    ContrastFit f;
    f.model = model;
    f.c0 = lsq.params(0);
    f.r_squared = lsq.r_squared;
    f.residual_norm = lsq.residual_norm;
    if (model == ContrastModel::kBessel) {
        f.amplitude = std::abs(lsq.params(1));
        f.frequency_hz = std::abs(lsq.params(2));
        return f;
    }
    f.tau = std::abs(lsq.params(1));
    if (model == ContrastModel::kExponential) {
        f.linewidth_hz = 1.0 / (kPi * f.tau);
        if (f.c0 > 0.5) f.half_time = f.tau * std::log(2.0 * f.c0);
    } else {
        const double sigma_nu = std::sqrt(2.0) / (kTwoPi * f.tau);
        f.linewidth_hz = std::sqrt(8.0 * std::log(2.0)) * sigma_nu;
        if (f.c0 > 0.5) f.half_time = f.tau * std::sqrt(std::log(2.0 * f.c0));
    }
    return f;
}

nlohmann::json to_json(const DDSequence &seq) {
    nlohmann::json j;
    j["kind"] = kind_name(seq.kind);
    j["total_s"] = seq.total;
    j["blocks"] = seq.blocks;
    j["events"] = nlohmann::json::array();
    for (const auto &e : seq.events) {
        const char *a = e.action == Action::kPiHalf ? "pi_half" : (e.action == Action::kRfPi ? "rf_pi_flip" : "optical_pi");
        j["events"].push_back({{"time_s", e.time}, {"action", a}, {"phase", e.phase}});
    }
    return j;
}

nlohmann::json to_json(const ContrastFit &fit) {
    nlohmann::json j{{"model", model_name(fit.model)},
                     {"c0", fit.c0},
                     {"r_squared", fit.r_squared},
                     {"residual_norm", fit.residual_norm}};
    if (fit.model == ContrastModel::kBessel) {
        j["b_rad_per_s"] = fit.amplitude;
        j["frequency_hz"] = fit.frequency_hz;
    } else {
        j["tau_s"] = fit.tau;
        j["linewidth_hz"] = fit.linewidth_hz;
        j["half_contrast_time_s"] = fit.half_time;
    }
    return j;
}

std::string curve_to_csv(const ContrastCurve &c) {
    io::CsvWriter w({"time", "contrast", "stderr"});
    for (std::size_t i = 0; i < c.times.size(); ++i)
        w.row({c.times[i], c.contrast[i], i < c.stderr_.size() ? c.stderr_[i] : 0.0});
    return w.str();
}

}  // namespace iongate::seqlab
