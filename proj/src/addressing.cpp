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


#include "iongate/addressing.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "iongate/io.hpp"
#include "iongate/parallel.hpp"
#include "iongate/rng.hpp"

namespace iongate::addressing {

void AddressingParams::validate() const {
    if (!(omega_c > 0.0) || !std::isfinite(omega_c)) throw ConfigError("addressing: omega_c must be > 0");
    for (double k : k_dot_x)
        if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigError("addressing: k_dot_x must be >= 0");
    if (!(trap_drive > 0.0)) throw ConfigError("addressing: trap_drive must be > 0");
    if (!(rabi_jitter >= 0.0) || rabi_jitter >= 0.5) throw ConfigError("addressing: rabi_jitter must be in [0, 0.5)");
}

MmRabi mm_rabi(double omega_c, double k_dot_x) {
    if (!(k_dot_x >= 0.0)) throw ConfigError("mm_rabi: k_dot_x must be >= 0");
    return {omega_c * std::cyl_bessel_j(1.0, k_dot_x), std::cyl_bessel_j(0.0, k_dot_x)};
}

double mm_rabi_small(double omega_c, double k_dot_x) { return 0.5 * omega_c * k_dot_x; }

double depth_at(double kappa, double z) { return std::abs(kappa * z); }

double carrier_for_sideband(double omega_mm, double k_dot_x) {
    const double j1 = std::cyl_bessel_j(1.0, k_dot_x);
    if (!(j1 > 0.0)) throw ConfigError("carrier_for_sideband: k_dot_x must give J1 > 0");
    return omega_mm / j1;
}

double pi_time(double omega) {
    if (!(omega > 0.0)) throw ConfigError("pi_time: omega must be > 0");
    return kPi / omega;
}

Drive parse_drive(const std::string &s) {
    if (s == "carrier") return Drive::kCarrier;
    if (s == "mm" || s == "sideband" || s == "mm_sideband") return Drive::kSideband;
    throw ConfigError("unknown drive '" + s + "' (carrier|mm)");
}

std::string drive_name(Drive d) { return d == Drive::kCarrier ? "carrier" : "mm"; }

std::array<double, 2> ion_rabi(const AddressingParams &p, Drive d) {
    std::array<double, 2> out{};
    for (int i = 0; i < 2; ++i) {
        const MmRabi m = mm_rabi(p.omega_c, p.k_dot_x[i]);
        out[i] = d == Drive::kCarrier ? p.omega_c * m.carrier_scale : m.omega_mm;
    }
    return out;
}

Populations register_populations(double omega1, double omega2, double t) {
    const double s1 = std::cos(0.5 * omega1 * t), s2 = std::cos(0.5 * omega2 * t);
    const double a = s1 * s1, b = s2 * s2;  // probability each ion is still in S
    return {(1.0 - a) * (1.0 - b), a * (1.0 - b) + (1.0 - a) * b, a * b};
}

FlopTrace simulate_register_flops(const AddressingParams &p, Drive d, double duration, const FlopOptions &opts) {
    p.validate();
    if (!(duration > 0.0)) throw ConfigError("simulate_register_flops: duration must be > 0");
    if (opts.points < 2) throw ConfigError("simulate_register_flops: need at least 2 points");
    if (p.rabi_jitter > 0.0 && opts.shots == 0 && opts.realizations < 1)
        throw ConfigError("simulate_register_flops: realizations must be >= 1");
    const auto w = ion_rabi(p, d);
    FlopTrace tr;
    tr.times.resize(opts.points);
    tr.pops.resize(opts.points);
    for (std::size_t i = 0; i < opts.points; ++i)
        tr.times[i] = duration * static_cast<double>(i) / static_cast<double>(opts.points - 1);

    std::vector<double> scales;
    if (p.rabi_jitter > 0.0 && opts.shots == 0) {
        scales.resize(opts.realizations);
        for (std::size_t r = 0; r < opts.realizations; ++r) {
            Engine eng = derive_engine(opts.seed, {stream::kJitter, r});
            scales[r] = 1.0 + p.rabi_jitter * std::normal_distribution<double>()(eng);
        }
    }

    parallel_for(
        opts.points,
        [&](std::size_t i) {
            const double t = tr.times[i];
            if (opts.shots == 0) {
                if (scales.empty()) {
                    tr.pops[i] = register_populations(w[0], w[1], t);
                    return;
                }
                Populations acc;
                for (double s : scales) {
                    const Populations q = register_populations(s * w[0], s * w[1], t);
                    acc.p0 += q.p0;
                    acc.p1 += q.p1;
                    acc.p2 += q.p2;
                }
                const double n = static_cast<double>(scales.size());
                tr.pops[i] = {acc.p0 / n, acc.p1 / n, acc.p2 / n};
                return;
            }
            Engine eng = derive_engine(opts.seed, {stream::kShots, i});
            std::normal_distribution<double> gauss;
            std::uniform_real_distribution<double> uni;
            std::uint64_t counts[3] = {0, 0, 0};
            for (std::uint64_t k = 0; k < opts.shots; ++k) {
                const double s = p.rabi_jitter > 0.0 ? 1.0 + p.rabi_jitter * gauss(eng) : 1.0;
                int bright = 0;
                for (double wi : w) {
                    const double c = std::cos(0.5 * s * wi * t);
                    if (uni(eng) < c * c) ++bright;
                }
                ++counts[bright];
            }
            const double n = static_cast<double>(opts.shots);
            tr.pops[i] = {counts[0] / n, counts[1] / n, counts[2] / n};
        },
        opts.threads);
    return tr;
}

EnvelopeFit fit_flop_envelope(const FlopTrace &trace, double omega) {
    if (!(omega > 0.0)) throw ConfigError("fit_flop_envelope: omega must be > 0");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        const double t = trace.times[i];
        const double c = std::cos(omega * t);
        if (std::abs(c) < 0.7 || t <= 0.0) continue;
        const Populations &q = trace.pops[i];
        const double r = (q.p1 + 2.0 * q.p2 - 1.0) / c;
        if (!(r > 1e-6)) continue;
        const double t2 = t * t;
        num += t2 * std::log(std::min(r, 1.0));
        den += t2 * t2;
    }
    if (den == 0.0) throw PhysicsError(PhysicsError::Kind::kUnidentifiable, "fit_flop_envelope: no usable points");
    const double slope = num / den;  // -(sigma omega)^2 / 2
    EnvelopeFit f;
    f.sigma = std::sqrt(std::max(0.0, -2.0 * slope)) / omega;
    f.flip_fidelity = 0.5 * (1.0 + std::exp(-0.5 * kPi * kPi * f.sigma * f.sigma));
    return f;
}

CompositeResult composite_pi(double epsilon) {
    if (!(std::abs(epsilon) < 0.5)) throw ConfigError("composite_pi: |epsilon| must be < 0.5");
    const double a = (1.0 + epsilon) * kPi / 2.0;
    const double s = std::sin(a), c = std::cos(a);
    return {s * s, s * s * (1.0 + c * c)};
}

std::array<double, 2> infidelity_slopes(double eps_lo, double eps_hi, std::size_t points) {
    if (!(eps_lo > 0.0 && eps_hi > eps_lo && eps_hi < 0.5) || points < 2)
        throw ConfigError("infidelity_slopes: need 0 < eps_lo < eps_hi < 0.5 and >= 2 points");
    std::vector<double> x(points), yp(points), yc(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double e =
            std::exp(std::log(eps_lo) + (std::log(eps_hi) - std::log(eps_lo)) * i / static_cast<double>(points - 1));
        const CompositeResult r = composite_pi(e);
        x[i] = std::log(e);
        yp[i] = std::log(r.plain_infidelity());
        yc[i] = std::log(r.composite_infidelity());
    }
    std::array<double, 2> out{};
    double mx = 0, mp = 0, mc = 0;
    for (std::size_t i = 0; i < points; ++i) mx += x[i], mp += yp[i], mc += yc[i];
    mx /= points, mp /= points, mc /= points;
    double sxx = 0, sxp = 0, sxc = 0;
    for (std::size_t i = 0; i < points; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxp += (x[i] - mx) * (yp[i] - mp);
        sxc += (x[i] - mx) * (yc[i] - mc);
    }
    out[0] = sxp / sxx;
    out[1] = sxc / sxx;
    return out;
}

std::string trace_to_csv(const FlopTrace &t) {
    io::CsvWriter w({"t", "p0", "p1", "p2"});
    for (std::size_t i = 0; i < t.times.size(); ++i) w.row({t.times[i], t.pops[i].p0, t.pops[i].p1, t.pops[i].p2});
    return w.str();
}

nlohmann::json to_json(const AddressingParams &p) {
    return {{"omega_c", p.omega_c},
            {"k_dot_x", {p.k_dot_x[0], p.k_dot_x[1]}},
            {"trap_drive", p.trap_drive},
            {"rabi_jitter", p.rabi_jitter}};
}

AddressingParams params_from_json(const nlohmann::json &j) {
    io::check_keys(j, {"omega_c", "k_dot_x", "trap_drive", "rabi_jitter"}, "addressing");
    AddressingParams p;
    try {
        p.omega_c = j.value("omega_c", p.omega_c);
        if (j.contains("k_dot_x")) {
            const auto &k = j.at("k_dot_x");
            if (!k.is_array() || k.size() != 2) throw ConfigError("addressing: k_dot_x must be a 2-element array");
            p.k_dot_x = {k[0].get<double>(), k[1].get<double>()};
        }
        p.trap_drive = j.value("trap_drive", p.trap_drive);
        p.rabi_jitter = j.value("rabi_jitter", p.rabi_jitter);
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("addressing: ") + e.what());
    }
    p.validate();
    return p;
}

}  // namespace iongate::addressing
