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

#include "iongate/msgate.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "iongate/io.hpp"
#include "iongate/parallel.hpp"
#include "iongate/rng.hpp"

namespace iongate::msgate {

std::pair<cplx, double> alpha_theta(const GateParams &params, double t) {
    const double g = params.eta * params.omega;
    const double x = params.delta * t;
    // (e^{ix} - 1)/x and (1 - sinc x)/x, both regular at x = 0.
    cplx f;
    double h;
    if (std::abs(x) < 1e-4) {
        f = cplx(-x / 2.0, 1.0 - x * x / 6.0);
        h = x / 6.0 - x * x * x / 120.0;
    } else {
        const double s = std::sin(0.5 * x);
        f = cplx(-2.0 * s * s / x, std::sin(x) / x);
        h = (1.0 - std::sin(x) / x) / x;
    }
    return {g * t * f, 0.5 * g * g * t * t * h};
}

Populations analytic_populations(const GateParams &params, double t) {
    if (params.delta_asym != 0.0)
        throw ConfigError("analytic_populations: requires delta_asym = 0; use the numerical propagator");
    if (params.initial_n != 0) throw ConfigError("analytic_populations: requires initial_n = 0");
    const auto [alpha, theta] = alpha_theta(params, t);
    const double a2 = std::norm(alpha);
    const double lead = (3.0 + std::exp(-2.0 * a2) - 4.0 * std::exp(-0.5 * a2)) / 8.0;
    const double coh = std::exp(-0.5 * a2);
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    return {lead + s * s * coh, 0.25 * (1.0 - std::exp(-2.0 * a2)), lead + c * c * coh};
}

MSAnalyticPoint analytic_point(const GateParams &params, double t) {
    const auto [alpha, theta] = alpha_theta(params, t);
    return {alpha, theta, analytic_populations(params, t)};
}

GatePoint gate_point(double omega, double eta) {
    if (!(omega > 0.0) || !(eta > 0.0)) throw ConfigError("gate_point: omega and eta must be > 0");
    const double delta = 2.0 * eta * omega;
    return {delta, kTwoPi / delta};
}

double omega_for_gate_detuning(double delta, double eta) { return std::abs(delta) / (2.0 * eta); }

std::string axis_name(Axis a) {
    switch (a) {
        case Axis::kTime: return "time";
        case Axis::kDelta: return "delta";
        case Axis::kDeltaAsym: return "delta_asym";
    }
    return "?";
}

Axis parse_axis(const std::string &name) {
    if (name == "time") return Axis::kTime;
    if (name == "delta") return Axis::kDelta;
    if (name == "delta_asym") return Axis::kDeltaAsym;
    throw ConfigError("unknown axis '" + name + "' (expected time, delta or delta_asym)");
}

namespace {

bool monotone(const std::vector<double> &g) {
    if (g.size() < 2) return true;
    const bool inc = g[1] > g[0];
    for (std::size_t i = 1; i < g.size(); ++i)
        if (inc ? !(g[i] > g[i - 1]) : !(g[i] < g[i - 1])) return false;
    return true;
}

void check_axes(Axis a1, const std::vector<double> &g1, Axis a2, const std::vector<double> &g2) {
    if (a1 == a2) throw ConfigError("scan: axes must be distinct");
    if (g1.empty() || g2.empty()) throw ConfigError("scan: empty grid");
    if (!monotone(g1) || !monotone(g2)) throw ConfigError("scan: grids must be strictly monotone");
    for (Axis a : {a1, a2})
        if (a == Axis::kTime)
            for (double t : (a == a1 ? g1 : g2))
                if (t < 0.0) throw ConfigError("scan: times must be >= 0");
}

void set_axis(GateParams &p, double &t, Axis a, double v) {
    switch (a) {
        case Axis::kTime: t = v; break;
        case Axis::kDelta: p.delta = hz_to_angular(v); break;
        case Axis::kDeltaAsym: p.delta_asym = hz_to_angular(v); break;
    }
}

std::string cell_label(const PopulationMap &m, std::size_t i, std::size_t j) {
    std::ostringstream os;
    os << "cell (" << i << ", " << j << ") [" << axis_name(m.axis1) << "=" << m.grid1[i] << ", "
       << axis_name(m.axis2) << "=" << m.grid2[j] << "]";
    return os.str();
}

PopulationMap empty_map(Axis a1, const std::vector<double> &g1, Axis a2, const std::vector<double> &g2,
                        const ScanOptions &opts) {
    PopulationMap m;
    m.axis1 = a1;
    m.axis2 = a2;
    m.grid1 = g1;
    m.grid2 = g2;
    const std::size_t n = g1.size() * g2.size();
    m.p0.assign(n, 0.0);
    m.p1.assign(n, 0.0);
    m.p2.assign(n, 0.0);
    m.shots = opts.shots;
    if (opts.shots) m.seed = opts.seed;
    return m;
}

double default_time(const GateParams &params, const ScanOptions &opts) {
    if (opts.fixed_time) return *opts.fixed_time;
    if (params.delta == 0.0) throw ConfigError("scan: fixed_time required when params.delta = 0");
    return kTwoPi / std::abs(params.delta);
}

void apply_shots(PopulationMap &m, const ScanOptions &opts) {
    if (!opts.shots) return;
    const double n = double(*opts.shots);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            auto eng = derive_engine(opts.seed, {stream::kShots, i, j});
            const auto c = sample_trinomial(m.cell(i, j), *opts.shots, eng);
            const std::size_t k = m.at(i, j);
            m.p0[k] = double(c[0]) / n;
            m.p1[k] = double(c[1]) / n;
            m.p2[k] = double(c[2]) / n;
        }
    }
}

}  // namespace

PopulationMap scan_map(const GateParams &params, Axis axis1, const std::vector<double> &grid1, Axis axis2,
                       const std::vector<double> &grid2, const ScanOptions &opts) {
    check_axes(axis1, grid1, axis2, grid2);
    PopulationMap m = empty_map(axis1, grid1, axis2, grid2, opts);
    const qcore::RegisterState psi0 =
        qcore::RegisterState::basis(qcore::Qubit::kS, qcore::Qubit::kS, params.initial_n, params.n_max);

    auto store = [&m](std::size_t i, std::size_t j, const Populations &p) {
        const std::size_t k = m.at(i, j);
        m.p0[k] = p.p0;
        m.p1[k] = p.p1;
        m.p2[k] = p.p2;
    };

    const bool time_major = axis1 == Axis::kTime;
    const bool time_minor = axis2 == Axis::kTime;
    if (time_major || time_minor) {
        // One integration per line of the non-time axis.
        const auto &tgrid = time_major ? grid1 : grid2;
        const auto &ogrid = time_major ? grid2 : grid1;
        const Axis oaxis = time_major ? axis2 : axis1;
        std::vector<std::size_t> order(tgrid.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return tgrid[a] < tgrid[b]; });
        std::vector<double> sorted_t;
        for (auto k : order) sorted_t.push_back(tgrid[k]);

        parallel_for(
            ogrid.size(),
            [&](std::size_t o) {
                GateParams p = params;
                double unused = 0.0;
                set_axis(p, unused, oaxis, ogrid[o]);
                try {
                    const auto states = qcore::propagate_to_times(psi0, p, 0.0, sorted_t, opts.propagate);
                    for (std::size_t s = 0; s < order.size(); ++s) {
                        const std::size_t ti = order[s];
                        const auto pop = qcore::measure_populations(states[s]);
                        if (time_major)
                            store(ti, o, pop);
                        else
                            store(o, ti, pop);
                    }
                } catch (const PhysicsError &e) {
                    std::ostringstream os;
                    os << "line " << o << " [" << axis_name(oaxis) << "=" << ogrid[o] << "]: " << e.what();
                    throw PhysicsError(e.kind(), os.str());
                }
            },
            opts.threads);
    } else {
        const double fixed_t = default_time(params, opts);
        const std::size_t n = grid1.size() * grid2.size();
        parallel_for(
            n,
            [&](std::size_t k) {
                const std::size_t i = k / grid2.size();
                const std::size_t j = k % grid2.size();
                GateParams p = params;
                double t = 0.0;
                set_axis(p, t, axis1, grid1[i]);
                set_axis(p, t, axis2, grid2[j]);
                t = fixed_t;
                try {
                    store(i, j, qcore::measure_populations(qcore::propagate(psi0, p, 0.0, t, opts.propagate)));
                } catch (const PhysicsError &e) {
                    throw PhysicsError(e.kind(), cell_label(m, i, j) + ": " + e.what());
                }
            },
            opts.threads);
    }
    apply_shots(m, opts);
    return m;
}

PopulationMap analytic_map(const GateParams &params, Axis axis1, const std::vector<double> &grid1, Axis axis2,
                           const std::vector<double> &grid2, const ScanOptions &opts) {
    check_axes(axis1, grid1, axis2, grid2);
    if (axis1 == Axis::kDeltaAsym || axis2 == Axis::kDeltaAsym)
        throw ConfigError("analytic_map: delta_asym axes need the numerical propagator");
    PopulationMap m = empty_map(axis1, grid1, axis2, grid2, opts);
    const bool has_time = axis1 == Axis::kTime || axis2 == Axis::kTime;
    const double fixed_t = has_time ? 0.0 : default_time(params, opts);
    for (std::size_t i = 0; i < grid1.size(); ++i) {
        for (std::size_t j = 0; j < grid2.size(); ++j) {
            GateParams p = params;
            double t = fixed_t;
            set_axis(p, t, axis1, grid1[i]);
            set_axis(p, t, axis2, grid2[j]);
            const auto pop = analytic_populations(p, t);
            const std::size_t k = m.at(i, j);
            m.p0[k] = pop.p0;
            m.p1[k] = pop.p1;
            m.p2[k] = pop.p2;
        }
    }
    apply_shots(m, opts);
    return m;
}

Registration register_maps(const PopulationMap &measured, const PopulationMap &calculated, Axis axis) {
    if (axis == Axis::kTime) throw ConfigError("register_maps: axis must be a frequency axis");
    if (measured.axis1 != calculated.axis1 || measured.axis2 != calculated.axis2 ||
        measured.grid1 != calculated.grid1 || measured.grid2 != calculated.grid2)
        throw ConfigError("register_maps: maps must share axes and grids");
    const bool along_rows = measured.axis1 == axis;
    if (!along_rows && measured.axis2 != axis) throw ConfigError("register_maps: axis not present in maps");

    const auto &g = along_rows ? measured.grid1 : measured.grid2;
    const std::size_t n = g.size();
    const std::size_t m_other = along_rows ? measured.cols() : measured.rows();
    if (n < 3) throw ConfigError("register_maps: need at least 3 points along the registration axis");
    const double step = g[1] - g[0];
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs((g[i] - g[i - 1]) - step) > 1e-6 * std::abs(step))
            throw ConfigError("register_maps: registration axis must be uniformly spaced");

    auto cell = [&](const PopulationMap &mp, std::size_t along, std::size_t other) {
        return along_rows ? mp.at(along, other) : mp.at(other, along);
    };
    const long smax = static_cast<long>((n - 1) / 2);
    auto cost = [&](long s) {
        double acc = 0.0;
        std::size_t cnt = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const long src = static_cast<long>(j) - s;
            if (src < 0 || src >= static_cast<long>(n)) continue;
            for (std::size_t o = 0; o < m_other; ++o) {
                const std::size_t km = cell(measured, j, o);
                const std::size_t kc = cell(calculated, static_cast<std::size_t>(src), o);
                const double d0 = measured.p0[km] - calculated.p0[kc];
                const double d1 = measured.p1[km] - calculated.p1[kc];
                const double d2 = measured.p2[km] - calculated.p2[kc];
                acc += d0 * d0 + d1 * d1 + d2 * d2;
                ++cnt;
            }
        }
        if (cnt == 0) throw ConfigError("register_maps: no overlap after shift");
        return acc / double(cnt);
    };

    std::vector<double> costs;
    for (long s = -smax; s <= smax; ++s) costs.push_back(cost(s));
    const auto best_it = std::min_element(costs.begin(), costs.end());
    const long best = static_cast<long>(best_it - costs.begin()) - smax;
    const double c0 = *best_it;

    Registration r;
    r.grid_shift = best;
    r.cost = c0;
    double frac = 0.0;
    if (best > -smax && best < smax) {
        const double cm = costs[static_cast<std::size_t>(best - 1 + smax)];
        const double cp = costs[static_cast<std::size_t>(best + 1 + smax)];
        // An exact match at an integer shift needs no refinement.
        const bool exact = c0 <= 1e-12 * std::max(cm, cp);
        const double curv = cm - 2.0 * c0 + cp;
        if (!exact && curv > 0.0) frac = std::clamp(0.5 * (cm - cp) / curv, -0.5, 0.5);
    }
    r.offset_hz = (double(best) + frac) * step;
    return r;
}

double parity_expectation(const qcore::SpinDensity &rho, double phase) {
    const Eigen::Matrix2cd r = qcore::rotation_matrix(kPi / 2.0, phase);
    Eigen::Matrix4cd u;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d) u(a * 2 + b, c * 2 + d) = r(a, c) * r(b, d);
    const Eigen::Matrix4cd out = u * rho * u.adjoint();
    return out(0, 0).real() + out(3, 3).real() - out(1, 1).real() - out(2, 2).real();
}

namespace {

Populations rotated_populations(const qcore::SpinDensity &rho, double phase) {
    const Eigen::Matrix2cd r = qcore::rotation_matrix(kPi / 2.0, phase);
    Eigen::Matrix4cd u;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d) u(a * 2 + b, c * 2 + d) = r(a, c) * r(b, d);
    return qcore::populations_of(u * rho * u.adjoint());
}

}  // namespace

ParityData parity_scan(const qcore::SpinDensity &rho, const std::vector<double> &phases,
                       const ParityScanOptions &opts) {
    ParityData d;
    d.phases = phases;
    d.shots_per_phase = opts.shots;
    d.seed = opts.seed;
    d.parity.reserve(phases.size());
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const Populations p = rotated_populations(rho, phases[i]);
        if (opts.shots == 0) {
            d.parity.push_back(p.parity());
        } else {
            auto eng = derive_engine(opts.seed, {stream::kShots, i});
            const auto c = sample_trinomial(p, opts.shots, eng);
            d.parity.push_back((double(c[0]) + double(c[2]) - double(c[1])) / double(opts.shots));
        }
    }
    const double even = std::clamp(rho(0, 0).real() + rho(3, 3).real(), 0.0, 1.0);
    if (opts.shots == 0) {
        d.even_population = even;
        d.population_shots = 0;
    } else {
        d.population_shots = opts.population_shots ? opts.population_shots : opts.shots * phases.size();
        auto eng = derive_engine(opts.seed, {stream::kPopulation});
        std::binomial_distribution<std::uint64_t> b(d.population_shots, even);
        d.even_population = double(b(eng)) / double(d.population_shots);
    }
    return d;
}

ParityData parity_scan(const qcore::RegisterState &state, const std::vector<double> &phases,
                       const ParityScanOptions &opts) {
    return parity_scan(qcore::reduce_spin_density(state), phases, opts);
}

namespace {

constexpr double kNegHuge = -1e300;

struct ParityLikelihood {
    std::vector<double> s, c, y, w;

    double value(double a, double b) const {
        double l = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double p = 0.5 * (1.0 + a * s[i] + b * c[i]);
            if (y[i] > 0.0) {
                if (p <= 0.0) return kNegHuge;
                l += w[i] * y[i] * std::log(p);
            }
            if (y[i] < 1.0) {
                if (p >= 1.0) return kNegHuge;
                l += w[i] * (1.0 - y[i]) * std::log1p(-p);
            }
        }
        return l;
    }

    // Gradient and Hessian with respect to (a, b).
    void derivs(double a, double b, Eigen::Vector2d &g, Eigen::Matrix2d &h) const {
        g.setZero();
        h.setZero();
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double p = 0.5 * (1.0 + a * s[i] + b * c[i]);
            const Eigen::Vector2d x(0.5 * s[i], 0.5 * c[i]);
            const double d1 = (y[i] > 0 ? y[i] / p : 0.0) - (y[i] < 1 ? (1 - y[i]) / (1 - p) : 0.0);
            const double d2 = (y[i] > 0 ? y[i] / (p * p) : 0.0) + (y[i] < 1 ? (1 - y[i]) / ((1 - p) * (1 - p)) : 0.0);
            g += w[i] * d1 * x;
            h -= w[i] * d2 * x * x.transpose();
        }
    }

    // max over the phase at fixed amplitude; returns (value, psi)
    std::pair<double, double> profile(double amp, double psi_hint) const {
        if (amp == 0.0) return {value(0.0, 0.0), psi_hint};
        constexpr int kGrid = 72;
        double best = kNegHuge;
        double best_psi = psi_hint;
        for (int k = 0; k < kGrid; ++k) {
            const double psi = psi_hint + kTwoPi * k / kGrid;
            const double v = value(amp * std::cos(psi), amp * std::sin(psi));
            if (v > best) {
                best = v;
                best_psi = psi;
            }
        }
        const double width = kTwoPi / kGrid;
        const auto r = boost::math::tools::brent_find_minima(
            [&](double psi) { return -value(amp * std::cos(psi), amp * std::sin(psi)); }, best_psi - width,
            best_psi + width, 40);
        if (-r.second > best) return {-r.second, r.first};
        return {best, best_psi};
    }
};

}  // namespace

ParityFit ml_fit_parity(const ParityData &data) {
    const std::size_t n = data.phases.size();
    if (data.parity.size() != n) throw ConfigError("ml_fit_parity: phases/parity size mismatch");
    std::vector<double> reduced;
    for (double ph : data.phases) {
        double r = std::fmod(ph, kPi);
        if (r < 0) r += kPi;
        reduced.push_back(r);
    }
    std::sort(reduced.begin(), reduced.end());
    std::size_t distinct = reduced.empty() ? 0 : 1;
    for (std::size_t i = 1; i < reduced.size(); ++i)
        if (reduced[i] - reduced[i - 1] > 1e-9) ++distinct;
    if (distinct > 1 && kPi - reduced.back() + reduced.front() <= 1e-9) --distinct;
    if (distinct < 2)
        throw PhysicsError(PhysicsError::Kind::kUnidentifiable, "ml_fit_parity: all phases equivalent; fit unidentifiable");
    if (distinct < 5) throw ConfigError("ml_fit_parity: need at least 5 distinct phases");

    ParityLikelihood L;
    const double w = data.shots_per_phase ? double(data.shots_per_phase) : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        L.s.push_back(std::sin(2.0 * data.phases[i]));
        L.c.push_back(std::cos(2.0 * data.phases[i]));
        L.y.push_back(std::clamp(0.5 * (1.0 + data.parity[i]), 0.0, 1.0));
        L.w.push_back(w);
    }

    // Least-squares start, pulled inside the unit disk.
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd yv(n);
    for (std::size_t i = 0; i < n; ++i) {
        X(i, 0) = L.s[i];
        X(i, 1) = L.c[i];
        yv(i) = data.parity[i];
    }
    Eigen::Vector2d ab = X.colPivHouseholderQr().solve(yv);
    if (ab.norm() > 0.9) ab *= 0.9 / ab.norm();

    // Damped Newton on the concave log-likelihood inside the unit disk.
    double lval = L.value(ab(0), ab(1));
    bool interior = true;
    for (int it = 0; it < 200; ++it) {
        Eigen::Vector2d g;
        Eigen::Matrix2d h;
        L.derivs(ab(0), ab(1), g, h);
        const Eigen::Vector2d step = -h.ldlt().solve(g);
        if (!step.allFinite()) break;
        double tstep = 1.0;
        bool moved = false;
        for (int k = 0; k < 60; ++k, tstep *= 0.5) {
            const Eigen::Vector2d cand = ab + tstep * step;
            if (cand.norm() >= 1.0) continue;
            const double lc = L.value(cand(0), cand(1));
            if (lc >= lval) {
                moved = (cand - ab).norm() > 0.0;
                ab = cand;
                lval = lc;
                break;
            }
        }
        if (!moved || (tstep * step).norm() < 1e-14) break;
    }
    {
        Eigen::Vector2d g;
        Eigen::Matrix2d h;
        L.derivs(ab(0), ab(1), g, h);
        // Interior stationary point unless we are pressed against the rim.
        if (ab.norm() > 1.0 - 1e-7 || g.norm() > 1e-6 * std::max(1.0, w * double(n))) interior = false;
    }

    double amp = ab.norm();
    double psi = std::atan2(ab(1), ab(0));
    if (!interior) {
        const auto [v, p] = L.profile(1.0, psi);
        if (v >= lval) {
            amp = 1.0;
            psi = p;
            lval = v;
        }
    }

    ParityFit fit;
    fit.amplitude = amp;
    // A sin(2 phi + phi0) = a sin 2phi + b cos 2phi with a = A cos phi0, b = A sin phi0.
    fit.phase = std::remainder(psi, kTwoPi);
    fit.log_likelihood = lval;
    const double even = data.even_population;
    fit.fidelity = std::clamp(0.5 * even + 0.5 * amp, 0.0, 1.0);

    if (data.shots_per_phase == 0) {
        fit.amplitude_lo = fit.amplitude_hi = amp;
        fit.fidelity_lo = fit.fidelity_hi = fit.fidelity;
        fit.fidelity_sigma = 0.0;
        return fit;
    }

    const double drop = 0.5;
    auto below = [&](double a) { return L.profile(a, psi).first < lval - drop; };
    auto bisect = [&](double inside, double outside) {
        for (int k = 0; k < 50; ++k) {
            const double mid = 0.5 * (inside + outside);
            if (below(mid))
                outside = mid;
            else
                inside = mid;
        }
        return 0.5 * (inside + outside);
    };
    fit.amplitude_lo = below(0.0) ? bisect(amp, 0.0) : 0.0;
    fit.amplitude_hi = (amp < 1.0 && below(1.0)) ? bisect(amp, 1.0) : 1.0;

    const double sig_e = data.population_shots ? std::sqrt(even * (1 - even) / double(data.population_shots)) : 0.0;
    const double lo = std::hypot(0.5 * (amp - fit.amplitude_lo), 0.5 * sig_e);
    const double hi = std::hypot(0.5 * (fit.amplitude_hi - amp), 0.5 * sig_e);
    fit.fidelity_lo = std::clamp(fit.fidelity - lo, 0.0, 1.0);
    fit.fidelity_hi = std::clamp(fit.fidelity + hi, 0.0, 1.0);
    fit.fidelity_sigma = 0.5 * (lo + hi);
    return fit;
}

qcore::SpinDensity bell_like_density(double p_ss, double p_dd, cplx coherence) {
    const double rest = 1.0 - p_ss - p_dd;
    if (p_ss < 0 || p_dd < 0 || rest < -1e-15) throw ConfigError("bell_like_density: invalid populations");
    if (std::norm(coherence) > p_ss * p_dd + 1e-15) throw ConfigError("bell_like_density: coherence exceeds bound");
    qcore::SpinDensity rho = qcore::SpinDensity::Zero();
    rho(0, 0) = p_ss;
    rho(3, 3) = p_dd;
    rho(1, 1) = rho(2, 2) = 0.5 * std::max(rest, 0.0);
    rho(0, 3) = coherence;
    rho(3, 0) = std::conj(coherence);
    return rho;
}

std::string map_to_csv(const PopulationMap &map) {
    io::CsvWriter w({axis_name(map.axis1), axis_name(map.axis2), "p0", "p1", "p2"});
    for (std::size_t i = 0; i < map.rows(); ++i)
        for (std::size_t j = 0; j < map.cols(); ++j) {
            const auto k = map.at(i, j);
            w.row({map.grid1[i], map.grid2[j], map.p0[k], map.p1[k], map.p2[k]});
        }
    return w.str();
}

PopulationMap map_from_csv(const std::string &csv, Axis axis1, Axis axis2) {
    const auto t = io::parse_csv(csv);
    const auto c1 = t.column(axis_name(axis1));
    const auto c2 = t.column(axis_name(axis2));
    const auto k0 = t.column("p0"), k1 = t.column("p1"), k2 = t.column("p2");
    PopulationMap m;
    m.axis1 = axis1;
    m.axis2 = axis2;
    for (const auto &r : t.rows) {
        if (m.grid1.empty() || m.grid1.back() != r[c1]) {
            if (std::find(m.grid1.begin(), m.grid1.end(), r[c1]) == m.grid1.end()) m.grid1.push_back(r[c1]);
        }
        if (m.grid1.size() == 1 && std::find(m.grid2.begin(), m.grid2.end(), r[c2]) == m.grid2.end())
            m.grid2.push_back(r[c2]);
    }
    if (t.rows.size() != m.grid1.size() * m.grid2.size())
        throw ConfigError("map CSV: rows do not form a complete row-major grid");
    for (const auto &r : t.rows) {
        m.p0.push_back(r[k0]);
        m.p1.push_back(r[k1]);
        m.p2.push_back(r[k2]);
    }
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const auto &r = t.rows[m.at(i, j)];
            if (r[c1] != m.grid1[i] || r[c2] != m.grid2[j])
                throw ConfigError("map CSV: rows are not in row-major grid order");
        }
    return m;
}

nlohmann::json to_json(const GateParams &p) {
    return {{"omega_hz", angular_to_hz(p.omega)}, {"eta", p.eta},
            {"delta_hz", angular_to_hz(p.delta)}, {"delta_asym_hz", angular_to_hz(p.delta_asym)},
            {"nu_hz", angular_to_hz(p.nu)},       {"n_max", p.n_max},
            {"initial_n", p.initial_n}};
}

nlohmann::json map_metadata(const PopulationMap &map, const GateParams &params) {
    nlohmann::json j = {{"axis1", axis_name(map.axis1)}, {"axis2", axis_name(map.axis2)},
                        {"rows", map.rows()},           {"cols", map.cols()},
                        {"params", to_json(params)}};
    j["shots"] = map.shots ? nlohmann::json(*map.shots) : nlohmann::json("exact");
    j["seed"] = map.seed ? nlohmann::json(*map.seed) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const ParityFit &f) {
    return {{"amplitude", f.amplitude},
            {"phase", f.phase},
            {"fidelity", f.fidelity},
            {"fidelity_sigma", f.fidelity_sigma},
            {"fidelity_interval", {f.fidelity_lo, f.fidelity_hi}},
            {"amplitude_interval", {f.amplitude_lo, f.amplitude_hi}},
            {"log_likelihood", f.log_likelihood}};
}

}  // namespace iongate::msgate
