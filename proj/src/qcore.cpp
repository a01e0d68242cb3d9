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

#include "iongate/qcore.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <sstream>
#include <unsupported/Eigen/KroneckerProduct>

namespace iongate::qcore {

namespace odeint = boost::numeric::odeint;

RegisterState::RegisterState(int n_max) : n_max_(n_max), amps_(static_cast<std::size_t>(4 * (n_max + 1))) {
    if (n_max < 1) throw ConfigError("RegisterState: n_max must be >= 1");
}

RegisterState RegisterState::basis(Qubit q1, Qubit q2, int n, int n_max) {
    RegisterState s(n_max);
    if (n < 0 || n > n_max) throw ConfigError("RegisterState::basis: Fock index out of range");
    s.at(static_cast<int>(q1), static_cast<int>(q2), n) = 1.0;
    return s;
}

double RegisterState::norm_squared() const {
    double s = 0.0;
    for (const auto &a : amps_) s += std::norm(a);
    return s;
}

double RegisterState::top_fock_population() const {
    double s = 0.0;
    for (int q = 0; q < 4; ++q)
        for (int n = std::max(0, n_max_ - 1); n <= n_max_; ++n) s += std::norm(amps_[q * fock_dim() + n]);
    return s;
}

cplx RegisterState::mean_annihilation() const {
    cplx s = 0.0;
    for (int q = 0; q < 4; ++q)
        for (int n = 1; n <= n_max_; ++n)
            s += std::conj(amps_[q * fock_dim() + n - 1]) * std::sqrt(double(n)) * amps_[q * fock_dim() + n];
    return s;
}

RegisterState operator+(const RegisterState &a, const RegisterState &b) {
    if (a.n_max() != b.n_max()) throw ConfigError("RegisterState: cutoff mismatch");
    RegisterState r = a;
    for (std::size_t i = 0; i < r.dim(); ++i) r.amplitudes()[i] += b.amplitudes()[i];
    return r;
}

RegisterState operator*(cplx s, const RegisterState &a) {
    RegisterState r = a;
    for (auto &x : r.amplitudes()) x *= s;
    return r;
}

cplx inner(const RegisterState &a, const RegisterState &b) {
    if (a.n_max() != b.n_max()) throw ConfigError("RegisterState: cutoff mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a.amplitudes()[i]) * b.amplitudes()[i];
    return s;
}

double GateParams::alpha_max() const {
    if (delta == 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 * eta * omega / std::abs(delta);
}

void GateParams::validate() const {
    if (!(eta > 0.0)) throw ConfigError("GateParams: eta must be > 0");
    if (!(nu > 0.0)) throw ConfigError("GateParams: nu must be > 0");
    if (n_max < 8) throw ConfigError("GateParams: n_max must be >= 8");
    if (initial_n < 0 || initial_n > n_max) throw ConfigError("GateParams: initial_n out of range");
    if (omega < 0.0) throw ConfigError("GateParams: omega must be >= 0");
    if (omega == 0.0) return;
    const double a = alpha_max();
    if (!(a * a + initial_n < 0.5 * n_max)) {
        std::ostringstream os;
        os << "Fock cutoff too small: |alpha_max|^2 + initial_n = " << a * a + initial_n << " >= n_max/2 = " << 0.5 * n_max;
        throw PhysicsError(PhysicsError::Kind::kCutoffTooSmall, os.str());
    }
}

Operator build_ms_generator(const GateParams &params, double t) {
    params.validate();
    const int fd = params.n_max + 1;
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(fd, fd);
    for (int n = 1; n < fd; ++n) a(n - 1, n) = std::sqrt(double(n));
    const Eigen::MatrixXcd adag = a.adjoint();

    // S is the upper level: sigma_minus |S> = |D>.
    Eigen::Matrix2cd sm = Eigen::Matrix2cd::Zero();
    sm(1, 0) = 1.0;
    const Eigen::Matrix2cd id2 = Eigen::Matrix2cd::Identity();
    const Eigen::MatrixXcd idf = Eigen::MatrixXcd::Identity(fd, fd);

    const Eigen::MatrixXcd s_minus =
        Eigen::kroneckerProduct(Eigen::kroneckerProduct(sm, id2).eval(), idf).eval() +
        Eigen::kroneckerProduct(Eigen::kroneckerProduct(id2, sm).eval(), idf).eval();
    const Eigen::Matrix4cd id4 = Eigen::Matrix4cd::Identity();
    const Eigen::MatrixXcd motion = std::exp(cplx(0, -params.delta * t)) * Eigen::kroneckerProduct(id4, adag).eval() +
                                    std::exp(cplx(0, params.delta * t)) * Eigen::kroneckerProduct(id4, a).eval();

    const cplx pref = cplx(0, params.eta) * std::exp(cplx(0, -params.delta_asym * t));
    const Eigen::MatrixXcd m = pref * (motion * s_minus);
    return 0.5 * params.omega * (m + m.adjoint());
}

namespace {

using StateVec = std::vector<cplx>;

// Sparse action of the generator: d psi / dt = -i H(t) psi.
struct MsSystem {
    GateParams p;
    int fd;

    void operator()(const StateVec &psi, StateVec &dpsi, double t) const {
        std::fill(dpsi.begin(), dpsi.end(), cplx(0.0));
        const double g = 0.5 * p.omega * p.eta;
        // coefficient of a^dag S_- and a S_- (and their adjoints)
        const cplx g_up = cplx(0, g) * std::exp(cplx(0, -(p.delta_asym + p.delta) * t));
        const cplx g_dn = cplx(0, g) * std::exp(cplx(0, -(p.delta_asym - p.delta) * t));
        const cplx g_up_c = std::conj(g_up);
        const cplx g_dn_c = std::conj(g_dn);
        auto idx = [this](int q1, int q2, int n) { return static_cast<std::size_t>((q1 * 2 + q2) * fd + n); };
        for (int q1 = 0; q1 < 2; ++q1) {
            for (int q2 = 0; q2 < 2; ++q2) {
                for (int n = 0; n < fd; ++n) {
                    const cplx amp = psi[idx(q1, q2, n)];
                    if (amp == cplx(0.0)) continue;
                    const double up = std::sqrt(double(n + 1));
                    const double dn = std::sqrt(double(n));
                    for (int k = 0; k < 2; ++k) {
                        const int qk = k == 0 ? q1 : q2;
                        const int r1 = k == 0 ? 1 - q1 : q1;
                        const int r2 = k == 0 ? q2 : 1 - q2;
                        if (qk == 0) {
                            // S -> D
                            if (n + 1 < fd) dpsi[idx(r1, r2, n + 1)] += g_up * up * amp;
                            if (n > 0) dpsi[idx(r1, r2, n - 1)] += g_dn * dn * amp;
                        } else {
                            // D -> S, hermitian conjugate terms
                            if (n > 0) dpsi[idx(r1, r2, n - 1)] += g_up_c * dn * amp;
                            if (n + 1 < fd) dpsi[idx(r1, r2, n + 1)] += g_dn_c * up * amp;
                        }
                    }
                }
            }
        }
        for (auto &x : dpsi) x *= cplx(0, -1);
    }
};

void check_leak(const RegisterState &s, const PropagateOptions &opts, double t) {
    const double top = s.top_fock_population();
    if (top >= opts.leak_tol) {
        std::ostringstream os;
        os << "Fock truncation leak at t=" << t << " s: top-two-level population " << top << " >= " << opts.leak_tol;
        throw PhysicsError(PhysicsError::Kind::kLeak, os.str());
    }
}

}  // namespace

std::vector<RegisterState> propagate_to_times(const RegisterState &state, const GateParams &params, double t0,
                                              std::span<const double> times, const PropagateOptions &opts) {
    params.validate();
    if (state.n_max() != params.n_max) throw ConfigError("propagate: state cutoff differs from GateParams.n_max");
    if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < t0))
        throw ConfigError("propagate: output times must be sorted and >= t0");

    std::vector<RegisterState> out;
    out.reserve(times.size());
    RegisterState cur = state;
    if (params.omega == 0.0) {
        for (std::size_t i = 0; i < times.size(); ++i) out.push_back(cur);
        return out;
    }

    MsSystem sys{params, params.n_max + 1};
    auto stepper = odeint::make_controlled(opts.tol, opts.tol, odeint::runge_kutta_dopri5<StateVec>());

    const double rate = 0.5 * params.omega * params.eta * 2.0 * std::sqrt(double(params.n_max + 1)) +
                        std::abs(params.delta) + std::abs(params.delta_asym);
    const double span = times.empty() ? 0.0 : times.back() - t0;
    double dt = std::min(span > 0 ? span : 1.0, 0.05 / rate);
    const double min_step = opts.min_step_fraction * std::max(span, 1e-12);

    StateVec &x = cur.amplitudes();
    double t = t0;
    for (double target : times) {
        while (t < target) {
            double h = std::min(dt, target - t);
            const double h_req = h;
            const auto res = stepper.try_step(sys, x, t, h);
            if (res == odeint::success) {
                // h now holds the proposed next step; keep a larger proposal
                // when the last step was clipped to hit an output time.
                dt = std::max(h, h_req == dt ? h : dt);
            } else {
                dt = h;
                if (dt < min_step) {
                    std::ostringstream os;
                    os << "step-size underflow at t=" << t << " s (dt=" << dt << ")";
                    throw PhysicsError(PhysicsError::Kind::kStepUnderflow, os.str());
                }
            }
        }
        t = target;
        check_leak(cur, opts, t);
        out.push_back(cur);
    }
    return out;
}

RegisterState propagate(const RegisterState &state, const GateParams &params, double t0, double t1,
                        const PropagateOptions &opts) {
    if (t1 < t0) throw ConfigError("propagate: t1 must be >= t0");
    const double times[] = {t1};
    return propagate_to_times(state, params, t0, times, opts).front();
}

Eigen::Matrix2cd rotation_matrix(double angle, double phase) {
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    Eigen::Matrix2cd r;
    r(0, 0) = c;
    r(1, 1) = c;
    r(0, 1) = cplx(0, -1) * std::exp(cplx(0, -phase)) * s;
    r(1, 0) = cplx(0, -1) * std::exp(cplx(0, phase)) * s;
    return r;
}

RegisterState apply_rotation(const RegisterState &state, Target target, double angle, double phase) {
    const Eigen::Matrix2cd r = rotation_matrix(angle, phase);
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    const Eigen::Matrix2cd r1 = target == Target::kQubit2 ? id : r;
    const Eigen::Matrix2cd r2 = target == Target::kQubit1 ? id : r;
    const Eigen::Matrix4cd u = Eigen::kroneckerProduct(r1, r2).eval();

    RegisterState out(state.n_max());
    const int fd = state.fock_dim();
    for (int n = 0; n < fd; ++n) {
        Eigen::Vector4cd v;
        for (int q = 0; q < 4; ++q) v(q) = state.amplitudes()[q * fd + n];
        const Eigen::Vector4cd w = u * v;
        for (int q = 0; q < 4; ++q) out.amplitudes()[q * fd + n] = w(q);
    }
    return out;
}

Populations measure_populations(const RegisterState &state) {
    Populations p;
    const int fd = state.fock_dim();
    for (int n = 0; n < fd; ++n) {
        p.p2 += std::norm(state.at(0, 0, n));
        p.p1 += std::norm(state.at(0, 1, n)) + std::norm(state.at(1, 0, n));
        p.p0 += std::norm(state.at(1, 1, n));
    }
    return p;
}

SpinDensity reduce_spin_density(const RegisterState &state) {
    SpinDensity rho = SpinDensity::Zero();
    const int fd = state.fock_dim();
    for (int n = 0; n < fd; ++n)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                rho(i, j) += state.amplitudes()[i * fd + n] * std::conj(state.amplitudes()[j * fd + n]);
    return rho;
}

Populations populations_of(const SpinDensity &rho) {
    return {rho(3, 3).real(), rho(1, 1).real() + rho(2, 2).real(), rho(0, 0).real()};
}

Populations thermal_populations(const GateParams &params, double nbar, double t, const PropagateOptions &opts,
                                double weight_tol) {
    if (nbar < 0.0) throw ConfigError("thermal_populations: nbar must be >= 0");
    Populations acc;
    double remaining = 1.0;
    const double ratio = nbar / (1.0 + nbar);
    double w = 1.0 / (1.0 + nbar);
    for (int n = 0; remaining > weight_tol; ++n) {
        if (n > params.n_max) throw PhysicsError(PhysicsError::Kind::kCutoffTooSmall, "thermal tail exceeds cutoff");
        GateParams p = params;
        p.initial_n = n;
        const auto psi = propagate(RegisterState::basis(Qubit::kS, Qubit::kS, n, p.n_max), p, 0.0, t, opts);
        const Populations pn = measure_populations(psi);
        acc.p0 += w * pn.p0;
        acc.p1 += w * pn.p1;
        acc.p2 += w * pn.p2;
        remaining -= w;
        w *= ratio;
    }
    // Renormalize over the included Fock components.
    const double s = 1.0 - remaining;
    return {acc.p0 / s, acc.p1 / s, acc.p2 / s};
}

Populations apply_decay(const Populations &p, double elapsed, double lifetime) {
    const double q = -std::expm1(-elapsed / lifetime);
    Populations r;
    // p0: both D; p1: one D; p2: none.
    r.p0 = p.p0 * (1 - q) * (1 - q);
    r.p1 = p.p0 * 2 * q * (1 - q) + p.p1 * (1 - q);
    r.p2 = p.p0 * q * q + p.p1 * q + p.p2;
    return r;
}

}  // namespace iongate::qcore
