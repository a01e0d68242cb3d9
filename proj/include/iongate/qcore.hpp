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

#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "iongate/common.hpp"

namespace iongate::qcore {

enum class Qubit : int { kS = 0, kD = 1 };

/*
 * State of two optical qubits and one truncated vibrational mode.
 *
 * Basis index = (q1 * 2 + q2) * (n_max + 1) + n with q = 0 for |S> and
 * q = 1 for |D>. |S> is taken as the upper spin state, so the lowering
 * operator of the drive term maps S -> D.
 */
class RegisterState {
public:
    RegisterState() = default;
    explicit RegisterState(int n_max);

    /// |q1 q2, n>.
    static RegisterState basis(Qubit q1, Qubit q2, int n, int n_max);

    int n_max() const { return n_max_; }
    int fock_dim() const { return n_max_ + 1; }
    std::size_t dim() const { return amps_.size(); }

    std::size_t index(int q1, int q2, int n) const {
        return static_cast<std::size_t>((q1 * 2 + q2) * fock_dim() + n);
    }
    cplx &at(int q1, int q2, int n) { return amps_[index(q1, q2, n)]; }
    cplx at(int q1, int q2, int n) const { return amps_[index(q1, q2, n)]; }

    std::vector<cplx> &amplitudes() { return amps_; }
    const std::vector<cplx> &amplitudes() const { return amps_; }

    double norm_squared() const;
    /// Population of the two highest Fock levels.
    double top_fock_population() const;
    /// <a> of the motional mode.
    cplx mean_annihilation() const;

private:
    int n_max_ = 0;
    std::vector<cplx> amps_;
};

RegisterState operator+(const RegisterState &a, const RegisterState &b);
RegisterState operator*(cplx s, const RegisterState &a);
cplx inner(const RegisterState &a, const RegisterState &b);

/// Mølmer–Sørensen interaction parameters. Angular units throughout.
struct GateParams {
    double omega = 0.0;       ///< carrier Rabi frequency (rad/s)
    double eta = 0.05;        ///< Lamb-Dicke parameter
    double delta = 0.0;       ///< symmetric detuning from the sidebands (rad/s)
    double delta_asym = 0.0;  ///< asymmetric detuning (rad/s)
    double nu = kTwoPi * 0.98e6;
    int n_max = 20;
    int initial_n = 0;

    /// Throws ConfigError for eta/nu/n_max violations and PhysicsError
    /// (kCutoffTooSmall) when the coherent excursion does not fit.
    void validate() const;
    double alpha_max() const;
};

using Operator = Eigen::MatrixXcd;

/// H(t)/hbar on the RegisterState basis.
Operator build_ms_generator(const GateParams &params, double t);

struct PropagateOptions {
    double tol = 1e-8;
    double leak_tol = 1e-6;
    /// Minimum allowed step as a fraction of the interval length.
    double min_step_fraction = 1e-14;
};

/// Time-ordered integration of the Schrödinger equation from t0 to t1.
/// The state is never renormalized; norm drift is left as a diagnostic.
RegisterState propagate(const RegisterState &state, const GateParams &params, double t0, double t1,
                        const PropagateOptions &opts = {});

/// Propagate through a sorted list of output times (starting at t0) in one
/// integration and return the state at each of them.
std::vector<RegisterState> propagate_to_times(const RegisterState &state, const GateParams &params, double t0,
                                              std::span<const double> times, const PropagateOptions &opts = {});

enum class Target { kQubit1, kQubit2, kBoth };

/// exp(-i angle/2 (cos(phase) sx + sin(phase) sy)) on the selected qubits.
RegisterState apply_rotation(const RegisterState &state, Target target, double angle, double phase);

/// 2x2 single-qubit rotation in the (S, D) basis.
Eigen::Matrix2cd rotation_matrix(double angle, double phase);

Populations measure_populations(const RegisterState &state);

/// Reduced two-qubit density matrix with the motion traced out, basis
/// order SS, SD, DS, DD.
using SpinDensity = Eigen::Matrix4cd;
SpinDensity reduce_spin_density(const RegisterState &state);
Populations populations_of(const SpinDensity &rho);

/// Thermal-state populations at time t by incoherent averaging of Fock
/// initial conditions |SS, n> with weights nbar^n / (1 + nbar)^(n + 1).
/// Components are included until the remaining weight is below weight_tol.
Populations thermal_populations(const GateParams &params, double nbar, double t, const PropagateOptions &opts = {},
                                double weight_tol = 1e-9);

/// Apply D -> S decay of each ion with probability 1 - exp(-elapsed/lifetime)
/// to measured populations.
Populations apply_decay(const Populations &p, double elapsed, double lifetime = kDLifetime);

}  // namespace iongate::qcore
