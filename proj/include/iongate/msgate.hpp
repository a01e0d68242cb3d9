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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iongate/common.hpp"
#include "iongate/qcore.hpp"

namespace iongate::msgate {

using qcore::GateParams;

struct MSAnalyticPoint {
    cplx alpha;
    double theta = 0.0;
    Populations populations;
};

/// Coherent displacement and geometric phase of the MS interaction at
/// time t. Uses series forms near delta*t = 0 so delta = 0 is allowed.
std::pair<cplx, double> alpha_theta(const GateParams &params, double t);

/// Closed-form populations for delta_asym = 0 starting from |SS, 0>.
Populations analytic_populations(const GateParams &params, double t);

MSAnalyticPoint analytic_point(const GateParams &params, double t);

struct GatePoint {
    double delta = 0.0;   ///< rad/s
    double t_gate = 0.0;  ///< s
};

/// delta = 2 eta omega, t_gate = 2 pi / delta.
GatePoint gate_point(double omega, double eta);

/// Carrier Rabi frequency that makes delta the gate detuning.
double omega_for_gate_detuning(double delta, double eta);

enum class Axis { kTime, kDelta, kDeltaAsym };

std::string axis_name(Axis a);
Axis parse_axis(const std::string &name);

/*
 * Gridded P0/P1/P2. Time axes are stored in seconds, detuning axes in Hz
 * (ordinary frequency). Cell (i, j) uses axis1[i], axis2[j]; arrays are row
 * major with index i * axis2.size() + j.
 */
struct PopulationMap {
    Axis axis1 = Axis::kTime;
    Axis axis2 = Axis::kDelta;
    std::vector<double> grid1;
    std::vector<double> grid2;
    std::vector<double> p0, p1, p2;
    std::optional<std::uint64_t> shots;
    std::optional<std::uint64_t> seed;

    std::size_t rows() const { return grid1.size(); }
    std::size_t cols() const { return grid2.size(); }
    std::size_t at(std::size_t i, std::size_t j) const { return i * grid2.size() + j; }
    Populations cell(std::size_t i, std::size_t j) const { return {p0[at(i, j)], p1[at(i, j)], p2[at(i, j)]}; }
};

struct ScanOptions {
    std::optional<std::uint64_t> shots;  ///< nullopt = exact populations
    std::uint64_t seed = 0;
    qcore::PropagateOptions propagate;
    std::size_t threads = 0;
    /// Interaction time for maps without a time axis; defaults to
    /// 2 pi / |params.delta|.
    std::optional<double> fixed_time;
};

/// Populations over a 2D grid via the numerical propagator.
PopulationMap scan_map(const GateParams &params, Axis axis1, const std::vector<double> &grid1, Axis axis2,
                       const std::vector<double> &grid2, const ScanOptions &opts = {});

/// Same grid layout filled from the closed-form populations; both axes must
/// be time or delta (delta_asym = 0).
PopulationMap analytic_map(const GateParams &params, Axis axis1, const std::vector<double> &grid1, Axis axis2,
                           const std::vector<double> &grid2, const ScanOptions &opts = {});

struct Registration {
    double offset_hz = 0.0;
    double cost = 0.0;
    long grid_shift = 0;
};

/// Rigid shift (Hz) along the named frequency axis such that
/// measured(f) ~ calculated(f - offset). Grid search over integer steps
/// within +- half the grid span, then parabolic refinement.
Registration register_maps(const PopulationMap &measured, const PopulationMap &calculated, Axis axis);

struct ParityData {
    std::vector<double> phases;
    std::uint64_t shots_per_phase = 0;  ///< 0 means exact expectation values
    std::vector<double> parity;
    /// P0 + P2 of the gate output before the analysis pulse.
    double even_population = 0.0;
    std::uint64_t population_shots = 0;
    std::uint64_t seed = 0;
};

struct ParityFit {
    double amplitude = 0.0;
    double phase = 0.0;
    double fidelity = 0.0;
    double fidelity_sigma = 0.0;
    double fidelity_lo = 0.0;
    double fidelity_hi = 0.0;
    double amplitude_lo = 0.0;
    double amplitude_hi = 0.0;
    double log_likelihood = 0.0;
};

struct ParityScanOptions {
    std::uint64_t shots = 0;             ///< 0 = exact
    std::uint64_t population_shots = 0;  ///< 0 = shots * phases.size()
    std::uint64_t seed = 0;
};

/// Collective pi/2 analysis pulse of phase phi on the gate output, parity
/// P0 + P2 - P1 per phase, sampled from the induced trinomial.
ParityData parity_scan(const qcore::SpinDensity &rho, const std::vector<double> &phases, const ParityScanOptions &opts);
ParityData parity_scan(const qcore::RegisterState &state, const std::vector<double> &phases,
                       const ParityScanOptions &opts);

/// Exact parity after the analysis pulse.
double parity_expectation(const qcore::SpinDensity &rho, double phase);

/// Maximum-likelihood fit of parity(phi) = A sin(2 phi + phi0) under binomial
/// even/odd statistics. Fidelity = (P0 + P2)/2 + A/2. The interval is the
/// profile-likelihood 68% interval on A combined in quadrature with the
/// binomial error of P0 + P2.
ParityFit ml_fit_parity(const ParityData &data);

/// Spin density with given SS/DD populations, coherence and equal SD/DS
/// populations; used to synthesize imperfect gate outputs.
qcore::SpinDensity bell_like_density(double p_ss, double p_dd, cplx coherence_ss_dd);

// Serialization.
std::string map_to_csv(const PopulationMap &map);
PopulationMap map_from_csv(const std::string &csv, Axis axis1, Axis axis2);
nlohmann::json map_metadata(const PopulationMap &map, const GateParams &params);
nlohmann::json to_json(const ParityFit &fit);
nlohmann::json to_json(const GateParams &params);

}  // namespace iongate::msgate
