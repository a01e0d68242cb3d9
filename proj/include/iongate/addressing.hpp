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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iongate/common.hpp"

namespace iongate::addressing {

struct AddressingParams {
    double omega_c = hz_to_angular(193e3);  ///< carrier Rabi frequency, rad/s
    std::array<double, 2> k_dot_x{0.0, 0.0};  ///< per-ion micromotion modulation depth, rad
    double trap_drive = 21.75e6;               ///< Hz
    double rabi_jitter = 0.0;                  ///< fractional rms, common to both ions
    void validate() const;
};

struct MmRabi {
    double omega_mm = 0.0;       ///< rad/s
    double carrier_scale = 1.0;  ///< carrier reduction factor
};

MmRabi mm_rabi(double omega_c, double k_dot_x);

/// Leading-order sideband Rabi frequency, omega_c * k_dot_x / 2.
double mm_rabi_small(double omega_c, double k_dot_x);

/// Modulation depth for an ion displaced by z from the rf null, with a
/// user-supplied linear gradient kappa (rad/m).
double depth_at(double kappa, double z);

/// Carrier Rabi frequency giving a requested sideband Rabi frequency.
double carrier_for_sideband(double omega_mm, double k_dot_x);

/// Duration of a pi pulse at Rabi frequency omega.
double pi_time(double omega);

enum class Drive { kCarrier, kSideband };

Drive parse_drive(const std::string &s);
std::string drive_name(Drive d);

/// Per-ion Rabi frequencies for the selected drive.
std::array<double, 2> ion_rabi(const AddressingParams &p, Drive d);

struct FlopOptions {
    std::size_t points = 201;
    std::uint64_t shots = 0;           ///< 0 = exact expectation values
    std::size_t realizations = 2000;   ///< jitter draws per point in exact mode
    std::uint64_t seed = 0;
    std::size_t threads = 0;
};

/// Register populations versus time; p_k is the probability of k ions in S.
struct FlopTrace {
    std::vector<double> times;
    std::vector<Populations> pops;
};

/*
 * Both ions start in S. Each ion undergoes independent resonant two-level
 * Rabi flopping at its own rate; register populations follow from the
 * product state. With rabi_jitter > 0 every shot (or every exact-mode
 * realization) rescales both Rabi frequencies by a common Gaussian factor.
 */
FlopTrace simulate_register_flops(const AddressingParams &p, Drive d, double duration, const FlopOptions &opts);

/// Exact populations at a single time for given per-ion Rabi frequencies.
Populations register_populations(double omega1, double omega2, double t);

/*
 * Envelope analysis of a common-mode carrier trace. The mean number of ions
 * in S is 1 + cos(omega t) exp(-(sigma omega t)^2 / 2) for Gaussian jitter
 * sigma; sigma is fitted from the envelope and converted to the expected
 * single pi-flip fidelity (1 + exp(-(pi sigma)^2 / 2)) / 2.
 */
struct EnvelopeFit {
    double sigma = 0.0;
    double flip_fidelity = 1.0;
};

EnvelopeFit fit_flop_envelope(const FlopTrace &trace, double omega);

struct CompositeResult {
    double plain = 1.0;      ///< transfer probability of a single pi pulse
    double composite = 1.0;  ///< transfer probability of X(pi/2) Y(pi) X(pi/2)
    double plain_infidelity() const { return 1.0 - plain; }
    double composite_infidelity() const { return 1.0 - composite; }
};

CompositeResult composite_pi(double epsilon);

/// Fitted log-log slopes of plain and composite infidelity over [eps_lo, eps_hi].
std::array<double, 2> infidelity_slopes(double eps_lo, double eps_hi, std::size_t points);

std::string trace_to_csv(const FlopTrace &t);
nlohmann::json to_json(const AddressingParams &p);
AddressingParams params_from_json(const nlohmann::json &j);

}  // namespace iongate::addressing
