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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iongate/common.hpp"
#include "iongate/noisekit.hpp"

namespace iongate::seqlab {

/// Linear Zeeman coefficients (rad/s per tesla) of the two optical
/// transitions from the S sublevels m = -1/2 and m = +1/2 to D m = -1/2.
struct ZeemanModel {
    double coeff_minus = 0.4 * kMuBOverHbar;
    double coeff_plus = -1.6 * kMuBOverHbar;
    void validate() const;
};

enum class Action { kPiHalf, kRfPi, kOpticalPi };

struct Event {
    double time = 0.0;
    Action action = Action::kPiHalf;
    double phase = 0.0;
};

/// Interval between events. `plus` marks population moved to the S m=+1/2
/// sublevel; `sign` is -1 after an optical refocusing pulse.
struct Segment {
    double t0 = 0.0;
    double t1 = 0.0;
    bool plus = false;
    int sign = 1;
};

enum class SequenceKind { kRamsey, kMfdd, kEcho };

struct DDSequence {
    SequenceKind kind = SequenceKind::kRamsey;
    double total = 0.0;
    int blocks = 0;
    std::vector<Event> events;
    std::vector<Segment> segments;

    /// Magnetic weight s(t) in units of mu_B / hbar (+2/5 or -8/5, times sign).
    double switch_value(const Segment &s, const ZeemanModel &z = {}) const;
    /// Integral of s(t) over the sequence (s).
    double switch_integral(const ZeemanModel &z = {}) const;
    std::size_t count(Action a) const;
};

DDSequence build_ramsey(double total);

/// N blocks of length T/N; in each, population is moved to S m=+1/2 for
/// T_N/5 centred on the block midpoint.
DDSequence build_mfdd(double total, int blocks);

/// Optical pi pulse at T/2.
DDSequence hahn_echo(double total);

DDSequence build_sequence(SequenceKind kind, double total, int blocks = 1);
std::string kind_name(SequenceKind k);
SequenceKind parse_kind(const std::string &s);

/// Magnetic phase (rad) accumulated by the optical coherence for a
/// sample-and-hold field trajectory in tesla.
double magnetic_phase(const DDSequence &seq, const noisekit::NoiseTrajectory &field, const ZeemanModel &z = {});

struct CoherenceOptions {
    std::size_t realizations = 400;
    std::uint64_t seed = 0;
    std::size_t phase_points = 12;
    std::uint64_t shots = 0;  ///< 0 = exact expectation values
    double dt = 0.0;          ///< 0 = automatic
    double rf_error = 0.0;    ///< fractional rf pi-pulse amplitude error
    double optical_error = 0.0;
    std::size_t threads = 0;
    ZeemanModel zeeman;
};

struct CoherenceResult {
    double contrast = 0.0;
    double contrast_stderr = 0.0;
    double fringe_phase = 0.0;
    std::vector<double> phases;
    std::vector<double> excitation;  ///< D population per analysis phase
};

/*
 * Fringe contrast at the end of `seq`. Laser noise samples are frequency
 * offsets in rad/s, field samples are tesla. Each realization draws fresh
 * trajectories; the D population is averaged over realizations at each
 * analysis phase and a sinusoid is fitted; contrast = 2 x amplitude.
 */
CoherenceResult simulate_coherence(const DDSequence &seq, const noisekit::NoisePsd &laser,
                                   const noisekit::NoisePsd &field, const CoherenceOptions &opts);

struct ContrastCurve {
    std::vector<double> times;
    std::vector<double> contrast;
    std::vector<double> stderr_;
};

ContrastCurve scan_contrast(SequenceKind kind, int blocks, const std::vector<double> &times,
                            const noisekit::NoisePsd &laser, const noisekit::NoisePsd &field,
                            const CoherenceOptions &opts);

/// Scales the field noise (rms quantities linearly, densities
/// quadratically) so the contrast of `seq` equals `target`. Returns the
/// applied factor.
double tune_field_noise(noisekit::NoisePsd &field, const DDSequence &seq, const noisekit::NoisePsd &laser,
                        double target, const CoherenceOptions &opts);

enum class ContrastModel { kExponential, kGaussian, kBessel };

ContrastModel parse_model(const std::string &s);
std::string model_name(ContrastModel m);

/*
 * exponential: C0 exp(-t / tau);          linewidth = 1 / (pi tau)  (Lorentzian FWHM)
 * gaussian:    C0 exp(-(t / tau)^2);      sigma_nu = sqrt(2) / (2 pi tau),
 *                                         linewidth = sqrt(8 ln 2) sigma_nu  (FWHM)
 * bessel:      C0 |J0(2 b sin(pi f t) / (2 pi f))|; b in rad/s, f in Hz.
 */
struct ContrastFit {
    ContrastModel model = ContrastModel::kExponential;
    double c0 = 1.0;
    double tau = 0.0;
    double amplitude = 0.0;     ///< bessel b
    double frequency_hz = 0.0;  ///< bessel f
    double linewidth_hz = 0.0;
    double half_time = 0.0;  ///< time at which the model falls to 0.5 (exp/gauss)
    double r_squared = 0.0;
    double residual_norm = 0.0;
};

ContrastFit fit_contrast(const ContrastCurve &curve, ContrastModel model);

double model_value(const ContrastFit &f, double t);

nlohmann::json to_json(const DDSequence &seq);
nlohmann::json to_json(const ContrastFit &fit);
std::string curve_to_csv(const ContrastCurve &c);

}  // namespace iongate::seqlab
