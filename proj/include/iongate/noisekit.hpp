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

namespace iongate::noisekit {

enum class PhasePolicy { kRandom, kFixed };

/// Discrete tone: frequency in Hz, rms amplitude in sample units.
struct Line {
    double frequency_hz = 50.0;
    double rms = 0.0;
    PhasePolicy policy = PhasePolicy::kRandom;
    double phase = 0.0;  ///< used with kFixed
};

/// Gaussian servo bump mirrored at +-center. `power` is the integrated
/// phase-noise power (rad^2) of the bump, i.e. the fraction of the carrier
/// moved into the pedestal for small phase excursions.
struct Bump {
    double center_hz = 1.1e6;
    double fwhm_hz = 1.0e6;
    double power = 0.0;
};

struct CavityParams {
    double linewidth_hz = 22e3;
    double finesse = 1e5;
    double fsr_hz = 1.93e9;

    /// Lorentzian power transfer 1 / (1 + (2 f / linewidth)^2).
    double transfer(double f_hz) const;
    /// linewidth within 20% of fsr / finesse.
    bool consistent() const;
};

/*
 * One-sided frequency-noise spectrum. Samples drawn from it are
 * instantaneous frequency offsets; for laser noise that is rad/s and
 * white_level has units (rad/s)^2/Hz. Magnetic noise reuses the same type
 * with field units.
 *
 * Continuous part: white + flicker / f (zero below flicker_cutoff_hz) +
 * bumps, all multiplied by the transfer of every cavity in `filters`.
 */
struct NoisePsd {
    double white_level = 0.0;
    double flicker_level = 0.0;
    double flicker_cutoff_hz = 1e-3;
    std::vector<Line> lines;
    std::vector<Bump> bumps;
    /// Per-realization static Gaussian offset (sample units).
    double quasi_static_rms = 0.0;
    std::vector<CavityParams> filters;

    void validate() const;
    double filter_transfer(double f_hz) const;
    /// Continuous one-sided density at f > 0, filtered.
    double density(double f_hz) const;
    /// Integral of density over [lo, hi] (flicker exact, the rest midpoint).
    double band_power(double lo_hz, double hi_hz) const;
    /// rms of line i after filtering.
    double line_rms(std::size_t i) const;
    /// Highest frequency with modeled structure (lines, bump center + FWHM).
    double max_frequency() const;
    bool is_zero() const;
};

/// Returns psd with the cavity appended to its filters.
NoisePsd cavity_filter(const NoisePsd &psd, const CavityParams &cavity);

/// Bump phase-noise density (rad^2/Hz, one-sided) before filtering.
double bump_phase_density(const Bump &b, double f_hz);

struct NoiseTrajectory {
    double dt = 0.0;
    std::vector<double> samples;
    std::uint64_t seed = 0;

    double duration() const { return dt * double(samples.size()); }
};

/*
 * Sample-and-hold realization: samples[k] holds on [k dt, (k+1) dt).
 * The Gaussian part is drawn by inverse real FFT on a record twice the
 * requested length; content below the record's first bin becomes a
 * per-realization static offset. Lines are sqrt(2) rms cos(2 pi f t + phase).
 * Throws PhysicsError(kAliasing) when dt >= 1 / (4 max_frequency()).
 */
NoiseTrajectory synthesize(const NoisePsd &psd, double duration, double dt, std::uint64_t seed);

/// dt satisfying the aliasing guard with margin; falls back to duration/1000.
double auto_dt(const NoisePsd &psd, double duration);

struct DriveOptions {
    double omega = kTwoPi * 100e3;  ///< carrier Rabi frequency, rad/s
    double dt = 0.0;                ///< 0 = auto_dt
    std::size_t realizations = 100;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
};

/// Excited population after a resonant-frame pulse of length t with
/// detuning (rad/s) and Rabi frequency (rad/s), no noise.
double rabi_excitation(double omega, double detuning, double t);

struct Spectrum {
    std::vector<double> detuning_hz;
    std::vector<double> excitation;  ///< mean over realizations
    std::vector<double> baseline;    ///< noise-free
    std::vector<double> stderr_;
    std::vector<double> excess() const;
};

/// Mean excited population after a pulse vs laser detuning. The laser
/// frequency noise enters the detuning; each realization is shared across
/// the detuning grid.
Spectrum rabi_spectroscopy(const NoisePsd &psd, double pulse, const std::vector<double> &detunings_hz,
                           const DriveOptions &opts);

/// Mean excess excitation over |detuning -+ center| <= fwhm / 2.
double shoulder_level(const Spectrum &s, double center_hz, double fwhm_hz);

struct SaturationCurve {
    double detuning_hz = 0.0;
    std::vector<double> durations;
    std::vector<double> excitation;
    std::vector<double> baseline;
    std::vector<double> stderr_;
    double slope = 0.0;  ///< 1/s, least squares of excess over the linear window
    double intercept = 0.0;
};

/// Excitation vs pulse length at fixed detuning. `linear_window` bounds the
/// durations used for the slope (<= 0 uses all).
SaturationCurve saturation_curve(const NoisePsd &psd, double detuning_hz, const std::vector<double> &durations,
                                 double linear_window, const DriveOptions &opts);

/// Scales the power of bump `index` so the mean excitation at (detuning,
/// duration) hits `target`. Bisection on log power; same seeds every step.
double calibrate_bump_power(NoisePsd &psd, std::size_t index, double detuning_hz, double duration, double target,
                            const DriveOptions &opts);

/// Mean cos of the accumulated phase of free evolution at each time.
std::vector<double> ramsey_coherence(const NoisePsd &psd, const std::vector<double> &times, const DriveOptions &opts);

nlohmann::json to_json(const NoisePsd &psd);
NoisePsd psd_from_json(const nlohmann::json &j);

/// Spectrum used as a starting point for the servo-bump studies.
NoisePsd servo_bump_psd(double power = 0.08);

}  // namespace iongate::noisekit
