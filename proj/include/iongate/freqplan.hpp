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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iongate/common.hpp"

namespace iongate::freqplan {

enum class Channel { kBase, kCarrier, kMm, kRsb, kBsb, kF1, kF2 };
inline constexpr std::size_t kChannelCount = 7;

std::string channel_name(Channel c);
Channel parse_channel(const std::string &s);

/// 2 for channels inside the double pass (base, carrier, mm), 1 otherwise.
int pass_multiplier(Channel c);

struct SourceChannel {
    double frequency = 0.0;     ///< Hz
    double phase_origin = 0.0;  ///< rad, phase at t = 0
    bool configured = false;
};

enum class Path { kCarrier, kMm };
enum class Sideband { kNone, kRsb, kBsb, kF1, kF2 };

struct PulseSelect {
    Path path = Path::kCarrier;
    Sideband sideband = Sideband::kNone;
};

std::string path_name(Path p);
std::string sideband_name(Sideband s);
Path parse_path(const std::string &s);
Sideband parse_sideband(const std::string &s);
Channel channel_of(Path p);
/// Single-pass channel of a sideband; throws for kNone.
Channel channel_of(Sideband s);

class FrequencyPlan {
public:
    double trap_drive = 21.75e6;  ///< Hz

    void set(Channel c, double frequency, double phase_origin = 0.0);
    const SourceChannel &get(Channel c) const { return channels_[static_cast<std::size_t>(c)]; }
    bool configured(Channel c) const { return get(c).configured; }

    /// Sets mm = carrier + trap_drive / 2.
    void configure_mm_from_carrier();
    /// Sets rsb and bsb to f1 -/+ offset, keeping their phase origins.
    void configure_ms(double offset_hz, double rsb_origin = 0.0, double bsb_origin = 0.0);

    /// Throws ConfigError when a configured carrier/mm pair is not separated
    /// by trap_drive / 2 or a configured rsb/bsb pair is not symmetric about f1.
    void validate(double tol_hz = 1e-6) const;

private:
    std::array<SourceChannel, kChannelCount> channels_{};
};

/// 2 (base + path) + single-pass sideband, Hz.
double pulse_frequency(const FrequencyPlan &plan, PulseSelect sel);

/// Human-readable table of every configured path/sideband combination.
std::string frequency_table(const FrequencyPlan &plan);

struct CalibrationPoint {
    double time = 0.0;    ///< s, wall clock
    double offset = 0.0;  ///< Hz, measured cavity-vs-atom offset
};

struct DriftModel {
    std::vector<CalibrationPoint> points;
    double max_slope = 2e3 / 60.0;  ///< Hz/s
    double max_curvature = 0.0;     ///< Hz/s^2, bound on |d^2 offset / dt^2|
};

struct DriftCorrection {
    double offset = 0.0;           ///< interpolated optical offset, Hz
    double base_correction = 0.0;  ///< base-channel change cancelling the offset, Hz
    double residual_bound = 0.0;   ///< worst-case |true - interpolated|, Hz
    bool extrapolated = false;
    bool slope_warning = false;
};

/*
 * Piecewise-linear interpolation between calibration points. Inside an
 * interval of length h the bound is K h^2 / 8; past the last point (at most
 * one interval) the last segment is extended and the bound is K (h + s) s / 2
 * for an overshoot s.
 */
DriftCorrection compensate_drift(const DriftModel &m, double t);

/// Largest change of the interpolated offset across one calibration interval.
double max_step(const DriftModel &m);

struct FrequencyUpdate {
    double time = 0.0;
    Channel channel = Channel::kBase;
    double frequency = 0.0;
};

struct Pulse {
    std::string label;
    double start = 0.0;
    double duration = 0.0;
    PulseSelect select;
    bool phase_sensitive = true;
};

struct PulseSequence {
    std::vector<Pulse> pulses;
    std::vector<FrequencyUpdate> updates;
};

struct LedgerRow {
    std::string label;
    double start = 0.0;
    double frequency = 0.0;                         ///< optical offset, Hz
    double phase = 0.0;                             ///< optical phase in [0, 2 pi)
    std::array<double, kChannelCount> channel_phase{};  ///< accrued channel phases in [0, 2 pi)
    bool coherence_reset = false;  ///< a channel used by the pulse was retuned earlier in the run
    bool flagged = false;          ///< coherence reset on a phase-sensitive pulse
};

/*
 * Each channel accrues phase continuously from its origin at its current
 * frequency; frequency updates keep the phase continuous. Updating any
 * channel other than the base marks it coherence-reset for later pulses.
 */
std::vector<LedgerRow> phase_ledger(const FrequencyPlan &plan, const PulseSequence &seq);

/// Phase of `c` (rad, in [0, 2 pi)) at time t under the sequence's updates.
double channel_phase(const FrequencyPlan &plan, const std::vector<FrequencyUpdate> &updates, Channel c, double t);

nlohmann::json to_json(const FrequencyPlan &plan);
FrequencyPlan plan_from_json(const nlohmann::json &j);
nlohmann::json to_json(const std::vector<LedgerRow> &rows);
DriftModel drift_from_json(const nlohmann::json &j);
PulseSequence sequence_from_json(const nlohmann::json &j);
std::string ledger_to_csv(const std::vector<LedgerRow> &rows);

}  // namespace iongate::freqplan
