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


#include "iongate/freqplan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "iongate/io.hpp"

namespace iongate::freqplan {

namespace {

constexpr std::array<const char *, kChannelCount> kNames = {"base", "carrier", "mm", "rsb", "bsb", "f1", "f2"};

std::size_t idx(Channel c) { return static_cast<std::size_t>(c); }

double wrap_turns(double x) {
    x = std::fmod(x, 1.0);
    return x < 0.0 ? x + 1.0 : x;
}

double to_rad(double turns) {
    const double r = kTwoPi * wrap_turns(turns);
    return r >= kTwoPi ? 0.0 : r;
}

double channel_turns(const FrequencyPlan &plan, const std::vector<FrequencyUpdate> &updates, Channel c, double t) {
    const SourceChannel &ch = plan.get(c);
    double f = ch.frequency, last = 0.0;
    double turns = wrap_turns(ch.phase_origin / kTwoPi);
    for (const auto &u : updates) {
        if (u.channel != c) continue;
        if (u.time > t) break;
        turns = wrap_turns(turns + std::fmod(f * (u.time - last), 1.0));
        f = u.frequency;
        last = u.time;
    }
    return wrap_turns(turns + std::fmod(f * (t - last), 1.0));
}

double channel_frequency(const FrequencyPlan &plan, const std::vector<FrequencyUpdate> &updates, Channel c, double t) {
    double f = plan.get(c).frequency;
    for (const auto &u : updates) {
        if (u.time > t) break;
        if (u.channel == c) f = u.frequency;
    }
    return f;
}

}  // namespace

std::string channel_name(Channel c) { return kNames[idx(c)]; }

Channel parse_channel(const std::string &s) {
    for (std::size_t i = 0; i < kChannelCount; ++i)
        if (s == kNames[i]) return static_cast<Channel>(i);
    throw ConfigError("unknown channel '" + s + "'");
}

int pass_multiplier(Channel c) { return c == Channel::kBase || c == Channel::kCarrier || c == Channel::kMm ? 2 : 1; }

std::string path_name(Path p) { return p == Path::kCarrier ? "carrier" : "mm"; }

std::string sideband_name(Sideband s) {
    switch (s) {
        case Sideband::kNone: return "none";
        case Sideband::kRsb: return "rsb";
        case Sideband::kBsb: return "bsb";
        case Sideband::kF1: return "f1";
        case Sideband::kF2: return "f2";
    }
    return "none";
}

Path parse_path(const std::string &s) {
    if (s == "carrier") return Path::kCarrier;
    if (s == "mm") return Path::kMm;
    throw ConfigError("unknown path '" + s + "' (carrier|mm)");
}

Sideband parse_sideband(const std::string &s) {
    for (Sideband v : {Sideband::kNone, Sideband::kRsb, Sideband::kBsb, Sideband::kF1, Sideband::kF2})
        if (s == sideband_name(v)) return v;
    throw ConfigError("unknown sideband '" + s + "' (none|rsb|bsb|f1|f2)");
}

Channel channel_of(Path p) { return p == Path::kCarrier ? Channel::kCarrier : Channel::kMm; }

Channel channel_of(Sideband s) {
    switch (s) {
        case Sideband::kRsb: return Channel::kRsb;
        case Sideband::kBsb: return Channel::kBsb;
        case Sideband::kF1: return Channel::kF1;
        case Sideband::kF2: return Channel::kF2;
        case Sideband::kNone: break;
    }
    throw ConfigError("sideband 'none' has no channel");
}

void FrequencyPlan::set(Channel c, double frequency, double phase_origin) {
    if (!std::isfinite(frequency) || !std::isfinite(phase_origin))
        throw ConfigError("freqplan: " + channel_name(c) + " frequency and phase must be finite");
    channels_[idx(c)] = {frequency, phase_origin, true};
}

void FrequencyPlan::configure_mm_from_carrier() {
    if (!configured(Channel::kCarrier)) throw ConfigError("freqplan: carrier channel not configured");
    const SourceChannel &mm = get(Channel::kMm);
    set(Channel::kMm, get(Channel::kCarrier).frequency + trap_drive / 2.0, mm.phase_origin);
}

void FrequencyPlan::configure_ms(double offset_hz, double rsb_origin, double bsb_origin) {
    if (!configured(Channel::kF1)) throw ConfigError("freqplan: f1 channel not configured");
    const double f1 = get(Channel::kF1).frequency;
    set(Channel::kRsb, f1 - offset_hz, rsb_origin);
    set(Channel::kBsb, f1 + offset_hz, bsb_origin);
}

void FrequencyPlan::validate(double tol_hz) const {
    if (!(trap_drive > 0.0)) throw ConfigError("freqplan: trap_drive must be > 0");
    if (configured(Channel::kCarrier) && configured(Channel::kMm)) {
        const double d = std::abs(get(Channel::kMm).frequency - get(Channel::kCarrier).frequency);
        if (std::abs(d - trap_drive / 2.0) > tol_hz)
            throw ConfigError("freqplan: carrier and mm must differ by trap_drive / 2");
    }
    if (configured(Channel::kRsb) && configured(Channel::kBsb) && configured(Channel::kF1)) {
        const double f1 = get(Channel::kF1).frequency;
        if (std::abs((get(Channel::kRsb).frequency - f1) + (get(Channel::kBsb).frequency - f1)) > tol_hz)
            throw ConfigError("freqplan: rsb and bsb must be symmetric about f1");
    }
}

double pulse_frequency(const FrequencyPlan &plan, PulseSelect sel) {
    const Channel pc = channel_of(sel.path);
    if (!plan.configured(Channel::kBase)) throw ConfigError("freqplan: base channel not configured");
    if (!plan.configured(pc)) throw ConfigError("freqplan: " + channel_name(pc) + " channel not configured");
    double f = 2.0 * (plan.get(Channel::kBase).frequency + plan.get(pc).frequency);
    if (sel.sideband != Sideband::kNone) {
        const Channel sc = channel_of(sel.sideband);
        if (!plan.configured(sc)) throw ConfigError("freqplan: " + channel_name(sc) + " channel not configured");
        f += plan.get(sc).frequency;
    }
    return f;
}

std::string frequency_table(const FrequencyPlan &plan) {
    std::string out = "path     sideband  offset_MHz\n";
    char buf[96];
    for (Path p : {Path::kCarrier, Path::kMm})
        for (Sideband s : {Sideband::kNone, Sideband::kRsb, Sideband::kBsb, Sideband::kF1, Sideband::kF2}) {
            if (!plan.configured(Channel::kBase) || !plan.configured(channel_of(p))) continue;
            if (s != Sideband::kNone && !plan.configured(channel_of(s))) continue;
            std::snprintf(buf, sizeof buf, "%-8s %-9s %.6f\n", path_name(p).c_str(), sideband_name(s).c_str(),
                          pulse_frequency(plan, {p, s}) / 1e6);
            out += buf;
        }
    return out;
}

DriftCorrection compensate_drift(const DriftModel &m, double t) {
    const auto &pts = m.points;
    if (pts.empty()) throw ConfigError("compensate_drift: empty calibration set");
    if (!(m.max_curvature >= 0.0) || !(m.max_slope >= 0.0))
        throw ConfigError("compensate_drift: slope and curvature bounds must be >= 0");
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i].time > pts[i - 1].time)) throw ConfigError("compensate_drift: calibration times must increase");
    if (t < pts.front().time) throw ConfigError("compensate_drift: time precedes the first calibration");

    DriftCorrection r;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double slope = (pts[i].offset - pts[i - 1].offset) / (pts[i].time - pts[i - 1].time);
        if (std::abs(slope) > m.max_slope * (1.0 + 1e-12)) r.slope_warning = true;
    }
    if (pts.size() == 1) {
        r.offset = pts[0].offset;
        const double s = t - pts[0].time;
        r.extrapolated = s > 0.0;
        r.residual_bound = m.max_slope * s;
    } else {
        auto it = std::upper_bound(pts.begin(), pts.end(), t,
                                   [](double v, const CalibrationPoint &p) { return v < p.time; });
        std::size_t hi = static_cast<std::size_t>(it - pts.begin());
        if (hi >= pts.size()) hi = pts.size() - 1;
        const CalibrationPoint &a = pts[hi - 1], &b = pts[hi];
        const double h = b.time - a.time;
        const double slope = (b.offset - a.offset) / h;
        r.offset = a.offset + slope * (t - a.time);
        if (t > b.time) {
            const double s = t - b.time;
            if (s > h * (1.0 + 1e-12))
                throw ConfigError("compensate_drift: extrapolation beyond one calibration interval");
            r.extrapolated = true;
            r.residual_bound = 0.5 * m.max_curvature * (h + s) * s;
        } else {
            r.residual_bound = m.max_curvature * h * h / 8.0;
        }
    }
    r.base_correction = -r.offset / 2.0;
    return r;
}

double max_step(const DriftModel &m) {
    double s = 0.0;
    for (std::size_t i = 1; i < m.points.size(); ++i)
        s = std::max(s, std::abs(m.points[i].offset - m.points[i - 1].offset));
    return s;
}

double channel_phase(const FrequencyPlan &plan, const std::vector<FrequencyUpdate> &updates, Channel c, double t) {
    return to_rad(channel_turns(plan, updates, c, t));
}

std::vector<LedgerRow> phase_ledger(const FrequencyPlan &plan, const PulseSequence &seq) {
    for (std::size_t i = 1; i < seq.pulses.size(); ++i)
        if (!(seq.pulses[i].start > seq.pulses[i - 1].start))
            throw ConfigError("phase_ledger: pulse start times must be strictly increasing");
    for (std::size_t i = 0; i < seq.updates.size(); ++i) {
        const auto &u = seq.updates[i];
        if (i > 0 && u.time < seq.updates[i - 1].time) throw ConfigError("phase_ledger: updates must be time-sorted");
        if (!(u.time >= 0.0)) throw ConfigError("phase_ledger: update times must be >= 0");
        if (!plan.configured(u.channel))
            throw ConfigError("phase_ledger: update to unconfigured channel " + channel_name(u.channel));
    }
    std::vector<LedgerRow> rows;
    rows.reserve(seq.pulses.size());
    for (const auto &p : seq.pulses) {
        if (!(p.start >= 0.0)) throw ConfigError("phase_ledger: pulse start must be >= 0");
        (void)pulse_frequency(plan, p.select);
        LedgerRow r;
        r.label = p.label;
        r.start = p.start;
        std::array<double, kChannelCount> turns{};
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const auto ch = static_cast<Channel>(c);
            if (!plan.configured(ch)) continue;
            turns[c] = channel_turns(plan, seq.updates, ch, p.start);
            r.channel_phase[c] = to_rad(turns[c]);
        }
        std::vector<Channel> used{channel_of(p.select.path)};
        if (p.select.sideband != Sideband::kNone) used.push_back(channel_of(p.select.sideband));
        const Channel pc = used[0];
        r.frequency = 2.0 * (channel_frequency(plan, seq.updates, Channel::kBase, p.start) +
                             channel_frequency(plan, seq.updates, pc, p.start));
        double t = 2.0 * (turns[idx(Channel::kBase)] + turns[idx(pc)]);
        if (used.size() > 1) {
            r.frequency += channel_frequency(plan, seq.updates, used[1], p.start);
            t += turns[idx(used[1])];
        }
        r.phase = to_rad(t);
        for (const auto &u : seq.updates)
            if (u.time <= p.start && std::find(used.begin(), used.end(), u.channel) != used.end())
                r.coherence_reset = true;
        r.flagged = r.coherence_reset && p.phase_sensitive;
        rows.push_back(r);
    }
    return rows;
}

nlohmann::json to_json(const FrequencyPlan &plan) {
    nlohmann::json j;
    j["trap_drive"] = plan.trap_drive;
    nlohmann::json ch = nlohmann::json::object();
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const SourceChannel &s = plan.get(static_cast<Channel>(c));
        if (!s.configured) continue;
        ch[kNames[c]] = {{"frequency", s.frequency},
                         {"phase_origin", s.phase_origin},
                         {"pass_multiplier", pass_multiplier(static_cast<Channel>(c))}};
    }
    j["channels"] = ch;
    return j;
}

FrequencyPlan plan_from_json(const nlohmann::json &j) {
    io::check_keys(j, {"trap_drive", "channels"}, "freqplan");
    FrequencyPlan p;
    try {
        p.trap_drive = j.value("trap_drive", p.trap_drive);
        const auto ch = j.value("channels", nlohmann::json::object());
        io::check_keys(ch, {"base", "carrier", "mm", "rsb", "bsb", "f1", "f2"}, "freqplan.channels");
        for (const auto &[name, v] : ch.items()) {
            io::check_keys(v, {"frequency", "phase_origin", "pass_multiplier"}, ("freqplan.channels." + name).c_str());
            const Channel c = parse_channel(name);
            if (v.contains("pass_multiplier") && v.at("pass_multiplier").get<int>() != pass_multiplier(c))
                throw ConfigError("freqplan.channels." + name + ": pass_multiplier is fixed by the channel");
            p.set(c, v.at("frequency").get<double>(), v.value("phase_origin", 0.0));
        }
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("freqplan: ") + e.what());
    }
    p.validate();
    return p;
}

nlohmann::json to_json(const std::vector<LedgerRow> &rows) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto &r : rows) {
        nlohmann::json ph = nlohmann::json::object();
        for (std::size_t c = 0; c < kChannelCount; ++c) ph[kNames[c]] = r.channel_phase[c];
        a.push_back({{"label", r.label},
                     {"start", r.start},
                     {"frequency", r.frequency},
                     {"phase", r.phase},
                     {"channel_phase", ph},
                     {"coherence_reset", r.coherence_reset},
                     {"flagged", r.flagged}});
    }
    return a;
}

DriftModel drift_from_json(const nlohmann::json &j) {
    io::check_keys(j, {"points", "max_slope", "max_curvature"}, "drift");
    DriftModel m;
    try {
        m.max_slope = j.value("max_slope", m.max_slope);
        m.max_curvature = j.value("max_curvature", m.max_curvature);
        for (const auto &p : j.value("points", nlohmann::json::array())) {
            if (!p.is_array() || p.size() != 2) throw ConfigError("drift.points: entries must be [time, offset]");
            m.points.push_back({p[0].get<double>(), p[1].get<double>()});
        }
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("drift: ") + e.what());
    }
    return m;
}

PulseSequence sequence_from_json(const nlohmann::json &j) {
    io::check_keys(j, {"pulses", "updates"}, "sequence");
    PulseSequence s;
    try {
        for (const auto &p : j.value("pulses", nlohmann::json::array())) {
            io::check_keys(p, {"label", "start", "duration", "path", "sideband", "phase_sensitive"}, "sequence.pulses");
            Pulse q;
            q.label = p.value("label", "");
            q.start = p.at("start").get<double>();
            q.duration = p.value("duration", 0.0);
            q.select = {parse_path(p.value("path", "carrier")), parse_sideband(p.value("sideband", "none"))};
            q.phase_sensitive = p.value("phase_sensitive", true);
            s.pulses.push_back(q);
        }
        for (const auto &u : j.value("updates", nlohmann::json::array())) {
            io::check_keys(u, {"time", "channel", "frequency"}, "sequence.updates");
            s.updates.push_back({u.at("time").get<double>(), parse_channel(u.at("channel").get<std::string>()),
                                 u.at("frequency").get<double>()});
        }
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("sequence: ") + e.what());
    }
    return s;
}

std::string ledger_to_csv(const std::vector<LedgerRow> &rows) {
    std::vector<std::string> header{"start", "frequency", "phase"};
    for (const char *n : kNames) header.push_back(std::string("phase_") + n);
    header.push_back("coherence_reset");
    header.push_back("flagged");
    io::CsvWriter w(header);
    for (const auto &r : rows) {
        std::vector<double> v{r.start, r.frequency, r.phase};
        v.insert(v.end(), r.channel_phase.begin(), r.channel_phase.end());
        v.push_back(r.coherence_reset ? 1.0 : 0.0);
        v.push_back(r.flagged ? 1.0 : 0.0);
        w.row(v);
    }
    return w.str();
}

}  // namespace iongate::freqplan
