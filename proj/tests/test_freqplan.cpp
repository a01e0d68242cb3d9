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


#include <doctest.h>

#include <cmath>
#include <random>

#include "iongate/freqplan.hpp"
#include "iongate/rng.hpp"

using namespace iongate;
using namespace iongate::freqplan;

namespace {

FrequencyPlan full_plan() {
    FrequencyPlan p;
    p.set(Channel::kBase, 80e6);
    p.set(Channel::kCarrier, 110e6);
    p.configure_mm_from_carrier();
    p.set(Channel::kF1, 200e6, 0.3);
    p.configure_ms(1.2e6, 0.7, 2.1);
    p.set(Channel::kF2, 180e6, 1.0);
    return p;
}

const Sideband kSidebands[] = {Sideband::kNone, Sideband::kRsb, Sideband::kBsb, Sideband::kF1, Sideband::kF2};

double wrap(double x) {
    x = std::fmod(x, kTwoPi);
    return x < 0 ? x + kTwoPi : x;
}

double circ_diff(double a, double b) {
    const double d = wrap(a - b);
    return std::min(d, kTwoPi - d);
}

}  // namespace

TEST_CASE("carrier to mm switch is 21.75 MHz at the output") {
    const FrequencyPlan p = full_plan();
    CHECK(p.get(Channel::kMm).frequency - p.get(Channel::kCarrier).frequency == 10.875e6);
    for (Sideband s : kSidebands)
        CHECK(pulse_frequency(p, {Path::kMm, s}) - pulse_frequency(p, {Path::kCarrier, s}) == 21.75e6);
}

TEST_CASE("sum rule over every path and sideband") {
    const FrequencyPlan p = full_plan();
    const double base = 80e6, carrier = 110e6, mm = 120.875e6;
    const double single[] = {0.0, 198.8e6, 201.2e6, 200e6, 180e6};
    int i = 0;
    for (Sideband s : kSidebands) {
        CHECK(pulse_frequency(p, {Path::kCarrier, s}) == doctest::Approx(2 * (base + carrier) + single[i]).epsilon(1e-15));
        CHECK(pulse_frequency(p, {Path::kMm, s}) == doctest::Approx(2 * (base + mm) + single[i]).epsilon(1e-15));
        ++i;
    }
}

TEST_CASE("base shift moves every output by twice the shift") {
    for (double x : {0.5, -1234.5, 2e3, 37.25e3}) {
        FrequencyPlan a = full_plan(), b = full_plan();
        b.set(Channel::kBase, a.get(Channel::kBase).frequency + x);
        for (Path path : {Path::kCarrier, Path::kMm})
            for (Sideband s : kSidebands) CHECK(pulse_frequency(b, {path, s}) - pulse_frequency(a, {path, s}) == 2 * x);
    }
}

TEST_CASE("rsb and bsb outputs are symmetric about the f1 output") {
    const FrequencyPlan p = full_plan();
    for (Path path : {Path::kCarrier, Path::kMm}) {
        const double f1 = pulse_frequency(p, {path, Sideband::kF1});
        CHECK(f1 - pulse_frequency(p, {path, Sideband::kRsb}) == pulse_frequency(p, {path, Sideband::kBsb}) - f1);
    }
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("plan validation") {
    FrequencyPlan p = full_plan();
    p.set(Channel::kMm, 121e6);
    CHECK_THROWS_AS(p.validate(), ConfigError);
    FrequencyPlan q = full_plan();
    q.set(Channel::kBsb, 201.3e6);
    CHECK_THROWS_AS(q.validate(), ConfigError);
    FrequencyPlan r;
    r.set(Channel::kBase, 80e6);
    CHECK_THROWS_AS(pulse_frequency(r, {Path::kCarrier, Sideband::kNone}), ConfigError);
    r.set(Channel::kCarrier, 110e6);
    CHECK_NOTHROW(pulse_frequency(r, {Path::kCarrier, Sideband::kNone}));
    CHECK_THROWS_AS(pulse_frequency(r, {Path::kCarrier, Sideband::kF2}), ConfigError);
}

TEST_CASE("frequency table lists every configured combination") {
    const std::string t = frequency_table(full_plan());
    CHECK(std::count(t.begin(), t.end(), '\n') == 11);
    CHECK(t.find("380.000000") != std::string::npos);
}

TEST_CASE("linear drift is interpolated exactly") {
    DriftModel m;
    for (int i = 0; i <= 5; ++i) m.points.push_back({180.0 * i, 10.0 + 25.0 * 180.0 * i});
    m.max_slope = 30.0;
    for (double t = 0; t <= 900; t += 7.3) {
        const DriftCorrection c = compensate_drift(m, t);
        CHECK(c.offset == doctest::Approx(10.0 + 25.0 * t).epsilon(1e-12));
        CHECK(c.residual_bound == 0.0);
        CHECK(c.base_correction == doctest::Approx(-c.offset / 2));
        CHECK_FALSE(c.slope_warning);
    }
}

TEST_CASE("slope-bounded drift moves at most 6 kHz per 3-minute interval") {
    Engine eng(4);
    std::uniform_real_distribution<double> u(0, 1);
    const double max_slope = 2e3 / 60.0;
    for (int rep = 0; rep < 20; ++rep) {
        const double w = 2 * kPi / (600 + 3000 * u(eng));
        const double a = max_slope / w * u(eng), ph = kTwoPi * u(eng);
        DriftModel m;
        m.max_slope = max_slope;
        for (int i = 0; i <= 20; ++i) {
            const double t = 180.0 * i;
            m.points.push_back({t, a * std::sin(w * t + ph)});
        }
        CHECK(max_step(m) <= 6e3);
        CHECK_FALSE(compensate_drift(m, 100.0).slope_warning);
    }
}

TEST_CASE("quadratic drift residual matches K h^2 / 8") {
    DriftModel m;
    m.max_curvature = 1.0;
    m.max_slope = 1e9;
    auto f = [](double t) { return 0.5 * t * t; };
    for (int i = 0; i <= 4; ++i) m.points.push_back({180.0 * i, f(180.0 * i)});
    double worst = 0, bound = 0;
    for (double t = 0; t <= 720; t += 0.01) {
        const DriftCorrection c = compensate_drift(m, t);
        worst = std::max(worst, std::abs(f(t) - c.offset));
        bound = std::max(bound, c.residual_bound);
    }
    CHECK(bound == doctest::Approx(4050.0).epsilon(1e-12));
    CHECK(worst == doctest::Approx(4050.0).epsilon(0.01));
}

TEST_CASE("residual never exceeds the bound for curvature-bounded drifts") {
    Engine eng(8);
    std::uniform_real_distribution<double> u(0, 1);
    for (int rep = 0; rep < 30; ++rep) {
        const double K = 0.01 + u(eng);
        // sum of sinusoids and a parabola with total |f''| <= K
        double share[3] = {u(eng), u(eng), u(eng)};
        const double norm = share[0] + share[1] + share[2];
        const double w1 = 2 * kPi / (200 + 2000 * u(eng)), w2 = 2 * kPi / (200 + 2000 * u(eng));
        const double a1 = K * share[0] / norm / (w1 * w1), a2 = K * share[1] / norm / (w2 * w2);
        const double c2 = (u(eng) < 0.5 ? -0.5 : 0.5) * K * share[2] / norm;
        const double p1 = kTwoPi * u(eng), p2 = kTwoPi * u(eng);
        auto f = [&](double t) { return a1 * std::sin(w1 * t + p1) + a2 * std::cos(w2 * t + p2) + c2 * t * t; };
        DriftModel m;
        m.max_curvature = K;
        m.max_slope = 1e12;
        double t = 0;
        for (int i = 0; i < 8; ++i) {
            m.points.push_back({t, f(t)});
            t += 60 + 240 * u(eng);
        }
        const double h_last = m.points.back().time - m.points[m.points.size() - 2].time;
        const double end = m.points.back().time + h_last;
        for (double s = 0; s <= end; s += 0.5) {
            const DriftCorrection c = compensate_drift(m, s);
            CHECK(std::abs(f(s) - c.offset) <= c.residual_bound * (1 + 1e-9) + 1e-9);
        }
    }
}

TEST_CASE("drift extrapolation and errors") {
    DriftModel m;
    CHECK_THROWS_AS(compensate_drift(m, 0.0), ConfigError);
    m.max_curvature = 2.0;
    m.points = {{0, 0}, {100, 50}};
    const DriftCorrection c = compensate_drift(m, 150);
    CHECK(c.extrapolated);
    CHECK(c.offset == doctest::Approx(75));
    CHECK(c.residual_bound == doctest::Approx(0.5 * 2.0 * 150 * 50));
    CHECK_THROWS_AS(compensate_drift(m, 201), ConfigError);
    CHECK_THROWS_AS(compensate_drift(m, -1), ConfigError);
    m.max_slope = 0.1;
    CHECK(compensate_drift(m, 50).slope_warning);
    m.points = {{0, 0}, {0, 1}};
    CHECK_THROWS_AS(compensate_drift(m, 0), ConfigError);
}

TEST_CASE("pulses an integer number of periods apart share their phase") {
    FrequencyPlan p;
    p.set(Channel::kBase, 80e6, 0.4);
    p.set(Channel::kCarrier, 110e6, 1.1);
    p.set(Channel::kF2, 3e6, 2.0);
    PulseSequence s;
    s.pulses = {{"a", 1e-6, 1e-6, {Path::kCarrier, Sideband::kF2}},
                {"b", 1e-6 + 1e-3, 1e-6, {Path::kCarrier, Sideband::kF2}},
                {"c", 1e-6 + 7e-3, 1e-6, {Path::kCarrier, Sideband::kF2}}};
    const auto rows = phase_ledger(p, s);
    CHECK(circ_diff(rows[0].phase, rows[1].phase) < 1e-9);
    CHECK(circ_diff(rows[0].phase, rows[2].phase) < 1e-9);
    CHECK_FALSE(rows[1].coherence_reset);
}

TEST_CASE("channel phase follows frequency updates continuously") {
    FrequencyPlan p = full_plan();
    const std::vector<FrequencyUpdate> up = {{2e-3, Channel::kBase, 80.001e6}, {5e-3, Channel::kBase, 79.9995e6}};
    const double t = 7.5e-3;
    // phase accrued piecewise, reduced per segment in turns
    const double turns = std::fmod(80e6 * 2e-3, 1.0) + std::fmod(80.001e6 * 3e-3, 1.0) + std::fmod(79.9995e6 * 2.5e-3, 1.0);
    CHECK(circ_diff(channel_phase(p, up, Channel::kBase, t), wrap(kTwoPi * turns)) < 1e-9);
    CHECK(circ_diff(channel_phase(p, {}, Channel::kF1, 0.0), 0.3) < 1e-12);
}

TEST_CASE("rsb-bsb relative phase is immune to base ramps") {
    const FrequencyPlan p = full_plan();
    PulseSequence s;
    for (int i = 0; i < 6; ++i) {
        const double t = 1e-4 + 2.3e-4 * i;
        s.pulses.push_back({"r", t, 1e-6, {Path::kCarrier, Sideband::kRsb}});
        s.pulses.push_back({"b", t + 1e-7, 1e-6, {Path::kCarrier, Sideband::kBsb}});
    }
    const auto plain = phase_ledger(p, s);
    Engine eng(12);
    std::uniform_real_distribution<double> u(-5e3, 5e3);
    PulseSequence ramped = s;
    for (int k = 0; k < 40; ++k) ramped.updates.push_back({3e-5 * k, Channel::kBase, 80e6 + u(eng)});
    const auto rows = phase_ledger(p, ramped);
    const std::size_t ir = static_cast<std::size_t>(Channel::kRsb), ib = static_cast<std::size_t>(Channel::kBsb);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double rel = rows[i].channel_phase[ir] - rows[i].channel_phase[ib];
        const double rel0 = plain[i].channel_phase[ir] - plain[i].channel_phase[ib];
        CHECK(circ_diff(rel, rel0) < 1e-9);
        const double t = rows[i].start;
        const double expect = 0.7 - 2.1 + kTwoPi * std::fmod((198.8e6 - 201.2e6) * t, 1.0);
        CHECK(circ_diff(rel, expect) < 1e-9);
        CHECK_FALSE(rows[i].coherence_reset);
    }
    CHECK(rows[5].frequency != plain[5].frequency);
}

TEST_CASE("retuning f2 flags later phase-sensitive pulses") {
    const FrequencyPlan p = full_plan();
    PulseSequence s;
    s.pulses = {{"f2-early", 1e-5, 1e-6, {Path::kCarrier, Sideband::kF2}},
                {"f2-late", 3e-5, 1e-6, {Path::kCarrier, Sideband::kF2}},
                {"f2-late-insensitive", 4e-5, 1e-6, {Path::kCarrier, Sideband::kF2}, false},
                {"f1-late", 5e-5, 1e-6, {Path::kCarrier, Sideband::kF1}}};
    s.updates = {{2e-5, Channel::kF2, 181e6}};
    const auto rows = phase_ledger(p, s);
    CHECK_FALSE(rows[0].coherence_reset);
    CHECK(rows[1].coherence_reset);
    CHECK(rows[1].flagged);
    CHECK(rows[2].coherence_reset);
    CHECK_FALSE(rows[2].flagged);
    CHECK_FALSE(rows[3].coherence_reset);
    CHECK(rows[1].frequency - rows[0].frequency == doctest::Approx(1e6));
}

TEST_CASE("ledger input validation") {
    const FrequencyPlan p = full_plan();
    PulseSequence s;
    s.pulses = {{"a", 2e-5, 0, {}}, {"b", 1e-5, 0, {}}};
    CHECK_THROWS_AS(phase_ledger(p, s), ConfigError);
    FrequencyPlan q;
    q.set(Channel::kBase, 1e6);
    q.set(Channel::kCarrier, 1e6);
    PulseSequence t;
    t.updates = {{0, Channel::kF2, 1e6}};
    CHECK_THROWS_AS(phase_ledger(q, t), ConfigError);
}

TEST_CASE("freqplan json round trip") {
    const FrequencyPlan p = full_plan();
    const FrequencyPlan q = plan_from_json(to_json(p));
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const auto ch = static_cast<Channel>(c);
        CHECK(q.get(ch).frequency == p.get(ch).frequency);
        CHECK(q.get(ch).phase_origin == p.get(ch).phase_origin);
    }
    CHECK(to_json(p)["channels"]["base"]["pass_multiplier"] == 2);
    CHECK(to_json(p)["channels"]["f1"]["pass_multiplier"] == 1);
    CHECK_THROWS_AS(plan_from_json({{"channels", {{"laser", {{"frequency", 1.0}}}}}}), ConfigError);
    const PulseSequence s = sequence_from_json(
        {{"pulses", {{{"start", 1e-5}, {"path", "mm"}, {"sideband", "bsb"}}}}, {"updates", {{{"time", 0}, {"channel", "f2"}, {"frequency", 1e6}}}}});
    CHECK(s.pulses[0].select.path == Path::kMm);
    CHECK(s.pulses[0].select.sideband == Sideband::kBsb);
    CHECK(s.updates[0].channel == Channel::kF2);
    const DriftModel d = drift_from_json({{"points", {{0, 1}, {180, 2}}}, {"max_curvature", 1.0}});
    CHECK(d.points.size() == 2);
}
