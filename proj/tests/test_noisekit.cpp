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
#include <numeric>

#include "iongate/noisekit.hpp"

using namespace iongate;
using namespace iongate::noisekit;

namespace {

// One-sided periodogram by direct DFT.
std::vector<double> periodogram(const std::vector<double> &x, double dt) {
    const std::size_t n = x.size();
    std::vector<double> p(n / 2, 0.0);
    for (std::size_t k = 1; k < n / 2; ++k) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += x[j] * std::polar(1.0, -kTwoPi * double(k * j % n) / double(n));
        p[k] = 2.0 * dt / double(n) * std::norm(acc);
    }
    return p;
}

double variance(const std::vector<double> &x) {
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
    double v = 0.0;
    for (double y : x) v += (y - m) * (y - m);
    return v / double(x.size());
}

std::vector<double> grid(double a, double b, double step) {
    std::vector<double> v;
    for (double x = a; x <= b + 1e-9 * std::abs(step); x += step) v.push_back(x);
    return v;
}

}  // namespace

TEST_CASE("cavity transfer") {
    const CavityParams c;
    CHECK(c.transfer(0.0) == 1.0);
    CHECK(c.transfer(1.1e6) == doctest::Approx(1.0 / (1.0 + 100.0 * 100.0)).epsilon(1e-15));
    CHECK(std::abs(c.transfer(1.1e6) - 9.999e-5) < 1e-8);
    CHECK(c.transfer(11e3) == doctest::Approx(0.5).epsilon(1e-15));
    double prev = 2.0;
    for (double f = 0.0; f < 5e6; f += 1234.5) {
        CHECK(c.transfer(f) < prev);
        prev = c.transfer(f);
    }
    CHECK(c.consistent());
    CavityParams off = c;
    off.linewidth_hz = 40e3;
    CHECK_FALSE(off.consistent());
}

TEST_CASE("cavity filter scales continuous parts and lines") {
    NoisePsd p = servo_bump_psd(0.1);
    p.white_level = 3.0;
    p.lines.push_back({50.0, 2.0});
    p.lines.push_back({2e5, 1.0});
    const CavityParams c;
    const auto f = cavity_filter(p, c);
    for (double hz : {10.0, 5e3, 3e5, 1.1e6, 2.4e6})
        CHECK(f.density(hz) == doctest::Approx(p.density(hz) * c.transfer(hz)).epsilon(1e-12));
    CHECK(f.line_rms(0) == doctest::Approx(2.0 * std::sqrt(c.transfer(50.0))));
    CHECK(f.line_rms(1) == doctest::Approx(std::sqrt(c.transfer(2e5))));
}

TEST_CASE("bump phase density integrates to its power") {
    const Bump b{1.1e6, 1e6, 0.3};
    double acc = 0.0;
    const double h = 500.0;
    for (double f = 0.5 * h; f < 8e6; f += h) acc += bump_phase_density(b, f) * h;
    CHECK(acc == doctest::Approx(0.3).epsilon(1e-6));
    // FWHM of the positive-frequency peak.
    const double peak = bump_phase_density(b, 1.1e6);
    CHECK(bump_phase_density(b, 1.6e6) == doctest::Approx(0.5 * peak).epsilon(2e-3));
}

TEST_CASE("band power matches numerical integration of the density") {
    NoisePsd p = servo_bump_psd(0.05);
    p.white_level = 2.0;
    p.flicker_level = 40.0;
    p.flicker_cutoff_hz = 0.5;
    p = cavity_filter(p, CavityParams{});
    for (auto [lo, hi] : {std::pair{1.0, 3.0}, std::pair{0.1, 2.0}, std::pair{1.0e6, 1.0005e6}}) {
        double acc = 0.0;
        const int n = 20000;
        const double h = (hi - lo) / n;
        for (int i = 0; i < n; ++i) acc += p.density(lo + (i + 0.5) * h) * h;
        CHECK(p.band_power(lo, hi) == doctest::Approx(acc).epsilon(1e-3));
    }
}

TEST_CASE("synthesize: zero spectrum gives zeros") {
    const auto tr = synthesize(NoisePsd{}, 1e-3, 1e-6, 5);
    CHECK(tr.samples.size() == 1000);
    for (double s : tr.samples) CHECK(s == 0.0);
}

TEST_CASE("synthesize: white noise periodogram is flat") {
    NoisePsd p;
    p.white_level = 4.0;
    const double dt = 1e-6;
    const std::size_t n = 1024;
    std::vector<double> avg(n / 2, 0.0);
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
        const auto tr = synthesize(p, n * dt, dt, 100 + s);
        REQUIRE(tr.samples.size() == n);
        const auto pg = periodogram(tr.samples, dt);
        for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += pg[k] / seeds;
    }
    // Octave bands spanning two decades of frequency.
    for (std::size_t lo = 4; lo < 512; lo *= 2) {
        double band = 0.0;
        for (std::size_t k = lo; k < 2 * lo && k < avg.size(); ++k) band += avg[k];
        band /= double(std::min<std::size_t>(2 * lo, avg.size()) - lo);
        CHECK(std::abs(10.0 * std::log10(band / p.white_level)) < 1.0);
    }
}

TEST_CASE("synthesize: filtered bump spectrum round trip") {
    NoisePsd p = servo_bump_psd(0.1);
    p.white_level = 1e9;
    const double dt = 50e-9;
    const std::size_t n = 512;
    std::vector<double> avg(n / 2, 0.0);
    const int seeds = 60;
    for (int s = 0; s < seeds; ++s) {
        const auto pg = periodogram(synthesize(p, n * dt, dt, 900 + s).samples, dt);
        for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += pg[k] / seeds;
    }
    const double df = 1.0 / (n * dt);
    for (std::size_t lo = 8; lo + 16 <= avg.size(); lo += 16) {
        double band = 0.0, target = 0.0;
        for (std::size_t k = lo; k < lo + 16; ++k) {
            band += avg[k];
            target += p.density(double(k) * df);
        }
        CHECK(std::abs(10.0 * std::log10(band / target)) < 1.5);
    }
}

TEST_CASE("synthesize: tone variance") {
    NoisePsd p;
    p.lines.push_back({50.0, 2.0});
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto tr = synthesize(p, 1.0, 1e-3, seed);
        CHECK(variance(tr.samples) == doctest::Approx(4.0).epsilon(0.05));
    }
    p.lines[0].policy = PhasePolicy::kFixed;
    p.lines[0].phase = 0.0;
    const auto a = synthesize(p, 0.1, 1e-3, 1);
    const auto b = synthesize(p, 0.1, 1e-3, 2);
    CHECK(a.samples == b.samples);
}

TEST_CASE("synthesize: quasi-static offset is constant within a record") {
    NoisePsd p;
    p.quasi_static_rms = 3.0;
    std::vector<double> offsets;
    for (std::uint64_t s = 0; s < 400; ++s) {
        const auto tr = synthesize(p, 1e-3, 1e-5, s);
        CHECK(tr.samples.front() == tr.samples.back());
        offsets.push_back(tr.samples.front());
    }
    CHECK(std::sqrt(variance(offsets)) == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("synthesize: reproducible and guarded") {
    NoisePsd p = servo_bump_psd(0.1);
    const auto a = synthesize(p, 1e-4, 5e-8, 9);
    const auto b = synthesize(p, 1e-4, 5e-8, 9);
    CHECK(a.samples == b.samples);
    CHECK(synthesize(p, 1e-4, 5e-8, 10).samples != a.samples);
    CHECK(a.duration() >= 1e-4 - 1e-12);
    try {
        synthesize(p, 1e-4, 1.5e-7, 9);
        FAIL("expected aliasing error");
    } catch (const PhysicsError &e) {
        CHECK(e.kind() == PhysicsError::Kind::kAliasing);
    }
    NoisePsd bad;
    bad.bumps.push_back({1e6, 0.0, 1.0});
    CHECK_THROWS_AS(synthesize(bad, 1e-4, 1e-8, 1), ConfigError);
}

TEST_CASE("rabi: noise-free limits") {
    DriveOptions o;
    o.omega = kTwoPi * 5e3;  // pi pulse at 100 us
    o.realizations = 1;
    const auto s = rabi_spectroscopy(NoisePsd{}, 100e-6, {0.0, 20e3, 250e3}, o);
    CHECK(s.excitation[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < 3; ++i) {
        const double d = hz_to_angular(s.detuning_hz[i]);
        const double w = std::hypot(o.omega, d);
        const double oracle = std::pow(o.omega / w * std::sin(0.5 * w * 100e-6), 2);
        CHECK(std::abs(s.excitation[i] - oracle) < 1e-6);
        CHECK(std::abs(s.excess()[i]) < 1e-6);
    }
    const auto c = saturation_curve(NoisePsd{}, 10e6, grid(0.0, 400e-6, 20e-6), 0.0, DriveOptions{});
    for (double e : c.excitation) CHECK(e < 1e-3);
}

TEST_CASE("rabi: servo-bump shoulders and their suppression by the cavity") {
    const NoisePsd raw = servo_bump_psd(0.08);
    const NoisePsd filtered = cavity_filter(raw, CavityParams{});
    DriveOptions o;
    o.realizations = 24;
    o.seed = 4;
    const auto det = grid(-2.0e6, 2.0e6, 0.1e6);
    const auto a = rabi_spectroscopy(raw, 100e-6, det, o);
    const auto b = rabi_spectroscopy(filtered, 100e-6, det, o);
    const double sa = shoulder_level(a, 1.1e6, 1e6);
    const double sb = shoulder_level(b, 1.1e6, 1e6);
    MESSAGE("shoulder excess raw " << sa << " filtered " << sb);
    CHECK(sa > 0.05);
    CHECK(10.0 * std::log10(sa / std::max(std::abs(sb), 1e-300)) >= 25.0);
    // Away from the bumps and the carrier the noise leaves the spectrum alone.
    const auto ex = a.excess();
    for (std::size_t i = 0; i < det.size(); ++i)
        if (std::abs(std::abs(det[i]) - 1.1e6) > 0.8e6 && std::abs(det[i]) > 0.25e6) CHECK(std::abs(ex[i]) < 0.05);
}

TEST_CASE("saturation: short-time excess grows linearly with bump power") {
    DriveOptions o;
    o.realizations = 200;
    o.seed = 21;
    const auto t = grid(0.0, 60e-6, 10e-6);
    const auto c1 = saturation_curve(servo_bump_psd(0.01), 1.1e6, t, 60e-6, o);
    const auto c2 = saturation_curve(servo_bump_psd(0.02), 1.1e6, t, 60e-6, o);
    CHECK(c1.slope > 0.0);
    CHECK(c2.slope / c1.slope == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("saturation: bump power calibration") {
    NoisePsd p = servo_bump_psd(0.0);
    DriveOptions o;
    o.realizations = 40;
    o.seed = 5;
    const double power = calibrate_bump_power(p, 0, 1.1e6, 400e-6, 0.3, o);
    CHECK(power > 0.0);
    CHECK(p.bumps[0].power == power);
    const auto c = saturation_curve(p, 1.1e6, {400e-6}, 0.0, o);
    CHECK(c.excitation[0] == doctest::Approx(0.3).epsilon(1e-3));
    CHECK_THROWS_AS(calibrate_bump_power(p, 3, 1.1e6, 400e-6, 0.3, o), ConfigError);
    CHECK_THROWS_AS(calibrate_bump_power(p, 0, 1.1e6, 400e-6, 0.6, o), ConfigError);
}

TEST_CASE("white frequency noise gives exponential Ramsey decay at the Lorentzian rate") {
    const double linewidth = 11.0;  // Hz FWHM
    NoisePsd p;
    p.white_level = 4.0 * kPi * linewidth;
    DriveOptions o;
    o.realizations = 2000;
    o.seed = 8;
    o.dt = 20e-6;
    const double tau = 1.0 / (kPi * linewidth);
    const std::vector<double> times{0.25 * tau, 0.5 * tau, tau};
    const auto c = ramsey_coherence(p, times, o);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double fitted = -times[i] / std::log(c[i]);
        CHECK(fitted == doctest::Approx(tau).epsilon(0.1));
    }
}

TEST_CASE("noise results do not depend on the thread count") {
    DriveOptions o;
    o.realizations = 8;
    o.seed = 2;
    o.threads = 1;
    const auto a = saturation_curve(servo_bump_psd(0.05), 1.1e6, {50e-6, 100e-6}, 0.0, o);
    o.threads = 3;
    const auto b = saturation_curve(servo_bump_psd(0.05), 1.1e6, {50e-6, 100e-6}, 0.0, o);
    CHECK(a.excitation == b.excitation);
}

TEST_CASE("psd json round trip") {
    NoisePsd p = cavity_filter(servo_bump_psd(0.07), CavityParams{});
    p.white_level = 1.5;
    p.flicker_level = 2.5;
    p.lines.push_back({50.0, 0.3, PhasePolicy::kFixed, 0.4});
    const auto q = psd_from_json(to_json(p));
    CHECK(to_json(q) == to_json(p));
    auto j = to_json(p);
    j["whte_level"] = 1.0;
    CHECK_THROWS_AS(psd_from_json(j), ConfigError);
    auto k = to_json(p);
    k["white_level"] = -1.0;
    CHECK_THROWS_AS(psd_from_json(k), ConfigError);
}
