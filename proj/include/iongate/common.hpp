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

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace iongate {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Bohr magneton over hbar, rad/s per tesla.
inline constexpr double kMuBOverHbar = 8.794100793e10;

/// D5/2 lifetime in 88Sr+ (s).
inline constexpr double kDLifetime = 0.390;

inline constexpr double hz_to_angular(double hz) { return kTwoPi * hz; }
inline constexpr double angular_to_hz(double w) { return w / kTwoPi; }

/// Raised when inputs violate a documented precondition or invariant.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a simulation result is physically invalid (truncation leak,
/// step underflow, unidentifiable fit, ...).
class PhysicsError : public std::runtime_error {
public:
    enum class Kind { kCutoffTooSmall, kLeak, kStepUnderflow, kUnidentifiable, kNonConvergence, kAliasing, kOther };

    PhysicsError(Kind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Populations of zero, one and two qubits in |S>.
struct Populations {
    double p0 = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;

    double sum() const { return p0 + p1 + p2; }
    double parity() const { return p0 + p2 - p1; }
};

}  // namespace iongate
