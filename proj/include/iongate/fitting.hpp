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
#include <functional>
#include <span>

namespace iongate::fitting {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd &)>;

struct LsqResult {
    Eigen::VectorXd params;
    double residual_norm = 0.0;
    double r_squared = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Levenberg-Marquardt with forward-difference Jacobian. `n_residuals` is
/// the length of the vector returned by `fn`; `data` (optional) is used to
/// report R^2 against the residual vector.
LsqResult least_squares(const ResidualFn &fn, Eigen::VectorXd initial, int n_residuals,
                        std::span<const double> data = {});

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Amplitude and phase of y = offset + amp * cos(x + phase) by linear least
/// squares on (1, cos x, sin x).
struct SinusoidFit {
    double offset = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;
};
SinusoidFit fit_sinusoid(std::span<const double> x, std::span<const double> y);

}  // namespace iongate::fitting
