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

#include "iongate/fitting.hpp"

#include <cmath>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "iongate/common.hpp"

namespace iongate::fitting {

namespace {

struct Functor {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const ResidualFn *fn;
    int n_in;
    int n_out;

    int inputs() const { return n_in; }
    int values() const { return n_out; }
    int operator()(const Eigen::VectorXd &x, Eigen::VectorXd &fvec) const {
        fvec = (*fn)(x);
        return 0;
    }
};

}  // namespace

LsqResult least_squares(const ResidualFn &fn, Eigen::VectorXd initial, int n_residuals, std::span<const double> data) {
    Functor f{&fn, static_cast<int>(initial.size()), n_residuals};
    Eigen::NumericalDiff<Functor> nd(f);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Functor>> lm(nd);
    lm.parameters.maxfev = 4000;
    lm.parameters.xtol = 1e-12;
    lm.parameters.ftol = 1e-12;
    const auto status = lm.minimize(initial);

    LsqResult r;
    r.params = initial;
    const Eigen::VectorXd res = fn(initial);
    r.residual_norm = res.norm();
    r.iterations = static_cast<int>(lm.iter);
    r.converged = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::FtolTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::GtolTooSmall;
    r.converged = r.converged && res.allFinite();
    if (!data.empty()) {
        double mean = 0.0;
        for (double y : data) mean += y;
        mean /= double(data.size());
        double tot = 0.0;
        for (double y : data) tot += (y - mean) * (y - mean);
        r.r_squared = tot > 0.0 ? 1.0 - res.squaredNorm() / tot : 1.0;
    }
    return r;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_line: need >= 2 matching points");
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw ConfigError("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

SinusoidFit fit_sinusoid(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3) throw ConfigError("fit_sinusoid: need >= 3 matching points");
    Eigen::MatrixXd a(x.size(), 3);
    Eigen::VectorXd b(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = std::cos(x[i]);
        a(i, 2) = std::sin(x[i]);
        b(i) = y[i];
    }
    const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
    // offset + C cos x + S sin x = offset + amp cos(x + phase)
    SinusoidFit f;
    f.offset = c(0);
    f.amplitude = std::hypot(c(1), c(2));
    f.phase = std::atan2(-c(2), c(1));
    return f;
}

}  // namespace iongate::fitting
