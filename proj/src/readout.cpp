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


#include "iongate/readout.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "iongate/io.hpp"
#include "iongate/rng.hpp"

namespace iongate::readout {

void DetectionModel::validate() const {
    if (!(lambda_dark >= 0.0)) throw ConfigError("detection: lambda_dark must be >= 0");
    if (!(lambda_bright > lambda_dark)) throw ConfigError("detection: lambda_bright must exceed lambda_dark");
    if (!(window > 0.0)) throw ConfigError("detection: window must be > 0");
    if (!(lifetime >= 0.0)) throw ConfigError("detection: lifetime must be >= 0");
}

double DetectionModel::decay_fraction() const {
    if (lifetime <= 0.0) return 0.0;
    const double x = window / lifetime;
    return 1.0 + std::expm1(-x) / x;
}

double PhotonHistogram::total() const {
    double s = 0.0;
    for (double v : occurrences) s += v;
    return s;
}

double PhotonHistogram::mean() const {
    double s = 0.0, w = 0.0;
    for (std::size_t n = 0; n < occurrences.size(); ++n) {
        s += static_cast<double>(n) * occurrences[n];
        w += occurrences[n];
    }
    return w > 0.0 ? s / w : 0.0;
}

namespace {

double poisson_pmf(double mean, std::size_t n) {
    const double k = static_cast<double>(n);
    if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

std::array<double, 3> as_array(const Populations &p) { return {p.p0, p.p1, p.p2}; }

void check_pops(const Populations &p) {
    for (double v : as_array(p))
        if (!(v >= -1e-12)) throw ConfigError("readout: populations must be >= 0");
    if (std::abs(p.sum() - 1.0) > 1e-9) throw ConfigError("readout: populations must sum to 1");
}

}  // namespace

PhotonHistogram simulate_histogram(const Populations &pops, const DetectionModel &m, std::uint64_t shots,
                                   std::uint64_t seed) {
    m.validate();
    check_pops(pops);
    Engine eng = derive_engine(seed, {stream::kShots});
    std::discrete_distribution<int> pick({std::max(0.0, pops.p0), std::max(0.0, pops.p1), std::max(0.0, pops.p2)});
    std::exponential_distribution<double> decay(m.lifetime > 0.0 ? 1.0 / m.lifetime : 1.0);
    PhotonHistogram h;
    for (std::uint64_t s = 0; s < shots; ++s) {
        const int k = pick(eng);
        double mean = m.lambda_dark + k * m.lambda_bright;
        if (m.lifetime > 0.0)
            for (int d = k; d < 2; ++d) {
                const double t = decay(eng);
                if (t < m.window) mean += m.lambda_bright * (m.window - t) / m.window;
            }
        const auto n = static_cast<std::size_t>(std::poisson_distribution<long>(mean)(eng));
        if (n >= h.occurrences.size()) h.occurrences.resize(n + 1, 0.0);
        h.occurrences[n] += 1.0;
    }
    return h;
}

double component_pmf(const DetectionModel &m, int k, std::size_t n) {
    if (k < 0 || k > 2) throw ConfigError("component_pmf: k must be 0, 1 or 2");
    const double q = m.decay_correction ? m.decay_fraction() : 0.0;
    if (q == 0.0) return poisson_pmf(m.lambda_dark + k * m.lambda_bright, n);
    const int dark = 2 - k;
    double p = 0.0;
    for (int j = 0; j <= dark; ++j) {
        const double binom = (dark == 2 && j == 1 ? 2.0 : 1.0) * std::pow(q, j) * std::pow(1.0 - q, dark - j);
        p += binom * poisson_pmf(m.lambda_dark + (k + j) * m.lambda_bright, n);
    }
    return p;
}

PhotonHistogram mixture_pmf(const Populations &pops, const DetectionModel &m, std::size_t max_count) {
    m.validate();
    check_pops(pops);
    if (max_count == 0) {
        const double top = m.lambda_dark + 2.0 * m.lambda_bright;
        max_count = static_cast<std::size_t>(std::ceil(top + 15.0 * std::sqrt(top) + 20.0));
    }
    PhotonHistogram h;
    h.occurrences.resize(max_count + 1);
    const auto w = as_array(pops);
    for (std::size_t n = 0; n <= max_count; ++n)
        for (int k = 0; k < 3; ++k) h.occurrences[n] += w[k] * component_pmf(m, k, n);
    return h;
}

double log_likelihood(const PhotonHistogram &h, const Populations &pops, const DetectionModel &m) {
    const auto w = as_array(pops);
    double ll = 0.0;
    for (std::size_t n = 0; n < h.occurrences.size(); ++n) {
        if (h.occurrences[n] == 0.0) continue;
        double mix = 0.0;
        for (int k = 0; k < 3; ++k) mix += w[k] * component_pmf(m, k, n);
        ll += h.occurrences[n] * std::log(mix);
    }
    return ll;
}

bool poorly_separated(const DetectionModel &m) {
    for (int k = 0; k < 2; ++k) {
        const double sigma = std::sqrt(m.lambda_dark + (k + 1) * m.lambda_bright);
        if (m.lambda_bright < 3.0 * sigma) return true;
    }
    return false;
}

Inference infer_populations(const PhotonHistogram &h, const DetectionModel &m) {
    m.validate();
    const double total = h.total();
    if (!(total > 0.0)) throw ConfigError("infer_populations: empty histogram");
    for (double v : h.occurrences)
        if (!(v >= 0.0)) throw ConfigError("infer_populations: negative occurrences");

    std::vector<std::size_t> bins;
    std::vector<std::array<double, 3>> g;
    for (std::size_t n = 0; n < h.occurrences.size(); ++n) {
        if (h.occurrences[n] == 0.0) continue;
        bins.push_back(n);
        g.push_back({component_pmf(m, 0, n), component_pmf(m, 1, n), component_pmf(m, 2, n)});
    }

    Inference r;
    std::array<double, 3> w{1.0 / 3, 1.0 / 3, 1.0 / 3};
    constexpr std::size_t kMaxIter = 20000;
    for (r.iterations = 1; r.iterations <= kMaxIter; ++r.iterations) {
        std::array<double, 3> next{0.0, 0.0, 0.0};
        for (std::size_t b = 0; b < bins.size(); ++b) {
            const double mix = w[0] * g[b][0] + w[1] * g[b][1] + w[2] * g[b][2];
            if (!(mix > 0.0)) continue;
            const double f = h.occurrences[bins[b]] / mix;
            for (int k = 0; k < 3; ++k) next[k] += w[k] * g[b][k] * f;
        }
        const double s = next[0] + next[1] + next[2];
        if (!(s > 0.0))
            throw PhysicsError(PhysicsError::Kind::kUnidentifiable, "infer_populations: counts outside every component");
        double change = 0.0;
        for (int k = 0; k < 3; ++k) {
            next[k] /= s;
            change = std::max(change, std::abs(next[k] - w[k]));
        }
        w = next;
        if (change < 1e-14) {
            r.converged = true;
            break;
        }
    }
    r.iterations = std::min(r.iterations, kMaxIter);
    r.pops = {w[0], w[1], w[2]};
    r.log_likelihood = log_likelihood(h, r.pops, m);

    // Observed information in (p1, p2) with p0 = 1 - p1 - p2.
    Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
    for (std::size_t b = 0; b < bins.size(); ++b) {
        const double mix = w[0] * g[b][0] + w[1] * g[b][1] + w[2] * g[b][2];
        if (!(mix > 0.0)) continue;
        const Eigen::Vector2d d(g[b][1] - g[b][0], g[b][2] - g[b][0]);
        info += h.occurrences[bins[b]] * d * d.transpose() / (mix * mix);
    }
    Eigen::FullPivLU<Eigen::Matrix2d> lu(info);
    if (lu.isInvertible() && lu.rcond() > 1e-12) {
        const Eigen::Matrix2d cov = lu.inverse();
        r.stderr_ = {std::sqrt(std::max(0.0, cov(0, 0) + cov(1, 1) + 2.0 * cov(0, 1))), std::sqrt(std::max(0.0, cov(0, 0))),
                     std::sqrt(std::max(0.0, cov(1, 1)))};
    } else {
        r.low_confidence = true;
        r.note = "singular information matrix";
    }
    if (poorly_separated(m)) {
        r.low_confidence = true;
        r.note = r.note.empty() ? "components separated by less than 3 sigma" : r.note;
    }
    if (!r.converged) {
        r.low_confidence = true;
        if (r.note.empty()) r.note = "iteration limit reached";
    }
    return r;
}

DetectionModel calibrate(const PhotonHistogram &both_dark, const PhotonHistogram &both_bright,
                         const DetectionModel &base) {
    if (!(both_dark.total() > 0.0) || !(both_bright.total() > 0.0))
        throw ConfigError("calibrate: reference histograms must be non-empty");
    const double md = both_dark.mean(), mb = both_bright.mean();
    const double q = base.decay_correction ? base.decay_fraction() : 0.0;
    DetectionModel m = base;
    m.lambda_bright = (mb - md) / (2.0 * (1.0 - q));
    m.lambda_dark = mb - 2.0 * m.lambda_bright;
    if (m.lambda_dark < 0.0) m.lambda_dark = 0.0;
    m.validate();
    return m;
}

std::string histogram_to_csv(const PhotonHistogram &h) {
    io::CsvWriter w({"count", "occurrences"});
    for (std::size_t n = 0; n < h.occurrences.size(); ++n) w.row({static_cast<double>(n), h.occurrences[n]});
    return w.str();
}

PhotonHistogram histogram_from_csv(const std::string &text) {
    const io::CsvTable t = io::parse_csv(text);
    const std::size_t ci = t.column("count"), oi = t.column("occurrences");
    PhotonHistogram h;
    for (const auto &row : t.rows) {
        const double c = row[ci];
        if (!(c >= 0.0) || c != std::floor(c)) throw ConfigError("histogram csv: count must be a non-negative integer");
        const auto n = static_cast<std::size_t>(c);
        if (n >= h.occurrences.size()) h.occurrences.resize(n + 1, 0.0);
        h.occurrences[n] += row[oi];
    }
    return h;
}

nlohmann::json to_json(const DetectionModel &m) {
    return {{"lambda_bright", m.lambda_bright},
            {"lambda_dark", m.lambda_dark},
            {"window", m.window},
            {"lifetime", m.lifetime},
            {"decay_correction", m.decay_correction}};
}

nlohmann::json to_json(const Inference &r) {
    return {{"p0", r.pops.p0},
            {"p1", r.pops.p1},
            {"p2", r.pops.p2},
            {"stderr", {r.stderr_[0], r.stderr_[1], r.stderr_[2]}},
            {"log_likelihood", r.log_likelihood},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"low_confidence", r.low_confidence},
            {"note", r.note}};
}

DetectionModel model_from_json(const nlohmann::json &j) {
    io::check_keys(j, {"lambda_bright", "lambda_dark", "window", "lifetime", "decay_correction"}, "detection");
    DetectionModel m;
    try {
        m.lambda_bright = j.value("lambda_bright", m.lambda_bright);
        m.lambda_dark = j.value("lambda_dark", m.lambda_dark);
        m.window = j.value("window", m.window);
        m.lifetime = j.value("lifetime", m.lifetime);
        m.decay_correction = j.value("decay_correction", m.decay_correction);
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("detection: ") + e.what());
    }
    m.validate();
    return m;
}

}  // namespace iongate::readout
