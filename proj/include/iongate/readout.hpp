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
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iongate/common.hpp"

namespace iongate::readout {

struct DetectionModel {
    double lambda_bright = 30.0;  ///< mean counts per S ion per window
    double lambda_dark = 0.5;     ///< mean background counts per window
    double window = 1e-3;         ///< s
    double lifetime = kDLifetime; ///< D-state lifetime (s); 0 disables decay
    bool decay_correction = true;
    void validate() const;

    /// Mean fraction of the window a D ion spends in S after decaying.
    double decay_fraction() const;
};

/// Occurrences per photon number; entries may be fractional (e.g. an exact pmf).
struct PhotonHistogram {
    std::vector<double> occurrences;
    double total() const;
    double mean() const;
};

/*
 * Each shot draws the number of ions in S from `pops`, then a Poisson count
 * with mean lambda_dark + k lambda_bright. With a finite lifetime every D ion
 * may decay at an exponentially distributed time inside the window and then
 * fluoresces for the remainder.
 */
PhotonHistogram simulate_histogram(const Populations &pops, const DetectionModel &m, std::uint64_t shots,
                                   std::uint64_t seed);

/// Probability of n counts given k ions initially in S, under the fit model
/// (decay folded in as a weight adjustment when decay_correction is set).
double component_pmf(const DetectionModel &m, int k, std::size_t n);

/// Infinite-shot histogram of the fit model up to `max_count` (0 = automatic).
PhotonHistogram mixture_pmf(const Populations &pops, const DetectionModel &m, std::size_t max_count = 0);

double log_likelihood(const PhotonHistogram &h, const Populations &pops, const DetectionModel &m);

struct Inference {
    Populations pops;
    std::array<double, 3> stderr_{0.0, 0.0, 0.0};
    double log_likelihood = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    bool low_confidence = false;
    std::string note;
};

/// Maximum-likelihood mixture weights with fixed component means.
Inference infer_populations(const PhotonHistogram &h, const DetectionModel &m);

/// True when adjacent components are separated by fewer than 3 standard deviations.
bool poorly_separated(const DetectionModel &m);

/// Count rates from reference histograms with both ions in D and both in S.
DetectionModel calibrate(const PhotonHistogram &both_dark, const PhotonHistogram &both_bright,
                         const DetectionModel &base = {});

std::string histogram_to_csv(const PhotonHistogram &h);
PhotonHistogram histogram_from_csv(const std::string &text);
nlohmann::json to_json(const DetectionModel &m);
nlohmann::json to_json(const Inference &r);
DetectionModel model_from_json(const nlohmann::json &j);

}  // namespace iongate::readout
