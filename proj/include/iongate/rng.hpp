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
#include <initializer_list>
#include <random>
#include <vector>

#include "iongate/common.hpp"

namespace iongate {

using Engine = std::mt19937_64;

/*
 * Seed splitting.
 *
 * Every stochastic work item is identified by a path of integers below the
 * root seed, e.g. {stream_tag, realization} or {row, col}. The engine for
 * that item is seeded with std::seed_seq over (root_lo, root_hi, path...).
 * Work items therefore never share a stream, and the result of an item does
 * not depend on which thread ran it or in which order.
 */
inline Engine derive_engine(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * path.size());
    words.push_back(static_cast<std::uint32_t>(root));
    words.push_back(static_cast<std::uint32_t>(root >> 32));
    for (auto p : path) {
        words.push_back(static_cast<std::uint32_t>(p));
        words.push_back(static_cast<std::uint32_t>(p >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Engine(seq);
}

/// Child seed for handing a sub-stream to another module call.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    Engine e = derive_engine(root, path);
    return e();
}

/// Stream tags keep different consumers of one root seed apart.
namespace stream {
inline constexpr std::uint64_t kShots = 1;
inline constexpr std::uint64_t kLaser = 2;
inline constexpr std::uint64_t kField = 3;
inline constexpr std::uint64_t kJitter = 4;
inline constexpr std::uint64_t kPopulation = 5;
inline constexpr std::uint64_t kQuasiStatic = 6;
}  // namespace stream

/// Draw (n0, n1, n2) counts from a trinomial with the given populations.
inline std::array<std::uint64_t, 3> sample_trinomial(const Populations &p, std::uint64_t shots, Engine &eng) {
    auto clamp01 = [](double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); };
    const double p0 = clamp01(p.p0);
    std::binomial_distribution<std::uint64_t> b0(shots, p0);
    const std::uint64_t n0 = b0(eng);
    const double rest = 1.0 - p0;
    const double q1 = rest > 0.0 ? clamp01(p.p1 / rest) : 0.0;
    std::binomial_distribution<std::uint64_t> b1(shots - n0, q1);
    const std::uint64_t n1 = b1(eng);
    return {n0, n1, shots - n0 - n1};
}

}  // namespace iongate
