/*
 * Copyright (c) 2026, The geochip Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace geochip {

/// Name recorded in run metadata; std::mt19937_64's output sequence is fixed
/// by the C++ standard, and every conversion below is done by hand so that
/// streams do not depend on the standard library's distributions.
inline constexpr std::string_view kRngName = "mt19937_64";

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), unbiased (rejection sampling). n > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller (one value per call).
    double normal();

private:
    std::mt19937_64 gen_;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Per-stage seed: FNV-1a of the stage name mixed with the run seed through
/// splitmix64. Stages are named like "train/epoch/3" or "synth/tile/0".
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) noexcept;

}  // namespace geochip
