// Copyright 2026 The eeprb Authors
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

#include <cstdint>
#include <random>
#include <string_view>

#include "eeprb/core.hpp"

namespace eeprb {

/// Deterministic uniform source.
///
/// Backed by std::mt19937_64, whose output sequence for a given seed is fixed
/// by the C++ standard. The conversions to real numbers are done here rather
/// than through std::uniform_real_distribution, whose algorithm is
/// implementation-defined; this keeps draws bit-identical across toolchains.
class RandomStream {
   public:
    static constexpr std::string_view kAlgorithm = "mt19937_64";

    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in the open interval (0, 1): the 53-bit grid shifted by half a step.
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform in [0, 2pi).
    Angle uniform_angle() {
        const double t = static_cast<double>(engine_() >> 11) * 0x1.0p-53 * (2.0 * kPi);
        // Rounding of the topmost grid value can land exactly on 2pi.
        return Angle{t < 2.0 * kPi ? t : 0.0};
    }

    std::uint64_t next_raw() { return engine_(); }

   private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer. Used to derive per-grid-point seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
    return mix64(base_seed ^ mix64(index));
}

}  // namespace eeprb
