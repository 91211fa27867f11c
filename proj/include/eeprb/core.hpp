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

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace eeprb {

inline constexpr double kPi = std::numbers::pi;

/// An angle in radians. Never normalized; only ever consumed through cos/sin.
struct Angle {
    double rad = 0.0;

    constexpr Angle() = default;
    constexpr explicit Angle(double radians) : rad(radians) {}

    static constexpr Angle degrees(double deg) { return Angle{deg * kPi / 180.0}; }

    constexpr Angle operator+(Angle other) const { return Angle{rad + other.rad}; }
    constexpr Angle operator-(Angle other) const { return Angle{rad - other.rad}; }
    constexpr Angle operator-() const { return Angle{-rad}; }
    constexpr bool operator==(const Angle &) const = default;
};

inline constexpr Angle kQuarterTurn{kPi / 2};

struct UnitVec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr bool operator==(const UnitVec2 &) const = default;
};

/// Plain 2-vector used for beam-splitter memory, which may be shorter than unit length.
using Vec2 = UnitVec2;

inline UnitVec2 unit_vec(Angle theta) { return {std::cos(theta.rad), std::sin(theta.rad)}; }

/// The vector orthogonal to unit_vec(theta), rotated a quarter turn counter-clockwise.
inline UnitVec2 perp(Angle theta) { return {-std::sin(theta.rad), std::cos(theta.rad)}; }

constexpr double dot(Vec2 u, Vec2 v) { return u.x * v.x + u.y * v.y; }
constexpr double norm_squared(Vec2 u) { return dot(u, u); }
inline double norm(Vec2 u) { return std::sqrt(norm_squared(u)); }

constexpr Vec2 operator+(Vec2 u, Vec2 v) { return {u.x + v.x, u.y + v.y}; }
constexpr Vec2 operator-(Vec2 u, Vec2 v) { return {u.x - v.x, u.y - v.y}; }
constexpr Vec2 operator*(double s, Vec2 u) { return {s * u.x, s * u.y}; }

/// cos 2(x - y): the photon-polarization overlap of two orientations.
inline double cos2(Angle x, Angle y) { return std::cos(2.0 * (x.rad - y.rad)); }

/// Beam-splitter orientations. BS1 uses a, BS2 uses b, BS3/BS4 share c and BS5/BS6 share d.
struct Settings {
    Angle a;
    Angle b;
    Angle c;
    Angle d;
};

/// A two-valued beam-splitter outcome.
enum class Spin : int { plus = 1, minus = -1 };

constexpr int value(Spin s) { return static_cast<int>(s); }

constexpr Spin spin_from(int v) {
    if (v == 1) {
        return Spin::plus;
    }
    if (v == -1) {
        return Spin::minus;
    }
    throw std::invalid_argument("spin value must be +1 or -1");
}

/// Which of the four detectors of one station fires for the pair of outcomes
/// (S_first, S_second). Inverts
///   S_first  = x1 + x2 - x3 - x4
///   S_second = x1 - x2 + x3 - x4
/// so (+,+) -> 1, (+,-) -> 2, (-,+) -> 3, (-,-) -> 4.
constexpr int detector_index(Spin s_first, Spin s_second) {
    const int hi = s_first == Spin::plus ? 0 : 2;
    const int lo = s_second == Spin::plus ? 0 : 1;
    return 1 + hi + lo;
}

constexpr std::pair<Spin, Spin> spin_values(int detector) {
    if (detector < 1 || detector > 4) {
        throw std::out_of_range("detector index must be in 1..4");
    }
    const int k = detector - 1;
    return {(k & 2) ? Spin::minus : Spin::plus, (k & 1) ? Spin::minus : Spin::plus};
}

}  // namespace eeprb
