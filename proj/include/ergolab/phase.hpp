#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace ergolab {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

enum class Phase { Interval01, Disc };

inline std::string_view to_string(Phase phase)
{
    return phase == Phase::Interval01 ? "Interval01" : "Disc";
}

/// A point of the phase space. On the interval only `x` is used; on the disc
/// `x` holds the angle phi in [0, 2pi) and `r` the radius in [0, 1].
struct Point {
    double x = 0.0;
    double r = 0.0;

    static constexpr Point on_interval(double x) { return {x, 0.0}; }
    static constexpr Point polar(double phi, double radius) { return {phi, radius}; }

    constexpr double phi() const { return x; }

    friend constexpr bool operator==(const Point&, const Point&) = default;
};

inline bool in_domain(Phase phase, const Point& p)
{
    if (phase == Phase::Interval01) return p.x >= 0.0 && p.x <= 1.0 && p.r == 0.0;
    return p.x >= 0.0 && p.x < two_pi && p.r >= 0.0 && p.r <= 1.0;
}

inline void require_in_domain(Phase phase, const Point& p)
{
    if (!in_domain(phase, p)) {
        detail::fail_argument("point (" + std::to_string(p.x) + ", " + std::to_string(p.r)
                              + ") lies outside the " + std::string(to_string(phase)) + " domain");
    }
}

/// Diameter of the phase space under its metric.
inline double diameter(Phase phase) { return phase == Phase::Interval01 ? 1.0 : 2.0; }

/// Interval: |x - y|. Disc: Euclidean distance of the Cartesian images.
inline double distance(Phase phase, const Point& a, const Point& b)
{
    if (phase == Phase::Interval01) return std::abs(a.x - b.x);
    const double ax = a.r * std::cos(a.x), ay = a.r * std::sin(a.x);
    const double bx = b.r * std::cos(b.x), by = b.r * std::sin(b.x);
    return std::hypot(ax - bx, ay - by);
}

/// Reduces v into [0, 1).
inline double wrap_unit(double v)
{
    double y = v - std::floor(v);
    if (y >= 1.0) y = 0.0;
    return y;
}

/// Reduces an angle into [0, 2pi).
inline double wrap_angle(double phi)
{
    double y = std::fmod(phi, two_pi);
    if (y < 0.0) y += two_pi;
    if (y >= two_pi) y = 0.0;
    return y;
}

} // namespace ergolab
