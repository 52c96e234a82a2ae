#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "phase.hpp"
#include "random.hpp"

namespace ergolab {

enum class Family {
    Halving,
    DiscRotation,
    DiscNoRotation,
    DiscJump,
    SquareJump,
    GiGi,
    DiscontInterval,
    Doubling,
    TentAdditive,
    MultA,
    MultB,
};

inline constexpr std::array all_families{
    Family::Halving,   Family::DiscRotation,    Family::DiscNoRotation, Family::DiscJump,
    Family::SquareJump, Family::GiGi,           Family::DiscontInterval, Family::Doubling,
    Family::TentAdditive, Family::MultA,        Family::MultB,
};

struct ParamInfo {
    std::string_view name;
    double lo;
    double hi;
    bool lo_closed;
    bool hi_closed;
    double fallback;

    bool admits(double v) const
    {
        const bool above = lo_closed ? v >= lo : v > lo;
        const bool below = hi_closed ? v <= hi : v < hi;
        return std::isfinite(v) && above && below;
    }

    std::string range() const
    {
        auto num = [](double v) {
            std::string s = std::to_string(v);
            while (s.size() > 1 && s.back() == '0') s.pop_back();
            if (s.back() == '.') s.pop_back();
            return s;
        };
        return std::string(lo_closed ? "[" : "(") + num(lo) + ", " + num(hi) + (hi_closed ? "]" : ")");
    }
};

struct FamilyInfo {
    Family family;
    std::string_view name;
    Phase phase;
    bool measure_dependent;
    std::vector<ParamInfo> params;
    std::string_view formula;
};

inline const double irrational_alpha = std::sqrt(2.0) - 1.0;

inline const std::vector<FamilyInfo>& family_catalog()
{
    static const std::vector<FamilyInfo> catalog = [] {
        const ParamInfo alpha{"alpha", 0.0, 1.0, false, false, irrational_alpha};
        const ParamInfo beta{"beta", 0.0, 1.0, false, false, 0.3};
        const ParamInfo gamma{"gamma", 0.0, 1.0, false, false, 0.5};
        const ParamInfo r{"r", 0.0, 1.0, false, false, 0.5};
        return std::vector<FamilyInfo>{
            {Family::Halving, "Halving", Phase::Interval01, false, {}, "T x = x/2"},
            {Family::DiscRotation, "DiscRotation", Phase::Disc, false, {alpha, beta, gamma, r},
             "T(phi,R) = (phi + 2 pi alpha + beta (R - r) mod 2pi, gamma (R - r) + r)"},
            {Family::DiscNoRotation, "DiscNoRotation", Phase::Disc, false, {alpha, gamma, r},
             "T(phi,R) = (phi + 2 pi alpha if R = r else phi, gamma (R - r) + r)"},
            {Family::DiscJump, "DiscJump", Phase::Disc, false, {alpha, beta, gamma, r},
             "T(phi,R) = DiscRotation(phi,R) if R != r, else (phi + 2 pi alpha mod 2pi, (1 + r)/2)"},
            {Family::SquareJump, "SquareJump", Phase::Interval01, false,
             {ParamInfo{"c", 0.0, 1.0, true, false, 0.5}}, "T x = 1 - c if x = 0, else x^2"},
            {Family::GiGi, "GiGi", Phase::Interval01, false, {},
             "T x = (1 - sin(pi x - pi/2))/2 on (0,1), x at x in {0, 1}"},
            {Family::DiscontInterval, "DiscontInterval", Phase::Interval01, false, {},
             "T x = x/2 + 1/4 if x <= 1/2, else 2x - 1"},
            {Family::Doubling, "Doubling", Phase::Interval01, false, {}, "T x = 2x mod 1"},
            {Family::TentAdditive, "TentAdditive", Phase::Interval01, true,
             {ParamInfo{"epsilon", 0.0, 1.0, true, true, 0.05}},
             "T_mu x = 1 - 2|x - 1/2| + epsilon E_mu mod 1"},
            {Family::MultA, "MultA", Phase::Interval01, true, {}, "T_mu x = x E_mu mod 1"},
            {Family::MultB, "MultB", Phase::Interval01, true, {}, "T_mu x = x / E_mu mod 1, with 1/0 mod 1 = 0"},
        };
    }();
    return catalog;
}

inline const FamilyInfo& family_info(Family f)
{
    for (const auto& info : family_catalog())
        if (info.family == f) return info;
    throw std::logic_error("family missing from catalog");
}

inline std::string_view to_string(Family f) { return family_info(f).name; }

inline std::optional<Family> family_from_string(std::string_view name)
{
    for (const auto& info : family_catalog())
        if (info.name == name) return info.family;
    return std::nullopt;
}

/// A map family plus its validated parameters. Immutable.
class SystemSpec {
public:
    /// Missing parameters take their catalog defaults; unknown names and
    /// out-of-range values throw invalid_argument.
    explicit SystemSpec(Family family, const std::map<std::string, double>& params = {}) : family_(family)
    {
        const FamilyInfo& info = family_info(family);
        for (const auto& [name, value] : params) {
            const ParamInfo* p = find(info, name);
            if (!p)
                detail::fail_argument("unknown parameter '" + name + "' for family " + std::string(info.name));
            if (!p->admits(value))
                detail::fail_argument("parameter '" + name + "' = " + std::to_string(value) + " outside "
                                      + p->range() + " for family " + std::string(info.name));
        }
        for (const ParamInfo& p : info.params) {
            auto it = params.find(std::string(p.name));
            set(p.name, it == params.end() ? p.fallback : it->second);
        }
    }

    Family family() const { return family_; }
    Phase phase() const { return family_info(family_).phase; }
    bool measure_dependent() const { return family_info(family_).measure_dependent; }
    std::string_view name() const { return family_info(family_).name; }

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double gamma() const { return gamma_; }
    double r() const { return r_; }
    double c() const { return c_; }
    double epsilon() const { return epsilon_; }

    /// Declared parameters in catalog order.
    std::vector<std::pair<std::string, double>> params() const
    {
        std::vector<std::pair<std::string, double>> out;
        for (const ParamInfo& p : family_info(family_).params) out.emplace_back(std::string(p.name), get(p.name));
        return out;
    }

    friend bool operator==(const SystemSpec& a, const SystemSpec& b)
    {
        return a.family_ == b.family_ && a.params() == b.params();
    }

private:
    static const ParamInfo* find(const FamilyInfo& info, std::string_view name)
    {
        for (const ParamInfo& p : info.params)
            if (p.name == name) return &p;
        return nullptr;
    }

    double& slot(std::string_view name)
    {
        if (name == "alpha") return alpha_;
        if (name == "beta") return beta_;
        if (name == "gamma") return gamma_;
        if (name == "r") return r_;
        if (name == "c") return c_;
        return epsilon_;
    }
    void set(std::string_view name, double v) { slot(name) = v; }
    double get(std::string_view name) const { return const_cast<SystemSpec*>(this)->slot(name); }

    Family family_;
    double alpha_ = 0.0, beta_ = 0.0, gamma_ = 0.0, r_ = 0.0, c_ = 0.0, epsilon_ = 0.0;
};

namespace detail {

/// Smallest normal double; orbits never enter the subnormal range.
inline constexpr double smallest_interior = std::numeric_limits<double>::min();

/// Keeps an image of an interior point strictly inside (0, 1).
inline double keep_interior(double y)
{
    if (y <= 0.0) return smallest_interior;
    if (y >= 1.0) return std::nextafter(1.0, 0.0);
    return y;
}

/// Expanding maps by 2 are exact on doubles and shift a zero into the low
/// mantissa bit, so every orbit collapses onto 0 after ~53 steps. The vacated
/// bit is refilled from a hash of the preimage. The exact fixed point 0 is left alone.
inline double refill_low_bits(double y, double preimage)
{
    if (preimage == 0.0) return y;
    return wrap_unit(y + hash_unit(preimage) * 0x1.0p-52);
}

/// gamma (R - r) + r that never lands on r exactly unless it started there.
inline double contract_radius(double R, double r, double gamma)
{
    const double out = gamma * (R - r) + r;
    if (out == r && R != r) return std::nextafter(r, R > r ? 2.0 : -1.0);
    return out;
}

/// mod-1 reduction for the multiplicative families: a pre-wrap value of
/// exactly 1 at mean exactly 1 stays at 1, so delta_1 is a fixed point.
inline double wrap_multiplicative(double pre, double mean)
{
    if (pre == 1.0 && mean == 1.0) return 1.0;
    return wrap_unit(pre);
}

inline double tent(double x) { return 1.0 - 2.0 * std::abs(x - 0.5); }

inline Point step_autonomous(const SystemSpec& s, const Point& p)
{
    switch (s.family()) {
    case Family::Halving: return Point::on_interval(p.x / 2.0);
    case Family::DiscRotation:
        return Point::polar(wrap_angle(p.phi() + two_pi * s.alpha() + s.beta() * (p.r - s.r())),
                            s.gamma() * (p.r - s.r()) + s.r());
    case Family::DiscNoRotation:
        if (p.r == s.r()) return Point::polar(wrap_angle(p.phi() + two_pi * s.alpha()), p.r);
        return Point::polar(p.phi(), contract_radius(p.r, s.r(), s.gamma()));
    case Family::DiscJump:
        if (p.r == s.r()) return Point::polar(wrap_angle(p.phi() + two_pi * s.alpha()), (1.0 + s.r()) / 2.0);
        return Point::polar(wrap_angle(p.phi() + two_pi * s.alpha() + s.beta() * (p.r - s.r())),
                            contract_radius(p.r, s.r(), s.gamma()));
    case Family::SquareJump:
        if (p.x == 0.0) return Point::on_interval(1.0 - s.c());
        if (p.x < 0x1.0p-511) return Point::on_interval(smallest_interior);
        return Point::on_interval(std::max(p.x * p.x, smallest_interior));
    case Family::GiGi:
        if (p.x == 0.0 || p.x == 1.0) return p;
        return Point::on_interval(
            keep_interior((1.0 - std::sin(std::numbers::pi * p.x - std::numbers::pi / 2.0)) / 2.0));
    case Family::DiscontInterval:
        if (p.x <= 0.5) return Point::on_interval(p.x / 2.0 + 0.25);
        return Point::on_interval(2.0 * p.x - 1.0);
    case Family::Doubling: return Point::on_interval(refill_low_bits(wrap_unit(2.0 * p.x), p.x));
    default: break;
    }
    throw wrong_evaluator(std::string(s.name()) + " is measure-dependent; use eval_selfconsistent");
}

inline double step_selfconsistent(const SystemSpec& s, double x, double mean)
{
    switch (s.family()) {
    case Family::TentAdditive: {
        const double t = x == 0.0 ? 0.0 : tent(x) + hash_unit(x) * 0x1.0p-52;
        return wrap_unit(t + s.epsilon() * mean);
    }
    case Family::MultA: return wrap_multiplicative(x * mean, mean);
    case Family::MultB: {
        if (mean == 0.0) return 0.0;
        const double y = wrap_multiplicative(x / mean, mean);
        return mean < 1.0 ? refill_low_bits(y, x) : y;
    }
    default: break;
    }
    throw wrong_evaluator(std::string(s.name()) + " is autonomous; use eval_map");
}

} // namespace detail

/// One application of an autonomous map.
inline Point eval_map(const SystemSpec& spec, const Point& p)
{
    if (spec.measure_dependent())
        throw wrong_evaluator(std::string(spec.name()) + " is measure-dependent; use eval_selfconsistent");
    require_in_domain(spec.phase(), p);
    return detail::step_autonomous(spec, p);
}

/// One application of a measure-dependent map with E_mu frozen at `current_mean`.
inline Point eval_selfconsistent(const SystemSpec& spec, const Point& p, double current_mean)
{
    if (!spec.measure_dependent())
        throw wrong_evaluator(std::string(spec.name()) + " is autonomous; use eval_map");
    require_in_domain(spec.phase(), p);
    detail::require(current_mean >= 0.0 && current_mean <= 1.0, "current mean must lie in [0, 1]");
    return Point::on_interval(detail::step_selfconsistent(spec, p.x, current_mean));
}

/// [x0, T x0, ..., T^{n-1} x0].
inline std::vector<Point> orbit(const SystemSpec& spec, const Point& x0, std::size_t n)
{
    if (spec.measure_dependent())
        throw wrong_evaluator(std::string(spec.name()) + " is measure-dependent; ensembles use evolve_ensemble");
    require_in_domain(spec.phase(), x0);
    std::vector<Point> out;
    out.reserve(n);
    Point p = x0;
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back(p);
        if (k + 1 < n) p = detail::step_autonomous(spec, p);
    }
    return out;
}

} // namespace ergolab
