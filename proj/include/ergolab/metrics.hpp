#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "dictionary.hpp"
#include "errors.hpp"
#include "measure.hpp"

namespace ergolab {

/// Exact 1-Wasserstein distance between atomic measures on [0, 1], computed
/// as the integral of |F_mu - F_nu| over the merged sorted atoms.
inline double w1_interval(const PointCloud& mu, const PointCloud& nu)
{
    detail::require(mu.phase() == Phase::Interval01 && nu.phase() == Phase::Interval01,
                     "w1_interval needs two interval measures");
    std::vector<std::pair<double, double>> events;
    events.reserve(mu.size() + nu.size());
    for (const Atom& a : mu.atoms()) events.emplace_back(a.point.x, a.weight);
    for (const Atom& a : nu.atoms()) events.emplace_back(a.point.x, -a.weight);
    std::sort(events.begin(), events.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    detail::CompensatedSum total, cdf_gap;
    for (std::size_t i = 0; i + 1 < events.size(); ++i) {
        cdf_gap.add(events[i].second);
        const double dx = events[i + 1].first - events[i].first;
        if (dx > 0.0) total.add(std::abs(cdf_gap.value()) * dx);
    }
    return total.value();
}

/// max_i |a_i - b_i| over precomputed dictionary integrals.
inline double integral_gap(std::span<const double> a, std::span<const double> b)
{
    detail::require(a.size() == b.size(), "integral vectors differ in length");
    double gap = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
    return gap;
}

inline double dict_discrepancy(const PointCloud& mu, const PointCloud& nu, const Dictionary& dict)
{
    detail::require(mu.phase() == nu.phase(), "dict_discrepancy needs measures on the same phase");
    return integral_gap(dict.integrate(mu), dict.integrate(nu));
}

/// Sum over cells of min(a, b): 1 for identical histograms, 0 for disjoint
/// supports at this resolution.
inline double overlap(const GridMeasure& a, const GridMeasure& b)
{
    detail::require(a.phase() == b.phase() && a.resolution() == b.resolution(),
                    "overlap needs grids with the same phase and resolution");
    detail::CompensatedSum s;
    for (std::size_t i = 0; i < a.cells(); ++i) s.add(std::min(a.mass(i), b.mass(i)));
    return std::min(1.0, s.value());
}

inline double l1_distance(const GridMeasure& a, const GridMeasure& b)
{
    detail::require(a.phase() == b.phase() && a.resolution() == b.resolution(),
                    "l1_distance needs grids with the same phase and resolution");
    detail::CompensatedSum s;
    for (std::size_t i = 0; i < a.cells(); ++i) s.add(std::abs(a.mass(i) - b.mass(i)));
    return s.value();
}

/// Which distance the probes use to compare measures. `Auto` means exact W1
/// on the interval and dictionary discrepancy on the disc.
enum class Metric { Auto, Wasserstein1, Dictionary };

inline std::string_view to_string(Metric m)
{
    switch (m) {
    case Metric::Auto: return "auto";
    case Metric::Wasserstein1: return "w1";
    case Metric::Dictionary: return "dictionary";
    }
    return "auto";
}

inline Metric resolve_metric(Metric m, Phase phase)
{
    if (m == Metric::Auto) return phase == Phase::Interval01 ? Metric::Wasserstein1 : Metric::Dictionary;
    if (m == Metric::Wasserstein1 && phase != Phase::Interval01)
        detail::fail_argument("the W1 metric is only available on the interval");
    return m;
}

inline double measure_distance(const PointCloud& mu, const PointCloud& nu, Metric metric, const Dictionary& dict)
{
    detail::require(mu.phase() == nu.phase(), "measures live on different phases");
    if (resolve_metric(metric, mu.phase()) == Metric::Wasserstein1) return w1_interval(mu, nu);
    return dict_discrepancy(mu, nu, dict);
}

} // namespace ergolab
