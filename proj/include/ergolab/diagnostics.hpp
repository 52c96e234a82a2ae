#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "averaging.hpp"
#include "dictionary.hpp"
#include "errors.hpp"
#include "measure.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "report.hpp"
#include "systems.hpp"

namespace ergolab {

/// The background measure initial points are drawn from: Lebesgue on the
/// interval, normalized area on the disc, the uniform measure on a circle
/// {R = r}, or an arbitrary cloud.
class ReferenceMeasure {
public:
    enum class Kind { LebesgueInterval, AreaDisc, CircleConditional, Custom };

    static ReferenceMeasure lebesgue() { return ReferenceMeasure(Kind::LebesgueInterval, Phase::Interval01); }
    static ReferenceMeasure area() { return ReferenceMeasure(Kind::AreaDisc, Phase::Disc); }
    static ReferenceMeasure circle(double r)
    {
        detail::require(r > 0.0 && r < 1.0, "circle radius must lie in (0, 1)");
        ReferenceMeasure m(Kind::CircleConditional, Phase::Disc);
        m.radius_ = r;
        return m;
    }
    static ReferenceMeasure custom(PointCloud cloud)
    {
        ReferenceMeasure m(Kind::Custom, cloud.phase());
        m.cloud_ = std::move(cloud);
        return m;
    }
    static ReferenceMeasure standard(Phase phase) { return phase == Phase::Interval01 ? lebesgue() : area(); }

    Kind kind() const { return kind_; }
    Phase phase() const { return phase_; }
    double radius() const { return radius_; }

    /// i-th of a family of independent draws seeded by `seed`.
    Point sample(std::uint64_t seed, std::size_t i) const
    {
        Rng rng(derive_seed(seed, i));
        switch (kind_) {
        case Kind::LebesgueInterval:
        case Kind::AreaDisc: return sample_reference(phase_, rng);
        case Kind::CircleConditional: return Point::polar(wrap_angle(two_pi * rng.uniform()), radius_);
        case Kind::Custom: return resample(*cloud_, 1, derive_seed(seed, i)).front();
        }
        return {};
    }

    std::string label() const
    {
        switch (kind_) {
        case Kind::LebesgueInterval: return "lebesgue";
        case Kind::AreaDisc: return "area";
        case Kind::CircleConditional: return "circle(r=" + format_double(radius_) + ")";
        case Kind::Custom: return "custom(" + std::to_string(cloud_->size()) + " atoms)";
        }
        return "";
    }

private:
    ReferenceMeasure(Kind kind, Phase phase) : kind_(kind), phase_(phase) {}

    Kind kind_;
    Phase phase_;
    double radius_ = 0.0;
    std::optional<PointCloud> cloud_;
};

struct ProbeOptions {
    Metric metric = Metric::Auto;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

/// Wilson score interval for k successes in n trials at 95% confidence.
inline std::pair<double, double> wilson_interval(std::size_t k, std::size_t n)
{
    if (n == 0) return {0.0, 1.0};
    constexpr double z = 1.959963984540054;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double denom = 1.0 + z * z / nn;
    const double center = (p + z * z / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// Distances from one orbit's occupation measures to a target.
struct TypicalityCheck {
    double at_n = 0.0;
    double at_half = 0.0;
    /// distance between the occupation measures at n and n/2
    double cauchy = 0.0;
    /// distance from the occupation measure at n to delta at T^n x0
    double endpoint = 0.0;

    bool typical(double tol) const { return at_n <= tol && at_half <= tol && cauchy <= tol; }
};

namespace detail {

inline double w1_to_dirac(const PointCloud& mu, double y)
{
    CompensatedSum s;
    for (const Atom& a : mu.atoms()) s.add(a.weight * std::abs(a.point.x - y));
    return s.value();
}

/// Target prepared once per probe so the per-point loop only runs orbits.
class PreparedTarget {
public:
    PreparedTarget(const PointCloud& target, Metric metric, const Dictionary& dict)
        : target_(target), metric_(resolve_metric(metric, target.phase())), dict_(&dict)
    {
        if (metric_ == Metric::Dictionary) integrals_ = dict.integrate(target);
    }

    Metric metric() const { return metric_; }
    const PointCloud& cloud() const { return target_; }

    TypicalityCheck check(const SystemSpec& spec, const Point& x0, std::size_t n) const
    {
        const std::size_t half = std::max<std::size_t>(1, n / 2);
        TypicalityCheck out;
        if (metric_ == Metric::Wasserstein1) {
            const auto pts = orbit(spec, x0, n + 1);
            const std::span<const Point> all(pts.data(), n);
            const PointCloud occ_n = PointCloud::equal_weights(spec.phase(), all);
            const PointCloud occ_h = PointCloud::equal_weights(spec.phase(), all.first(half));
            out.at_n = w1_interval(occ_n, target_);
            out.at_half = w1_interval(occ_h, target_);
            out.cauchy = w1_interval(occ_n, occ_h);
            out.endpoint = w1_to_dirac(occ_n, pts[n].x);
            return out;
        }
        OccupationAccumulator::Options opts;
        opts.keep_atoms = false;
        OccupationAccumulator acc(spec, x0, *dict_, opts);
        acc.advance(half);
        const auto first = acc.dictionary_integrals();
        acc.advance(n - half);
        const auto second = acc.dictionary_integrals();
        std::vector<double> end(dict_->size());
        dict_->evaluate(acc.current(), end);
        out.at_n = integral_gap(second, integrals_);
        out.at_half = integral_gap(first, integrals_);
        out.cauchy = integral_gap(first, second);
        out.endpoint = integral_gap(second, end);
        return out;
    }

private:
    PointCloud target_;
    Metric metric_;
    const Dictionary* dict_;
    std::vector<double> integrals_;
};

inline Json point_json(const Point& p, Phase phase)
{
    if (phase == Phase::Interval01) return Json::array({p.x});
    return Json::array({p.phi(), p.r});
}

inline std::vector<std::string> point_columns(Phase phase)
{
    if (phase == Phase::Interval01) return {"x0"};
    return {"phi0", "r0"};
}

inline void push_point(std::vector<double>& row, const Point& p, Phase phase)
{
    row.push_back(p.x);
    if (phase == Phase::Disc) row.push_back(p.r);
}

/// Shared engine for the typical-set and weak-ergodicity probes.
inline DiagnosticsReport typicality_probe(std::string probe, const SystemSpec& spec, const PointCloud& target,
                                          const std::vector<Point>& starts, std::size_t n, double tol,
                                          const ProbeOptions& opts)
{
    detail::require_autonomous(spec, probe.c_str());
    detail::require(target.phase() == spec.phase(), "target measure phase does not match the system");
    detail::require(n >= 1, "probe needs n >= 1");
    const Dictionary dict = default_dictionary(spec.phase());
    const PreparedTarget prepared(target, opts.metric, dict);
    std::vector<TypicalityCheck> checks(starts.size());
    parallel_for(starts.size(), opts.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) checks[i] = prepared.check(spec, starts[i], n);
    });

    DiagnosticsReport rep;
    rep.probe = std::move(probe);
    rep.system = system_json(spec);
    rep.settings["n"] = n;
    rep.settings["half"] = std::max<std::size_t>(1, n / 2);
    rep.settings["tol"] = tol;
    rep.settings["metric"] = std::string(to_string(prepared.metric()));
    rep.settings["seed"] = opts.seed;
    rep.settings["points"] = starts.size();
    rep.settings["target_atoms"] = target.size();

    Table table;
    table.columns = point_columns(spec.phase());
    for (const char* c : {"distance_n", "distance_half", "cauchy", "endpoint_distance", "typical"})
        table.columns.emplace_back(c);
    std::size_t typical = 0;
    double worst_endpoint = 0.0, worst_distance = 0.0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const TypicalityCheck& c = checks[i];
        const bool ok = c.typical(tol);
        typical += ok ? 1 : 0;
        worst_endpoint = std::max(worst_endpoint, c.endpoint);
        worst_distance = std::max(worst_distance, c.at_n);
        std::vector<double> row;
        push_point(row, starts[i], spec.phase());
        row.insert(row.end(), {c.at_n, c.at_half, c.cauchy, c.endpoint, ok ? 1.0 : 0.0});
        table.rows.push_back(std::move(row));
    }
    const double fraction = starts.empty() ? 0.0 : static_cast<double>(typical) / static_cast<double>(starts.size());
    const auto [lo, hi] = wilson_interval(typical, starts.size());
    rep.set_scalar("fraction", fraction);
    rep.set_scalar("typical_count", static_cast<double>(typical));
    rep.set_scalar("wilson_low", lo);
    rep.set_scalar("wilson_high", hi);
    rep.set_scalar("max_distance", worst_distance);
    rep.set_scalar("max_endpoint_distance", worst_endpoint);
    rep.tables.emplace_back("points", std::move(table));
    return rep;
}

} // namespace detail

/// Estimates m(Z_target): the fraction of initial points drawn from
/// `reference` whose occupation measures at n and n/2 are both within tol of
/// the target and within tol of each other.
inline DiagnosticsReport typical_set_fraction(const SystemSpec& spec, const PointCloud& target,
                                              const ReferenceMeasure& reference, std::size_t points, std::size_t n,
                                              double tol, const ProbeOptions& opts = {})
{
    detail::require(reference.phase() == spec.phase(), "reference measure phase does not match the system");
    std::vector<Point> starts(points);
    for (std::size_t i = 0; i < points; ++i) starts[i] = reference.sample(opts.seed, i);
    auto rep = detail::typicality_probe("typical_set_fraction", spec, target, starts, n, tol, opts);
    rep.settings["reference"] = reference.label();
    rep.notes.push_back(std::string("estimate of m(Z_target); a high fraction is consistent with, not proof of, ")
                        + "almost-every-point convergence");
    return rep;
}

/// Estimates mu(Z_mu) by drawing initial points from mu itself.
inline DiagnosticsReport weak_ergodicity_fraction(const SystemSpec& spec, const PointCloud& mu, std::size_t samples,
                                                  std::size_t n, double tol, const ProbeOptions& opts = {})
{
    const auto starts = resample(mu, samples, opts.seed);
    auto rep = detail::typicality_probe("weak_ergodicity_fraction", spec, mu, starts, n, tol, opts);
    rep.notes.emplace_back("estimate of mu(Z_mu); weak ergodicity means this tends to 1");
    return rep;
}

/// Distance between mu and its one-step pushforward.
inline double invariance_residual(const SystemSpec& spec, const PointCloud& mu, Metric metric = Metric::Auto)
{
    detail::require_autonomous(spec, "invariance_residual");
    detail::require(mu.phase() == spec.phase(), "measure phase does not match the system");
    const PointCloud pushed = pushforward(mu, [&](const Point& p) { return detail::step_autonomous(spec, p); });
    return measure_distance(mu, pushed, metric, default_dictionary(spec.phase()));
}

/// m_S for the systems whose limit support carries an analytic conditional
/// measure: the uniform circle {R = r} for the disc families.
inline std::optional<PointCloud> support_measure(const SystemSpec& spec, std::size_t atoms)
{
    if (spec.phase() != Phase::Disc) return std::nullopt;
    return conditional_on_circle(spec.r(), atoms);
}

struct NamedMeasure {
    std::string name;
    PointCloud cloud;
};

/// Uniform m, three seeded smooth perturbations of m, and m_S when defined.
inline std::vector<NamedMeasure> default_seed_measures(const SystemSpec& spec, std::size_t atoms, std::uint64_t seed)
{
    std::vector<NamedMeasure> out;
    out.push_back({"uniform", uniform_cloud(spec.phase(), atoms, derive_seed(seed, 0))});
    for (std::uint64_t k = 1; k <= 3; ++k)
        out.push_back({"perturbation_" + std::to_string(k), smooth_perturbation(spec.phase(), atoms, derive_seed(seed, k))});
    if (auto ms = support_measure(spec, atoms)) out.push_back({"conditional_support", std::move(*ms)});
    return out;
}

/// Runs the Cesaro pushforward from every seed measure and compares the
/// binned average with the candidate binned at the same resolution.
inline DiagnosticsReport naturality_check(const SystemSpec& spec, const PointCloud& candidate,
                                          const std::vector<NamedMeasure>& seeds, std::size_t n, double tol,
                                          std::optional<Resolution> resolution = std::nullopt,
                                          const ProbeOptions& opts = {})
{
    detail::require_autonomous(spec, "naturality_check");
    detail::require(!seeds.empty(), "naturality_check needs at least one seed measure");
    detail::require(n >= 2, "naturality_check needs n >= 2");
    detail::require(candidate.phase() == spec.phase(), "candidate measure phase does not match the system");
    const Resolution res = resolution.value_or(default_resolution(spec.phase()));
    const Dictionary dict = default_dictionary(spec.phase());
    const Metric metric = resolve_metric(opts.metric, spec.phase());
    const GridMeasure cand_grid = bin(candidate, res);
    const PointCloud cand_cells = grid_as_cloud(cand_grid);

    DiagnosticsReport rep;
    rep.probe = "naturality_check";
    rep.system = system_json(spec);
    rep.settings["n"] = n;
    rep.settings["tol"] = tol;
    rep.settings["metric"] = std::string(to_string(metric));
    rep.settings["resolution"] = Json::array({res.first, res.second});
    rep.settings["seed"] = opts.seed;
    Json names = Json::array();
    for (const auto& s : seeds) names.push_back(s.name);
    rep.settings["seed_measures"] = names;

    Table table{{"seed_index", "distance", "cauchy_l1", "candidate_cell_mass"}, {}};
    double worst = 0.0, worst_cauchy = 0.0, min_mass = 1.0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        detail::require(seeds[i].cloud.phase() == spec.phase(), "seed measure phase does not match the system");
        CesaroAccumulator acc(spec, seeds[i].cloud, res, opts.threads);
        acc.advance(n / 2);
        const GridMeasure half = acc.cesaro();
        acc.advance(n - n / 2);
        const GridMeasure full = acc.cesaro();
        const double d = measure_distance(grid_as_cloud(full), cand_cells, metric, dict);
        const double cauchy = l1_distance(full, half);
        double captured = 0.0;
        for (std::size_t c = 0; c < full.cells(); ++c)
            if (cand_grid.mass(c) > 0.0) captured += full.mass(c);
        worst = std::max(worst, d);
        worst_cauchy = std::max(worst_cauchy, cauchy);
        min_mass = std::min(min_mass, captured);
        table.rows.push_back({static_cast<double>(i), d, cauchy, captured});
    }
    const bool pass = worst <= tol;
    rep.set_flag("natural", pass);
    rep.set_scalar("worst_distance", worst);
    rep.set_scalar("worst_cauchy_l1", worst_cauchy);
    rep.set_scalar("min_candidate_cell_mass", min_mass);
    rep.set_scalar("seed_count", static_cast<double>(seeds.size()));
    rep.notes.push_back(pass ? "consistent with the candidate being the natural measure for these seeds"
                             : "inconsistent with the candidate being the natural measure");
    rep.tables.emplace_back("seeds", std::move(table));
    return rep;
}

struct WanderingResult {
    bool wandering = false;
    bool non_increasing = true;
    /// max off-diagonal overlap per resolution, in the order given
    std::vector<double> max_overlap;
    /// (k_max+1)^2 overlap matrices, row-major, per resolution
    std::vector<std::vector<double>> overlaps;
};

/// Pairwise overlaps of binned T_*^j mu, T_*^k mu for 0 <= j, k <= k_max at
/// each resolution (coarse to fine). Flags wandering when the finest max
/// off-diagonal overlap is below threshold and the maxima never increase
/// under refinement.
inline WanderingResult wandering_overlaps(const SystemSpec& spec, const PointCloud& mu, std::size_t k_max,
                                          const std::vector<Resolution>& resolutions, double threshold)
{
    detail::require_autonomous(spec, "wandering_check");
    detail::require(!resolutions.empty(), "wandering_check needs at least one resolution");
    detail::require(mu.phase() == spec.phase(), "measure phase does not match the system");
    std::vector<PointCloud> images{mu};
    for (std::size_t k = 1; k <= k_max; ++k)
        images.push_back(pushforward(images.back(), [&](const Point& p) { return detail::step_autonomous(spec, p); }));

    WanderingResult out;
    const std::size_t m = images.size();
    for (const Resolution& res : resolutions) {
        std::vector<GridMeasure> grids;
        for (const auto& img : images) grids.push_back(bin(img, res));
        std::vector<double> mat(m * m, 1.0);
        double worst = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = j + 1; k < m; ++k) {
                const double o = overlap(grids[j], grids[k]);
                mat[j * m + k] = mat[k * m + j] = o;
                worst = std::max(worst, o);
            }
        if (!out.max_overlap.empty() && worst > out.max_overlap.back()) out.non_increasing = false;
        out.max_overlap.push_back(worst);
        out.overlaps.push_back(std::move(mat));
    }
    out.wandering = out.max_overlap.back() < threshold && out.non_increasing;
    return out;
}

inline DiagnosticsReport wandering_check(const SystemSpec& spec, const PointCloud& mu, std::size_t k_max,
                                         const std::vector<Resolution>& resolutions, double threshold)
{
    const WanderingResult w = wandering_overlaps(spec, mu, k_max, resolutions, threshold);
    DiagnosticsReport rep;
    rep.probe = "wandering_check";
    rep.system = system_json(spec);
    rep.settings["k_max"] = k_max;
    rep.settings["threshold"] = threshold;
    Json rs = Json::array();
    for (const auto& r : resolutions) rs.push_back(Json::array({r.first, r.second}));
    rep.settings["resolutions"] = rs;
    rep.settings["measure_atoms"] = mu.size();
    rep.set_flag("wandering", w.wandering);
    rep.set_flag("non_increasing", w.non_increasing);
    rep.set_scalar("max_overlap_finest", w.max_overlap.back());
    const std::size_t m = k_max + 1;
    for (std::size_t i = 0; i < resolutions.size(); ++i) {
        rep.set_scalar("max_overlap_" + std::to_string(i), w.max_overlap[i]);
        Table t{{"j", "k", "overlap"}, {}};
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = 0; k < m; ++k)
                t.rows.push_back({static_cast<double>(j), static_cast<double>(k), w.overlaps[i][j * m + k]});
        rep.tables.emplace_back("overlap_" + std::to_string(i), std::move(t));
    }
    rep.notes.emplace_back("mutual singularity is judged at finite resolution only; see the overlap tables");
    return rep;
}

struct TraceMatch {
    std::optional<std::size_t> index;
    std::optional<Point> point;
    double best = 0.0;
    std::vector<double> distances;
};

/// Compares the occupation measure of x with those of each candidate on S
/// and returns the closest candidate when it is within tol.
inline TraceMatch trace_match(const SystemSpec& spec, const Point& x, const std::vector<Point>& candidates,
                              std::size_t n, double tol, const ProbeOptions& opts = {})
{
    detail::require_autonomous(spec, "trace_match");
    detail::require(!candidates.empty(), "trace_match needs at least one candidate");
    detail::require(n >= 1, "trace_match needs n >= 1");
    const Metric metric = resolve_metric(opts.metric, spec.phase());
    const Dictionary dict = default_dictionary(spec.phase());

    auto signature = [&](const Point& start) -> std::variant<std::vector<double>, PointCloud> {
        if (metric == Metric::Wasserstein1) return occupation_measure(spec, start, n);
        OccupationAccumulator::Options o;
        o.keep_atoms = false;
        OccupationAccumulator acc(spec, start, dict, o);
        acc.advance(n);
        return acc.dictionary_integrals();
    };
    auto gap = [&](const auto& a, const auto& b) {
        if (metric == Metric::Wasserstein1) return w1_interval(std::get<PointCloud>(a), std::get<PointCloud>(b));
        return integral_gap(std::get<std::vector<double>>(a), std::get<std::vector<double>>(b));
    };

    const auto mine = signature(x);
    TraceMatch out;
    out.distances.resize(candidates.size());
    parallel_for(candidates.size(), opts.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) out.distances[i] = gap(mine, signature(candidates[i]));
    });
    const auto it = std::min_element(out.distances.begin(), out.distances.end());
    out.best = *it;
    if (out.best <= tol) {
        out.index = static_cast<std::size_t>(it - out.distances.begin());
        out.point = candidates[*out.index];
    }
    return out;
}

} // namespace ergolab
