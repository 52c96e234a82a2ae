#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "phase.hpp"
#include "random.hpp"

namespace ergolab {

/// Atoms lighter than this are dropped when a cloud is assembled.
inline constexpr double min_atom_weight = 1e-15;

namespace detail {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v)
    {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_total(std::span<const double> values)
{
    CompensatedSum s;
    for (double v : values) s.add(v);
    return s.value();
}

} // namespace detail

struct Atom {
    Point point;
    double weight = 0.0;
};

/// Finite weighted atom set representing a probability measure.
///
/// Invariants: every atom lies in the phase domain, weights are nonnegative
/// and sum to one. Immutable after construction.
class PointCloud {
public:
    /// Weights must already sum to one within 1e-9; they are renormalized
    /// exactly after dropping atoms below `min_atom_weight`.
    PointCloud(Phase phase, std::vector<Atom> atoms) : phase_(phase), atoms_(std::move(atoms))
    {
        assemble(true);
    }

    /// Accepts any positive total weight and normalizes it.
    static PointCloud normalized(Phase phase, std::vector<Atom> atoms)
    {
        PointCloud c(phase);
        c.atoms_ = std::move(atoms);
        c.assemble(false);
        return c;
    }

    static PointCloud equal_weights(Phase phase, std::span<const Point> points)
    {
        detail::require(!points.empty(), "a point cloud needs at least one atom");
        const double w = 1.0 / static_cast<double>(points.size());
        std::vector<Atom> atoms;
        atoms.reserve(points.size());
        for (const Point& p : points) atoms.push_back({p, w});
        return PointCloud(phase, std::move(atoms));
    }

    Phase phase() const { return phase_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }

    double total_weight() const
    {
        detail::CompensatedSum s;
        for (const Atom& a : atoms_) s.add(a.weight);
        return s.value();
    }

private:
    explicit PointCloud(Phase phase) : phase_(phase) {}

    void assemble(bool expect_unit_mass)
    {
        for (const Atom& a : atoms_) {
            require_in_domain(phase_, a.point);
            detail::require(a.weight >= 0.0 && std::isfinite(a.weight),
                            "atom weights must be finite and nonnegative");
        }
        std::erase_if(atoms_, [](const Atom& a) { return a.weight < min_atom_weight; });
        detail::require(!atoms_.empty(), "a point cloud needs at least one atom of positive weight");
        const double total = total_weight();
        if (expect_unit_mass && std::abs(total - 1.0) > 1e-9)
            detail::fail_argument("atom weights sum to " + std::to_string(total) + ", expected 1");
        if (std::abs(total - 1.0) > 1e-15)
            for (Atom& a : atoms_) a.weight /= total;
    }

    Phase phase_;
    std::vector<Atom> atoms_;
};

/// Cells per axis. Interval grids use `first` cells and `second == 1`;
/// disc grids use `first` angular times `second` radial cells.
struct Resolution {
    std::size_t first = 1;
    std::size_t second = 1;

    constexpr std::size_t cells() const { return first * second; }
    friend constexpr bool operator==(const Resolution&, const Resolution&) = default;
};

inline void validate_resolution(Phase phase, Resolution res)
{
    detail::require(res.first >= 1 && res.second >= 1, "resolution must be at least one cell per axis");
    if (phase == Phase::Interval01)
        detail::require(res.second == 1, "interval grids take a single cell count");
}

/// Index of the cell containing p. Cells are [left, right) except the last
/// cell along each axis, which is closed.
inline std::size_t cell_index(Phase phase, Resolution res, const Point& p)
{
    auto axis = [](double u, std::size_t n) {
        const auto i = static_cast<std::size_t>(u * static_cast<double>(n));
        return std::min(i, n - 1);
    };
    if (phase == Phase::Interval01) return axis(p.x, res.first);
    return axis(p.x / two_pi, res.first) * res.second + axis(p.r, res.second);
}

struct CellBox {
    Point lo;
    Point hi;
};

inline CellBox cell_box(Phase phase, Resolution res, std::size_t index)
{
    if (phase == Phase::Interval01) {
        const double n = static_cast<double>(res.first);
        const double i = static_cast<double>(index);
        return {Point::on_interval(i / n), Point::on_interval((i + 1.0) / n)};
    }
    const double nphi = static_cast<double>(res.first), nr = static_cast<double>(res.second);
    const double iphi = static_cast<double>(index / res.second);
    const double ir = static_cast<double>(index % res.second);
    return {Point::polar(two_pi * iphi / nphi, ir / nr), Point::polar(two_pi * (iphi + 1.0) / nphi, (ir + 1.0) / nr)};
}

inline Point cell_center(Phase phase, Resolution res, std::size_t index)
{
    const CellBox b = cell_box(phase, res, index);
    if (phase == Phase::Interval01) return Point::on_interval(0.5 * (b.lo.x + b.hi.x));
    return Point::polar(0.5 * (b.lo.x + b.hi.x), 0.5 * (b.lo.r + b.hi.r));
}

/// Histogram over a uniform partition of the phase space.
class GridMeasure {
public:
    /// Masses must sum to one within 1e-9.
    GridMeasure(Phase phase, Resolution res, std::vector<double> masses)
        : phase_(phase), res_(res), masses_(std::move(masses))
    {
        assemble(true);
    }

    /// Accepts any positive total and normalizes it.
    static GridMeasure normalized(Phase phase, Resolution res, std::vector<double> masses)
    {
        GridMeasure g(phase, res);
        g.masses_ = std::move(masses);
        g.assemble(false);
        return g;
    }

    Phase phase() const { return phase_; }
    Resolution resolution() const { return res_; }
    const std::vector<double>& masses() const { return masses_; }
    double mass(std::size_t cell) const { return masses_.at(cell); }
    std::size_t cells() const { return masses_.size(); }
    double total_mass() const { return detail::compensated_total(masses_); }

private:
    GridMeasure(Phase phase, Resolution res) : phase_(phase), res_(res) {}

    void assemble(bool expect_unit_mass)
    {
        validate_resolution(phase_, res_);
        detail::require(masses_.size() == res_.cells(), "mass count does not match the resolution");
        for (double m : masses_)
            detail::require(m >= 0.0 && std::isfinite(m), "cell masses must be finite and nonnegative");
        const double total = total_mass();
        detail::require(total > 0.0, "a grid measure needs positive total mass");
        if (expect_unit_mass && std::abs(total - 1.0) > 1e-9)
            detail::fail_argument("cell masses sum to " + std::to_string(total) + ", expected 1");
        if (std::abs(total - 1.0) > 1e-15)
            for (double& m : masses_) m /= total;
    }

    Phase phase_;
    Resolution res_;
    std::vector<double> masses_;
};

// --- constructors ------------------------------------------------------------

/// Draws one point from the reference measure: Lebesgue on the interval,
/// normalized area on the disc (radius has CDF R^2).
inline Point sample_reference(Phase phase, Rng& rng)
{
    if (phase == Phase::Interval01) return Point::on_interval(rng.uniform());
    const double phi = two_pi * rng.uniform();
    return Point::polar(phi < two_pi ? phi : 0.0, std::sqrt(rng.uniform()));
}

inline PointCloud uniform_cloud(Phase phase, std::size_t n, std::uint64_t seed)
{
    detail::require(n >= 1, "uniform_cloud needs n >= 1");
    Rng rng(seed);
    std::vector<Point> pts(n);
    for (Point& p : pts) p = sample_reference(phase, rng);
    return PointCloud::equal_weights(phase, pts);
}

inline PointCloud dirac(Phase phase, const Point& p)
{
    require_in_domain(phase, p);
    return PointCloud(phase, {{p, 1.0}});
}

/// Uniform measure on the circle {R = r}: n equispaced atoms, no sampling noise.
inline PointCloud conditional_on_circle(double r, std::size_t n)
{
    detail::require(r > 0.0 && r < 1.0, "circle radius must lie in (0, 1)");
    detail::require(n >= 1, "conditional_on_circle needs n >= 1");
    std::vector<Point> pts(n);
    for (std::size_t i = 0; i < n; ++i)
        pts[i] = Point::polar(two_pi * static_cast<double>(i) / static_cast<double>(n), r);
    return PointCloud::equal_weights(Phase::Disc, pts);
}

/// Reference-measure sample reweighted by a smooth positive density.
///
/// Interval: 1 + a cos(2 pi k x + theta). Disc: (1 + a cos(phi + theta)) *
/// (1 + b cos(pi k R + psi)). Amplitudes and phases are drawn from `seed`.
inline PointCloud smooth_perturbation(Phase phase, std::size_t n, std::uint64_t seed)
{
    detail::require(n >= 1, "smooth_perturbation needs n >= 1");
    Rng shape(derive_seed(seed, 0));
    const double a = shape.uniform(0.3, 0.8);
    const double b = shape.uniform(0.3, 0.8);
    const double theta = shape.uniform(0.0, two_pi);
    const double psi = shape.uniform(0.0, two_pi);
    const double k = 1.0 + static_cast<double>(shape.next() % 3);

    const PointCloud base = uniform_cloud(phase, n, derive_seed(seed, 1));
    std::vector<Atom> atoms;
    atoms.reserve(n);
    for (const Atom& at : base.atoms()) {
        const Point& p = at.point;
        double w = 0.0;
        if (phase == Phase::Interval01)
            w = 1.0 + a * std::cos(two_pi * k * p.x + theta);
        else
            w = (1.0 + a * std::cos(p.phi() + theta)) * (1.0 + b * std::cos(std::numbers::pi * k * p.r + psi));
        atoms.push_back({p, w});
    }
    return PointCloud::normalized(phase, std::move(atoms));
}

/// Points drawn from a cloud with probability proportional to atom weight.
inline std::vector<Point> resample(const PointCloud& mu, std::size_t count, std::uint64_t seed)
{
    std::vector<double> cdf;
    cdf.reserve(mu.size());
    double acc = 0.0;
    for (const Atom& a : mu.atoms()) cdf.push_back(acc += a.weight);
    std::vector<Point> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, i));
        const double u = rng.uniform() * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) --it;
        out.push_back(mu.atoms()[static_cast<std::size_t>(it - cdf.begin())].point);
    }
    return out;
}

/// Moves every atom through `map`, preserving weights.
template <class Map>
PointCloud pushforward(const PointCloud& mu, Map&& map)
{
    std::vector<Atom> atoms;
    atoms.reserve(mu.size());
    for (const Atom& a : mu.atoms()) atoms.push_back({map(a.point), a.weight});
    return PointCloud(mu.phase(), std::move(atoms));
}

// --- summaries ---------------------------------------------------------------

/// Interval: `x` is the mean. Disc: `phi_vector` is the weighted average of
/// unit vectors (cos phi, sin phi), `phi` its angle, and `r` the mean radius.
struct CloudMean {
    double x = 0.0;
    std::array<double, 2> phi_vector{0.0, 0.0};
    double phi = 0.0;
    double r = 0.0;
};

inline CloudMean mean(const PointCloud& mu)
{
    CloudMean m;
    if (mu.phase() == Phase::Interval01) {
        detail::CompensatedSum s;
        for (const Atom& a : mu.atoms()) s.add(a.weight * a.point.x);
        m.x = s.value();
        return m;
    }
    detail::CompensatedSum c, s, r;
    for (const Atom& a : mu.atoms()) {
        c.add(a.weight * std::cos(a.point.phi()));
        s.add(a.weight * std::sin(a.point.phi()));
        r.add(a.weight * a.point.r);
    }
    m.phi_vector = {c.value(), s.value()};
    m.phi = wrap_angle(std::atan2(m.phi_vector[1], m.phi_vector[0]));
    m.r = r.value();
    return m;
}

/// Mean of an interval cloud, summed in atom order.
inline double interval_mean(const PointCloud& mu)
{
    detail::require(mu.phase() == Phase::Interval01, "interval_mean needs an interval cloud");
    return mean(mu).x;
}

inline GridMeasure bin(const PointCloud& mu, Resolution res)
{
    validate_resolution(mu.phase(), res);
    std::vector<double> masses(res.cells(), 0.0);
    for (const Atom& a : mu.atoms()) masses[cell_index(mu.phase(), res, a.point)] += a.weight;
    return GridMeasure::normalized(mu.phase(), res, std::move(masses));
}

/// The reference measure m on a grid: equal masses on the interval, exact
/// area fractions on the disc.
inline GridMeasure reference_grid(Phase phase, Resolution res)
{
    validate_resolution(phase, res);
    std::vector<double> masses(res.cells());
    for (std::size_t i = 0; i < masses.size(); ++i) {
        if (phase == Phase::Interval01) {
            masses[i] = 1.0 / static_cast<double>(res.first);
        } else {
            const CellBox b = cell_box(phase, res, i);
            masses[i] = (b.hi.r * b.hi.r - b.lo.r * b.lo.r) / static_cast<double>(res.first);
        }
    }
    return GridMeasure::normalized(phase, res, std::move(masses));
}

/// Atoms at cell centers carrying the cell masses; empty cells are skipped.
inline PointCloud grid_as_cloud(const GridMeasure& g)
{
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < g.cells(); ++i)
        if (g.mass(i) > 0.0) atoms.push_back({cell_center(g.phase(), g.resolution(), i), g.mass(i)});
    return PointCloud::normalized(g.phase(), std::move(atoms));
}

} // namespace ergolab
