#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dictionary.hpp"
#include "errors.hpp"
#include "measure.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "systems.hpp"

namespace ergolab {

namespace detail {

inline void require_autonomous(const SystemSpec& spec, const char* who)
{
    if (spec.measure_dependent())
        throw wrong_evaluator(std::string(spec.name()) + " is measure-dependent; " + who + " needs an autonomous map");
}

} // namespace detail

inline Resolution default_resolution(Phase phase)
{
    return phase == Phase::Interval01 ? Resolution{200, 1} : Resolution{64, 64};
}

/// (1/n) sum_{k<n} f(T^k x0).
inline double birkhoff_average(const SystemSpec& spec, const Point& x0,
                               const std::function<double(const Point&)>& f, std::size_t n)
{
    detail::require_autonomous(spec, "birkhoff_average");
    detail::require(n >= 1, "birkhoff_average needs n >= 1");
    require_in_domain(spec.phase(), x0);
    detail::CompensatedSum sum;
    Point p = x0;
    for (std::size_t k = 0; k < n; ++k) {
        sum.add(f(p));
        if (k + 1 < n) p = detail::step_autonomous(spec, p);
    }
    return sum.value() / static_cast<double>(n);
}

/// Equal-weight cloud on the first n orbit points.
inline PointCloud occupation_measure(const SystemSpec& spec, const Point& x0, std::size_t n)
{
    detail::require_autonomous(spec, "occupation_measure");
    detail::require(n >= 1, "occupation_measure needs n >= 1");
    return PointCloud::equal_weights(spec.phase(), orbit(spec, x0, n));
}

/// Running occupation measure mu_{n,x0} = (1/n) sum_{k<n} delta_{T^k x0}
/// together with exact running dictionary sums.
///
/// Orbit points are kept as atoms up to `cloud_limit` steps; past that the
/// accumulator switches to a histogram at `binned_resolution`. The dictionary
/// sums stay exact in both modes.
class OccupationAccumulator {
public:
    struct Options {
        std::size_t cloud_limit = 100000;
        std::optional<Resolution> binned_resolution;
        bool keep_atoms = true;
    };

    OccupationAccumulator(const SystemSpec& spec, const Point& x0, const Dictionary& dict, Options opts)
        : spec_(spec), x0_(x0), current_(x0), dict_(&dict), opts_(opts), sums_(dict.size()), scratch_(dict.size())
    {
        detail::require_autonomous(spec, "OccupationAccumulator");
        require_in_domain(spec.phase(), x0);
        detail::require(dict.phase() == spec.phase(), "dictionary phase does not match the system");
        if (!opts_.binned_resolution) opts_.binned_resolution = default_resolution(spec.phase());
    }

    OccupationAccumulator(const SystemSpec& spec, const Point& x0, const Dictionary& dict)
        : OccupationAccumulator(spec, x0, dict, Options{})
    {
    }

    /// Adds the next `steps` orbit points.
    void advance(std::size_t steps)
    {
        for (std::size_t k = 0; k < steps; ++k) {
            dict_->evaluate(current_, scratch_);
            for (std::size_t i = 0; i < scratch_.size(); ++i) sums_[i].add(scratch_[i]);
            record(current_);
            ++steps_;
            current_ = detail::step_autonomous(spec_, current_);
        }
    }

    std::size_t steps_done() const { return steps_; }
    const SystemSpec& spec() const { return spec_; }
    const Point& start() const { return x0_; }
    /// T^{steps_done} x0, the next point to be recorded.
    const Point& current() const { return current_; }
    bool binned_mode() const { return binned_; }
    std::size_t atom_count() const { return atoms_.size(); }

    /// sum_{k<n} f_i(T^k x0) for each dictionary function.
    std::vector<double> dictionary_sums() const
    {
        std::vector<double> out(sums_.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = sums_[i].value();
        return out;
    }

    /// Integrals of the dictionary against the occupation measure.
    std::vector<double> dictionary_integrals() const
    {
        detail::require(steps_ > 0, "occupation measure is empty");
        auto out = dictionary_sums();
        for (double& v : out) v /= static_cast<double>(steps_);
        return out;
    }

    /// The occupation measure as a cloud: exact atoms in cloud mode, cell
    /// centers in binned mode.
    PointCloud occupation() const
    {
        detail::require(steps_ > 0, "occupation measure is empty");
        if (!binned_) {
            detail::require(opts_.keep_atoms, "atoms were not kept for this accumulator");
            return PointCloud::equal_weights(spec_.phase(), atoms_);
        }
        return grid_as_cloud(binned());
    }

    GridMeasure binned() const
    {
        detail::require(steps_ > 0, "occupation measure is empty");
        if (binned_) return GridMeasure::normalized(spec_.phase(), *opts_.binned_resolution, counts_);
        return bin(PointCloud::equal_weights(spec_.phase(), atoms_), *opts_.binned_resolution);
    }

private:
    void record(const Point& p)
    {
        if (!opts_.keep_atoms) return;
        if (!binned_ && atoms_.size() < opts_.cloud_limit) {
            atoms_.push_back(p);
            return;
        }
        if (!binned_) {
            counts_.assign(opts_.binned_resolution->cells(), 0.0);
            for (const Point& a : atoms_) counts_[cell_index(spec_.phase(), *opts_.binned_resolution, a)] += 1.0;
            atoms_.clear();
            atoms_.shrink_to_fit();
            binned_ = true;
        }
        counts_[cell_index(spec_.phase(), *opts_.binned_resolution, p)] += 1.0;
    }

    SystemSpec spec_;
    Point x0_;
    Point current_;
    const Dictionary* dict_;
    Options opts_;
    std::vector<detail::CompensatedSum> sums_;
    std::vector<double> scratch_;
    std::vector<Point> atoms_;
    std::vector<double> counts_;
    bool binned_ = false;
    std::size_t steps_ = 0;
};

/// Cesaro average of binned pushforwards, (1/n) sum_{k<n} bin(T_*^k mu0).
class CesaroAccumulator {
public:
    CesaroAccumulator(const SystemSpec& spec, const PointCloud& mu0, Resolution res, std::size_t threads = 1)
        : spec_(spec), res_(res), threads_(threads), atoms_(mu0.atoms()), sums_(res.cells(), 0.0)
    {
        detail::require_autonomous(spec, "CesaroAccumulator");
        detail::require(mu0.phase() == spec.phase(), "initial measure phase does not match the system");
        validate_resolution(spec.phase(), res);
    }

    void advance(std::size_t steps)
    {
        const Phase phase = spec_.phase();
        for (std::size_t k = 0; k < steps; ++k) {
            for (const Atom& a : atoms_) sums_[cell_index(phase, res_, a.point)] += a.weight;
            parallel_for(atoms_.size(), threads_, [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i) atoms_[i].point = detail::step_autonomous(spec_, atoms_[i].point);
            });
            ++steps_;
        }
    }

    std::size_t steps_done() const { return steps_; }

    /// T_*^{steps_done} mu0.
    PointCloud current_cloud() const { return PointCloud(spec_.phase(), atoms_); }

    GridMeasure cesaro() const
    {
        detail::require(steps_ > 0, "Cesaro average is empty");
        return GridMeasure::normalized(spec_.phase(), res_, sums_);
    }

private:
    SystemSpec spec_;
    Resolution res_;
    std::size_t threads_;
    std::vector<Atom> atoms_;
    std::vector<double> sums_;
    std::size_t steps_ = 0;
};

inline GridMeasure cesaro_pushforward(const SystemSpec& spec, const PointCloud& mu0, std::size_t n, Resolution res,
                                      std::size_t threads = 1)
{
    detail::require(n >= 1, "cesaro_pushforward needs n >= 1");
    CesaroAccumulator acc(spec, mu0, res, threads);
    acc.advance(n);
    return acc.cesaro();
}

/// Cesaro averages at n and 2n plus their L1 distance, the Cauchy statistic
/// used to declare convergence.
struct CesaroCauchy {
    GridMeasure at_n;
    GridMeasure at_2n;
    double l1 = 0.0;
};

inline CesaroCauchy cesaro_cauchy(const SystemSpec& spec, const PointCloud& mu0, std::size_t n, Resolution res,
                                  std::size_t threads = 1)
{
    detail::require(n >= 1, "cesaro_cauchy needs n >= 1");
    CesaroAccumulator acc(spec, mu0, res, threads);
    acc.advance(n);
    GridMeasure first = acc.cesaro();
    acc.advance(n);
    GridMeasure second = acc.cesaro();
    const double d = l1_distance(first, second);
    return {std::move(first), std::move(second), d};
}

struct EnsembleResult {
    PointCloud final_cloud;
    GridMeasure averaged;
    std::vector<double> mean_trace;
};

/// Self-consistent evolution: each step computes E_mu of the current cloud
/// (fixed-order compensated sum), then moves every atom by T_{E_mu}.
inline EnsembleResult evolve_ensemble(const SystemSpec& spec, const PointCloud& cloud0, std::size_t n,
                                      std::optional<Resolution> res = std::nullopt, std::size_t threads = 1)
{
    if (!spec.measure_dependent())
        throw wrong_evaluator(std::string(spec.name()) + " is autonomous; evolve_ensemble needs a measure-dependent map");
    detail::require(cloud0.phase() == spec.phase(), "initial cloud phase does not match the system");
    detail::require(n >= 1, "evolve_ensemble needs n >= 1");
    const Resolution grid = res.value_or(default_resolution(spec.phase()));
    validate_resolution(spec.phase(), grid);

    std::vector<Atom> atoms = cloud0.atoms();
    std::vector<double> sums(grid.cells(), 0.0);
    std::vector<double> trace;
    trace.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        detail::CompensatedSum m;
        for (const Atom& a : atoms) {
            m.add(a.weight * a.point.x);
            sums[cell_index(spec.phase(), grid, a.point)] += a.weight;
        }
        const double e = std::clamp(m.value(), 0.0, 1.0);
        trace.push_back(e);
        parallel_for(atoms.size(), threads, [&](std::size_t b, std::size_t end) {
            for (std::size_t i = b; i < end; ++i)
                atoms[i].point.x = detail::step_selfconsistent(spec, atoms[i].point.x, e);
        });
    }
    return {PointCloud(spec.phase(), std::move(atoms)), GridMeasure::normalized(spec.phase(), grid, std::move(sums)),
            std::move(trace)};
}

/// Per-function |int f d mu_n - int f d(T_* mu_n)| for the occupation
/// measure mu_n of x0, each integral computed directly from its own cloud.
inline std::vector<double> telescoping_residuals(const SystemSpec& spec, const Point& x0, std::size_t n,
                                                 const Dictionary& dict)
{
    const PointCloud mu = occupation_measure(spec, x0, n);
    const PointCloud pushed = pushforward(mu, [&](const Point& p) { return detail::step_autonomous(spec, p); });
    const auto a = dict.integrate(mu);
    const auto b = dict.integrate(pushed);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::abs(a[i] - b[i]);
    return out;
}

} // namespace ergolab
