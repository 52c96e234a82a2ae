#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "averaging.hpp"
#include "errors.hpp"
#include "measure.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "systems.hpp"

namespace ergolab {

/// Row-stochastic cell-to-cell transition matrix approximating T_* on a grid.
/// Rows are stored sparsely, sorted by target cell.
class UlamMatrix {
public:
    struct Entry {
        std::size_t col;
        double prob;
    };

    UlamMatrix(SystemSpec spec, Resolution res, std::vector<std::vector<Entry>> rows, std::size_t samples_per_cell,
               std::uint64_t seed)
        : spec_(std::move(spec)), res_(res), rows_(std::move(rows)), samples_(samples_per_cell), seed_(seed)
    {
        detail::require(rows_.size() == res_.cells(), "one row per cell is required");
        for (const auto& row : rows_) {
            double total = 0.0;
            for (const Entry& e : row) {
                detail::require(e.col < res_.cells(), "transition target outside the grid");
                detail::require(e.prob >= 0.0, "transition probabilities must be nonnegative");
                total += e.prob;
            }
            detail::require(std::abs(total - 1.0) <= 1e-9, "Ulam rows must sum to one");
        }
    }

    const SystemSpec& spec() const { return spec_; }
    Phase phase() const { return spec_.phase(); }
    Resolution resolution() const { return res_; }
    std::size_t size() const { return rows_.size(); }
    const std::vector<Entry>& row(std::size_t i) const { return rows_.at(i); }
    std::size_t samples_per_cell() const { return samples_; }
    std::uint64_t seed() const { return seed_; }

private:
    SystemSpec spec_;
    Resolution res_;
    std::vector<std::vector<Entry>> rows_;
    std::size_t samples_;
    std::uint64_t seed_;
};

namespace detail {

/// j-th of s stratified reference-measure samples inside a cell, with a
/// seeded jitter of at most a quarter stratum.
inline Point stratified_sample(Phase phase, const CellBox& box, std::size_t j, std::size_t s, Rng& rng)
{
    const double strata = static_cast<double>(s);
    const double u = (static_cast<double>(j) + 0.5 + rng.uniform(-0.25, 0.25)) / strata;
    if (phase == Phase::Interval01) return Point::on_interval(box.lo.x + u * (box.hi.x - box.lo.x));
    constexpr double golden = 0.6180339887498949;
    const double v = wrap_unit((static_cast<double>(j) + 0.5) * golden + rng.uniform(-0.25, 0.25) / strata);
    const double r2 = box.lo.r * box.lo.r + u * (box.hi.r * box.hi.r - box.lo.r * box.lo.r);
    const double phi = box.lo.x + v * (box.hi.x - box.lo.x);
    return Point::polar(phi < two_pi ? phi : 0.0, std::min(1.0, std::sqrt(r2)));
}

} // namespace detail

/// Estimates each row by pushing `samples_per_cell` stratified points of the
/// source cell through the map and histogramming their images.
inline UlamMatrix build_ulam(const SystemSpec& spec, Resolution res, std::size_t samples_per_cell, std::uint64_t seed,
                             std::size_t threads = 1)
{
    detail::require_autonomous(spec, "build_ulam");
    detail::require(samples_per_cell >= 1, "build_ulam needs at least one sample per cell");
    validate_resolution(spec.phase(), res);
    const Phase phase = spec.phase();
    std::vector<std::vector<UlamMatrix::Entry>> rows(res.cells());
    parallel_for(res.cells(), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> hits;
        hits.reserve(samples_per_cell);
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng(derive_seed(seed, i));
            const CellBox box = cell_box(phase, res, i);
            hits.clear();
            for (std::size_t j = 0; j < samples_per_cell; ++j) {
                const Point p = detail::stratified_sample(phase, box, j, samples_per_cell, rng);
                hits.push_back(cell_index(phase, res, detail::step_autonomous(spec, p)));
            }
            std::sort(hits.begin(), hits.end());
            auto& row = rows[i];
            for (std::size_t k = 0; k < hits.size();) {
                std::size_t m = k;
                while (m < hits.size() && hits[m] == hits[k]) ++m;
                row.push_back({hits[k], static_cast<double>(m - k) / static_cast<double>(samples_per_cell)});
                k = m;
            }
        }
    });
    return UlamMatrix(spec, res, std::move(rows), samples_per_cell, seed);
}

/// Mass-conserving left application p -> p P.
inline GridMeasure ulam_push(const UlamMatrix& matrix, const GridMeasure& density)
{
    detail::require(density.phase() == matrix.phase() && density.resolution() == matrix.resolution(),
                    "density resolution does not match the Ulam matrix");
    std::vector<double> out(matrix.size(), 0.0);
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        const double m = density.mass(i);
        if (m == 0.0) continue;
        for (const auto& e : matrix.row(i)) out[e.col] += m * e.prob;
    }
    return GridMeasure::normalized(density.phase(), density.resolution(), std::move(out));
}

/// Row-stochastic product a * b (apply a, then b).
inline UlamMatrix ulam_compose(const UlamMatrix& a, const UlamMatrix& b)
{
    detail::require(a.resolution() == b.resolution(), "cannot compose Ulam matrices of different resolution");
    std::vector<std::vector<UlamMatrix::Entry>> rows(a.size());
    std::vector<double> acc(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (const auto& e : a.row(i))
            for (const auto& f : b.row(e.col)) acc[f.col] += e.prob * f.prob;
        for (std::size_t j = 0; j < acc.size(); ++j)
            if (acc[j] > 0.0) rows[i].push_back({j, acc[j]});
    }
    return UlamMatrix(a.spec(), a.resolution(), std::move(rows), a.samples_per_cell(), a.seed());
}

struct UlamCesaroResult {
    GridMeasure density;
    bool converged = false;
    std::size_t iterations = 0;
    /// L1 gap between the last two compared averages.
    double last_gap = 0.0;
};

/// Cesaro averages A_n = (1/n) sum_{k<n} u P^k of the uniform reference
/// density u, compared at dyadic checkpoints: stops at the first n = 2^j with
/// |A_n - A_{n/2}|_1 < tol, or at n_max.
inline UlamCesaroResult ulam_cesaro_fixed_density(const UlamMatrix& matrix, std::size_t n_max, double tol)
{
    detail::require(n_max >= 2, "ulam_cesaro_fixed_density needs n_max >= 2");
    const Phase phase = matrix.phase();
    const Resolution res = matrix.resolution();
    GridMeasure p = reference_grid(phase, res);
    std::vector<double> sum(res.cells(), 0.0);
    std::optional<GridMeasure> previous;
    std::size_t checkpoint = 1;
    double gap = 0.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += p.mass(i);
        p = ulam_push(matrix, p);
        if (n == checkpoint || n == n_max) {
            GridMeasure avg = GridMeasure::normalized(phase, res, sum);
            if (previous) {
                gap = l1_distance(avg, *previous);
                if (gap < tol) return {std::move(avg), true, n, gap};
            }
            if (n == n_max) return {std::move(avg), false, n, gap};
            previous = std::move(avg);
            checkpoint *= 2;
        }
    }
    return {GridMeasure::normalized(phase, res, sum), false, n_max, gap};
}

} // namespace ergolab
