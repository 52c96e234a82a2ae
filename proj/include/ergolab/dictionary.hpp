#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "measure.hpp"
#include "phase.hpp"

namespace ergolab {

/// Bounded continuous test function: `bound` dominates sup |f| on the domain.
struct TestFunction {
    std::string label;
    std::function<double(const Point&)> eval;
    double bound = 1.0;
};

/// Fixed finite family of test functions. The discrepancy it induces,
/// max_f |int f dmu - int f dnu|, is the weak-star surrogate used throughout.
class Dictionary {
public:
    using BatchEval = std::function<void(const Point&, std::span<double>)>;

    Dictionary(Phase phase, std::vector<TestFunction> functions, BatchEval batch = {})
        : phase_(phase), functions_(std::move(functions)), batch_(std::move(batch))
    {
        detail::require(!functions_.empty(), "a dictionary needs at least one test function");
    }

    Phase phase() const { return phase_; }
    std::size_t size() const { return functions_.size(); }
    const std::vector<TestFunction>& functions() const { return functions_; }

    double max_bound() const
    {
        double b = 0.0;
        for (const auto& f : functions_) b = std::max(b, f.bound);
        return b;
    }

    /// Writes f_i(p) into out[i] for every function. Uses the fused evaluator
    /// when one was supplied.
    void evaluate(const Point& p, std::span<double> out) const
    {
        if (batch_) {
            batch_(p, out);
            return;
        }
        for (std::size_t i = 0; i < functions_.size(); ++i) out[i] = functions_[i].eval(p);
    }

    /// Integrals of every function against mu.
    std::vector<double> integrate(const PointCloud& mu) const
    {
        detail::require(mu.phase() == phase_, "dictionary and measure live on different phases");
        std::vector<detail::CompensatedSum> sums(size());
        std::vector<double> vals(size());
        for (const Atom& a : mu.atoms()) {
            evaluate(a.point, vals);
            for (std::size_t i = 0; i < vals.size(); ++i) sums[i].add(a.weight * vals[i]);
        }
        std::vector<double> out(size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = sums[i].value();
        return out;
    }

private:
    Phase phase_;
    std::vector<TestFunction> functions_;
    BatchEval batch_;
};

inline constexpr int dictionary_harmonics = 8;

/// {1, x, x^2, cos(2 pi k x), sin(2 pi k x) for k = 1..8}.
inline Dictionary interval_dictionary()
{
    std::vector<TestFunction> fs;
    fs.push_back({"1", [](const Point&) { return 1.0; }, 1.0});
    fs.push_back({"x", [](const Point& p) { return p.x; }, 1.0});
    fs.push_back({"x^2", [](const Point& p) { return p.x * p.x; }, 1.0});
    for (int k = 1; k <= dictionary_harmonics; ++k) {
        const double w = two_pi * k;
        fs.push_back({"cos(2pi*" + std::to_string(k) + "x)", [w](const Point& p) { return std::cos(w * p.x); }, 1.0});
        fs.push_back({"sin(2pi*" + std::to_string(k) + "x)", [w](const Point& p) { return std::sin(w * p.x); }, 1.0});
    }
    auto batch = [](const Point& p, std::span<double> out) {
        out[0] = 1.0;
        out[1] = p.x;
        out[2] = p.x * p.x;
        const double c1 = std::cos(two_pi * p.x), s1 = std::sin(two_pi * p.x);
        double c = c1, s = s1;
        for (int k = 1; k <= dictionary_harmonics; ++k) {
            out[2 * k + 1] = c;
            out[2 * k + 2] = s;
            const double cn = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = cn;
        }
    };
    return Dictionary(Phase::Interval01, std::move(fs), batch);
}

/// {1, R, R^2, cos(k phi), sin(k phi) for k = 1..8, R cos(phi), R sin(phi)}.
inline Dictionary disc_dictionary()
{
    std::vector<TestFunction> fs;
    fs.push_back({"1", [](const Point&) { return 1.0; }, 1.0});
    fs.push_back({"R", [](const Point& p) { return p.r; }, 1.0});
    fs.push_back({"R^2", [](const Point& p) { return p.r * p.r; }, 1.0});
    for (int k = 1; k <= dictionary_harmonics; ++k) {
        const double kk = k;
        fs.push_back({"cos(" + std::to_string(k) + "phi)", [kk](const Point& p) { return std::cos(kk * p.phi()); }, 1.0});
        fs.push_back({"sin(" + std::to_string(k) + "phi)", [kk](const Point& p) { return std::sin(kk * p.phi()); }, 1.0});
    }
    fs.push_back({"R*cos(phi)", [](const Point& p) { return p.r * std::cos(p.phi()); }, 1.0});
    fs.push_back({"R*sin(phi)", [](const Point& p) { return p.r * std::sin(p.phi()); }, 1.0});
    auto batch = [](const Point& p, std::span<double> out) {
        out[0] = 1.0;
        out[1] = p.r;
        out[2] = p.r * p.r;
        const double c1 = std::cos(p.phi()), s1 = std::sin(p.phi());
        double c = c1, s = s1;
        for (int k = 1; k <= dictionary_harmonics; ++k) {
            out[2 * k + 1] = c;
            out[2 * k + 2] = s;
            const double cn = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = cn;
        }
        out[2 * dictionary_harmonics + 3] = p.r * c1;
        out[2 * dictionary_harmonics + 4] = p.r * s1;
    };
    return Dictionary(Phase::Disc, std::move(fs), batch);
}

inline Dictionary default_dictionary(Phase phase)
{
    return phase == Phase::Interval01 ? interval_dictionary() : disc_dictionary();
}

} // namespace ergolab
