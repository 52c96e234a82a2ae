#include <gtest/gtest.h>

#include <cmath>

#include <ergolab/averaging.hpp>
#include <ergolab/ulam.hpp>

using namespace ergolab;

namespace {

double row_sum(const UlamMatrix& m, std::size_t i)
{
    double s = 0.0;
    for (const auto& e : m.row(i)) s += e.prob;
    return s;
}

double row_mass_to(const UlamMatrix& m, std::size_t i, std::size_t col)
{
    for (const auto& e : m.row(i))
        if (e.col == col) return e.prob;
    return 0.0;
}

GridMeasure delta_cell(Phase phase, Resolution res, std::size_t cell)
{
    std::vector<double> m(res.cells(), 0.0);
    m[cell] = 1.0;
    return GridMeasure(phase, res, m);
}

} // namespace

TEST(BuildUlam, HalvingRowIsTheImageCell)
{
    const auto m = build_ulam(SystemSpec(Family::Halving), {10, 1}, 100, 1);
    ASSERT_EQ(m.row(8).size(), 1u);
    EXPECT_EQ(m.row(8)[0].col, 4u);
    EXPECT_EQ(m.row(8)[0].prob, 1.0);
}

TEST(BuildUlam, DoublingFirstRowSplitsEvenly)
{
    // image of [0, 0.1) under 2x is [0, 0.2): Lebesgue fractions 1/2 in cells 0 and 1
    const auto m = build_ulam(SystemSpec(Family::Doubling), {10, 1}, 10000, 1);
    EXPECT_NEAR(row_mass_to(m, 0, 0), 0.5, 1e-3);
    EXPECT_NEAR(row_mass_to(m, 0, 1), 0.5, 1e-3);
    // [0.55, 0.6) -> [0.1, 0.2), which is cells 2 and 3 at N = 20
    const auto n = build_ulam(SystemSpec(Family::Doubling), {20, 1}, 1000, 1);
    EXPECT_NEAR(row_mass_to(n, 11, 2), 0.5, 1e-2);
    EXPECT_NEAR(row_mass_to(n, 11, 3), 0.5, 1e-2);
}

TEST(BuildUlam, RowsAreStochastic)
{
    for (Family f : all_families) {
        const SystemSpec s(f);
        if (s.measure_dependent()) continue;
        const Resolution res = s.phase() == Phase::Interval01 ? Resolution{37, 1} : Resolution{12, 9};
        const auto m = build_ulam(s, res, 17, 5);
        for (std::size_t i = 0; i < m.size(); ++i) {
            EXPECT_NEAR(row_sum(m, i), 1.0, 1e-12) << to_string(f);
            for (const auto& e : m.row(i)) EXPECT_GE(e.prob, 0.0);
        }
    }
}

TEST(BuildUlam, Errors)
{
    EXPECT_THROW(build_ulam(SystemSpec(Family::MultA), {10, 1}, 10, 1), ergolab::wrong_evaluator);
    EXPECT_THROW(build_ulam(SystemSpec(Family::Halving), {10, 1}, 0, 1), ergolab::invalid_argument);
}

TEST(BuildUlam, ThreadIndependent)
{
    const auto a = build_ulam(SystemSpec(Family::DiscJump), {16, 16}, 20, 3, 1);
    const auto b = build_ulam(SystemSpec(Family::DiscJump), {16, 16}, 20, 3, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a.row(i).size(), b.row(i).size());
        for (std::size_t k = 0; k < a.row(i).size(); ++k) {
            EXPECT_EQ(a.row(i)[k].col, b.row(i)[k].col);
            EXPECT_EQ(a.row(i)[k].prob, b.row(i)[k].prob);
        }
    }
}

TEST(UlamPush, UniformThroughDoubling)
{
    const std::size_t samples = 200;
    const auto m = build_ulam(SystemSpec(Family::Doubling), {50, 1}, samples, 2);
    const auto out = ulam_push(m, reference_grid(Phase::Interval01, {50, 1}));
    for (double v : out.masses()) EXPECT_NEAR(v, 1.0 / 50.0, 2.0 / static_cast<double>(samples));
}

TEST(UlamPush, DeltaCellThroughHalving)
{
    const auto m = build_ulam(SystemSpec(Family::Halving), {10, 1}, 50, 2);
    const auto out = ulam_push(m, delta_cell(Phase::Interval01, {10, 1}, 8));
    EXPECT_EQ(out.mass(4), 1.0);
}

TEST(UlamPush, ConservesMass)
{
    const auto m = build_ulam(SystemSpec(Family::DiscRotation), {16, 8}, 10, 2);
    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> v(m.size());
        for (auto& x : v) x = rng.uniform();
        const auto out = ulam_push(m, GridMeasure::normalized(Phase::Disc, {16, 8}, v));
        EXPECT_NEAR(out.total_mass(), 1.0, 1e-12);
    }
}

TEST(UlamPush, ResolutionMismatch)
{
    const auto m = build_ulam(SystemSpec(Family::Halving), {10, 1}, 5, 2);
    EXPECT_THROW(ulam_push(m, reference_grid(Phase::Interval01, {20, 1})), ergolab::invalid_argument);
}

TEST(UlamCompose, PowersStayStochastic)
{
    const auto p1 = build_ulam(SystemSpec(Family::DiscontInterval), {40, 1}, 50, 7);
    const auto p2 = ulam_compose(p1, p1);
    const auto p4 = ulam_compose(p2, p2);
    const auto p8 = ulam_compose(p4, p4);
    for (const UlamMatrix* m : {&p2, &p4, &p8})
        for (std::size_t i = 0; i < m->size(); ++i) EXPECT_NEAR(row_sum(*m, i), 1.0, 1e-12);
    // composing equals pushing twice
    const auto d = delta_cell(Phase::Interval01, {40, 1}, 31);
    const auto twice = ulam_push(p1, ulam_push(p1, d));
    const auto once = ulam_push(p2, d);
    EXPECT_LT(l1_distance(twice, once), 1e-12);
}

TEST(UlamCesaro, DoublingIsUniform)
{
    const auto m = build_ulam(SystemSpec(Family::Doubling), {100, 1}, 1000, 1);
    const auto r = ulam_cesaro_fixed_density(m, 1024, 0.01);
    EXPECT_TRUE(r.converged);
    EXPECT_LT(l1_distance(r.density, reference_grid(Phase::Interval01, {100, 1})), 0.05);
}

TEST(UlamCesaro, HalvingConcentratesInFirstCell)
{
    const auto m = build_ulam(SystemSpec(Family::Halving), {100, 1}, 100, 1);
    const auto r = ulam_cesaro_fixed_density(m, 4096, 1e-3);
    EXPECT_GE(r.density.mass(0), 0.99);
}

TEST(UlamCesaro, SquareJumpConcentratesInFirstCell)
{
    const auto m = build_ulam(SystemSpec(Family::SquareJump, {{"c", 0.5}}), {100, 1}, 100, 1);
    const auto r = ulam_cesaro_fixed_density(m, 4096, 1e-3);
    EXPECT_GE(r.density.mass(0), 0.95);
}

TEST(UlamCesaro, AgreesWithParticlePipelineForDoubling)
{
    const auto m = build_ulam(SystemSpec(Family::Doubling), {100, 1}, 1000, 1);
    const auto u = ulam_cesaro_fixed_density(m, 1024, 0.01);
    const auto p = cesaro_pushforward(SystemSpec(Family::Doubling), uniform_cloud(Phase::Interval01, 100000, 4), 100,
                                      {100, 1});
    EXPECT_LT(l1_distance(u.density, p), 0.1);
}

TEST(UlamCesaro, ReportsNonConvergence)
{
    // the uniform start leaves cell 0 after one step, so the gap at n = 4 is 1/4
    const auto m = build_ulam(SystemSpec(Family::Doubling), {2, 1}, 1, 1);
    const auto r = ulam_cesaro_fixed_density(m, 4, 1e-9);
    EXPECT_EQ(r.iterations, 4u);
    EXPECT_NEAR(r.density.total_mass(), 1.0, 1e-12);
    EXPECT_THROW(ulam_cesaro_fixed_density(m, 1, 0.1), ergolab::invalid_argument);
}
