#include <gtest/gtest.h>

#include <bit>
#include <cmath>

#include <ergolab/averaging.hpp>
#include <ergolab/diagnostics.hpp>

using namespace ergolab;

namespace {

double identity_x(const Point& p) { return p.x; }

SystemSpec no_rotation() { return SystemSpec(Family::DiscNoRotation); }

} // namespace

TEST(Birkhoff, ConstantObservable)
{
    for (Family f : all_families) {
        const SystemSpec s(f);
        if (s.measure_dependent()) continue;
        const Point x0 = s.phase() == Phase::Interval01 ? Point::on_interval(0.37) : Point::polar(1.0, 0.8);
        EXPECT_NEAR(birkhoff_average(s, x0, [](const Point&) { return 2.5; }, 777), 2.5, 1e-14);
    }
}

TEST(Birkhoff, HalvingGeometricSum)
{
    double oracle = 0.0;
    for (int k = 0; k < 20; ++k) oracle += std::ldexp(1.0, -k);
    oracle /= 20.0;
    EXPECT_NEAR(oracle, (2.0 - std::ldexp(1.0, 1 - 20)) / 20.0, 1e-16);
    EXPECT_NEAR(birkhoff_average(SystemSpec(Family::Halving), Point::on_interval(1.0), identity_x, 20), oracle, 1e-16);
}

TEST(Birkhoff, DoublingLebesgueMean)
{
    Rng rng(12);
    const Point x0 = Point::on_interval(rng.uniform());
    const double a = birkhoff_average(SystemSpec(Family::Doubling), x0, identity_x, 100000);
    const double b = birkhoff_average(SystemSpec(Family::Doubling), x0, identity_x, 50000);
    EXPECT_NEAR(a, 0.5, 0.01);
    EXPECT_NEAR(a, b, 0.01);
}

TEST(Birkhoff, Errors)
{
    EXPECT_THROW(birkhoff_average(SystemSpec(Family::MultA), Point::on_interval(0.2), identity_x, 10),
                 ergolab::wrong_evaluator);
    EXPECT_THROW(birkhoff_average(SystemSpec(Family::Halving), Point::on_interval(0.2), identity_x, 0),
                 ergolab::invalid_argument);
}

TEST(Occupation, EqualsOrbitCloud)
{
    const SystemSpec s(Family::DiscRotation);
    const auto o = orbit(s, Point::polar(0.4, 0.1), 500);
    const auto occ = occupation_measure(s, Point::polar(0.4, 0.1), 500);
    ASSERT_EQ(occ.size(), o.size());
    for (std::size_t i = 0; i < o.size(); ++i) {
        EXPECT_EQ(occ.atoms()[i].point, o[i]);
        EXPECT_EQ(occ.atoms()[i].weight, 1.0 / 500.0);
    }
}

TEST(Occupation, HalvingTransportBound)
{
    const auto occ = occupation_measure(SystemSpec(Family::Halving), Point::on_interval(0.8), 10000);
    EXPECT_LE(w1_interval(occ, dirac(Phase::Interval01, Point::on_interval(0.0))), 2.0 * 0.8 / 10000.0 + 1e-15);
}

TEST(Occupation, GiGiTendsToEndpointMixture)
{
    const auto occ = occupation_measure(SystemSpec(Family::GiGi), Point::on_interval(0.3), 100000);
    const PointCloud target(Phase::Interval01, {{Point::on_interval(0.0), 0.5}, {Point::on_interval(1.0), 0.5}});
    EXPECT_LT(dict_discrepancy(occ, target, interval_dictionary()), 0.02);
}

TEST(Occupation, DiscNoRotationTendsToRadialProjection)
{
    const Point x0 = Point::polar(1.3, 0.85);
    const auto occ = occupation_measure(no_rotation(), x0, 100000);
    const auto target = dirac(Phase::Disc, Point::polar(1.3, 0.5));
    EXPECT_LT(dict_discrepancy(occ, target, disc_dictionary()), 0.02);
}

TEST(OccupationAccumulator, SumsMatchDirectEvaluation)
{
    const SystemSpec s(Family::Doubling);
    const Dictionary dict = interval_dictionary();
    OccupationAccumulator acc(s, Point::on_interval(0.123), dict);
    acc.advance(3000);
    const auto sums = acc.dictionary_sums();
    const auto o = orbit(s, Point::on_interval(0.123), 3000);
    for (std::size_t i = 0; i < dict.size(); ++i) {
        double direct = 0.0;
        for (const auto& p : o) direct += dict.functions()[i].eval(p);
        EXPECT_NEAR(sums[i], direct, 1e-9 * 3000) << dict.functions()[i].label;
    }
    EXPECT_EQ(acc.atom_count(), 3000u);
    EXPECT_EQ(acc.steps_done(), 3000u);
}

TEST(OccupationAccumulator, SwitchesToBinnedMode)
{
    const SystemSpec s(Family::Doubling);
    const Dictionary dict = interval_dictionary();
    OccupationAccumulator::Options opts;
    opts.cloud_limit = 1000;
    opts.binned_resolution = Resolution{50, 1};
    OccupationAccumulator acc(s, Point::on_interval(0.3), dict, opts);
    acc.advance(999);
    EXPECT_FALSE(acc.binned_mode());
    const GridMeasure before = acc.binned();
    acc.advance(5001);
    EXPECT_TRUE(acc.binned_mode());
    EXPECT_NEAR(acc.binned().total_mass(), 1.0, 1e-12);
    EXPECT_NEAR(acc.occupation().total_weight(), 1.0, 1e-12);
    EXPECT_EQ(acc.steps_done(), 6000u);

    // binned counts agree with binning the explicit orbit
    const GridMeasure direct = bin(occupation_measure(s, Point::on_interval(0.3), 6000), {50, 1});
    EXPECT_LT(l1_distance(acc.binned(), direct), 1e-12);
    EXPECT_NEAR(before.total_mass(), 1.0, 1e-12);
}

TEST(Cesaro, SingleTermIsBinnedInitialMeasure)
{
    const auto mu0 = uniform_cloud(Phase::Interval01, 1000, 5);
    const auto g = cesaro_pushforward(SystemSpec(Family::Halving), mu0, 1, {20, 1});
    EXPECT_EQ(g.masses(), bin(mu0, {20, 1}).masses());
}

TEST(Cesaro, SquareJumpConcentratesAtZero)
{
    const auto g = cesaro_pushforward(SystemSpec(Family::SquareJump, {{"c", 0.5}}),
                                      uniform_cloud(Phase::Interval01, 10000, 2), 10000, {100, 1});
    EXPECT_GE(g.mass(0), 0.95);
}

TEST(Cesaro, DiscRotationSpreadsOverCircle)
{
    const SystemSpec s(Family::DiscRotation);
    const auto g = cesaro_pushforward(s, smooth_perturbation(Phase::Disc, 5000, 4), 10000, {64, 64});
    // angle marginal against uniform, via the phi-only dictionary terms
    const auto avg = grid_as_cloud(g);
    const auto ref = conditional_on_circle(0.5, 10000);
    EXPECT_LT(dict_discrepancy(avg, ref, disc_dictionary()), 0.02 + 1.0 / 64.0);
    double near_r = 0.0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
        const std::size_t ir = c % 64;
        if (ir == 31 || ir == 32) near_r += g.mass(c);
    }
    EXPECT_GE(near_r, 0.95);
}

TEST(Cesaro, MassConservedAndCauchyBounded)
{
    const SystemSpec s(Family::DiscontInterval);
    const auto cc = cesaro_cauchy(s, uniform_cloud(Phase::Interval01, 2000, 1), 500, {100, 1});
    EXPECT_NEAR(cc.at_n.total_mass(), 1.0, 1e-12);
    EXPECT_NEAR(cc.at_2n.total_mass(), 1.0, 1e-12);
    EXPECT_LE(cc.l1, 1.0);
}

TEST(Cesaro, ThreadIndependent)
{
    const SystemSpec s(Family::DiscJump);
    const auto mu0 = uniform_cloud(Phase::Disc, 3001, 9);
    const auto a = cesaro_pushforward(s, mu0, 200, {32, 32}, 1);
    const auto b = cesaro_pushforward(s, mu0, 200, {32, 32}, 4);
    EXPECT_EQ(a.masses(), b.masses());
}

TEST(Cesaro, RejectsMeasureDependent)
{
    EXPECT_THROW(cesaro_pushforward(SystemSpec(Family::MultB), uniform_cloud(Phase::Interval01, 10, 1), 5, {10, 1}),
                 ergolab::wrong_evaluator);
}

TEST(Ensemble, MultAContractsToZero)
{
    const auto res = evolve_ensemble(SystemSpec(Family::MultA), uniform_cloud(Phase::Interval01, 10000, 1), 200);
    EXPECT_EQ(res.mean_trace.size(), 200u);
    EXPECT_LT(interval_mean(res.final_cloud), 1e-3);
    EXPECT_NEAR(res.averaged.total_mass(), 1.0, 1e-12);
}

TEST(Ensemble, MultBOneStepMatchesFrozenDoubling)
{
    const PointCloud c(Phase::Interval01, {{Point::on_interval(0.2), 0.25},
                                           {Point::on_interval(0.4), 0.25},
                                           {Point::on_interval(0.6), 0.25},
                                           {Point::on_interval(0.8), 0.25}});
    ASSERT_EQ(interval_mean(c), 0.5);
    const auto res = evolve_ensemble(SystemSpec(Family::MultB), c, 1);
    ASSERT_EQ(res.mean_trace.front(), 0.5);
    const auto frozen = pushforward(c, [](const Point& p) { return eval_map(SystemSpec(Family::Doubling), p); });
    for (std::size_t i = 0; i < c.size(); ++i)
        EXPECT_EQ(std::bit_cast<std::uint64_t>(res.final_cloud.atoms()[i].point.x),
                  std::bit_cast<std::uint64_t>(frozen.atoms()[i].point.x));
}

TEST(Ensemble, TentAdditiveStaysNearLebesgue)
{
    const auto res = evolve_ensemble(SystemSpec(Family::TentAdditive, {{"epsilon", 0.05}}),
                                     uniform_cloud(Phase::Interval01, 20000, 3), 300, Resolution{50, 1});
    EXPECT_LT(l1_distance(res.averaged, reference_grid(Phase::Interval01, {50, 1})), 0.1);
}

TEST(Ensemble, ThreadIndependent)
{
    const auto c = uniform_cloud(Phase::Interval01, 5003, 3);
    const auto a = evolve_ensemble(SystemSpec(Family::MultB), c, 50, std::nullopt, 1);
    const auto b = evolve_ensemble(SystemSpec(Family::MultB), c, 50, std::nullopt, 3);
    EXPECT_EQ(a.mean_trace, b.mean_trace);
    EXPECT_EQ(a.averaged.masses(), b.averaged.masses());
}

TEST(Ensemble, RejectsAutonomous)
{
    EXPECT_THROW(evolve_ensemble(SystemSpec(Family::Doubling), uniform_cloud(Phase::Interval01, 10, 1), 5),
                 ergolab::wrong_evaluator);
}

TEST(Telescoping, BoundHoldsForEveryAutonomousFamily)
{
    for (Family f : all_families) {
        const SystemSpec s(f);
        if (s.measure_dependent()) continue;
        const Dictionary dict = default_dictionary(s.phase());
        for (std::size_t n : {100u, 1000u}) {
            for (std::uint64_t i = 0; i < 3; ++i) {
                Rng rng(derive_seed(n, i));
                const auto r = telescoping_residuals(s, sample_reference(s.phase(), rng), n, dict);
                for (std::size_t j = 0; j < r.size(); ++j)
                    EXPECT_LE(r[j], 2.0 * dict.functions()[j].bound / static_cast<double>(n) + 1e-12)
                        << to_string(f) << " " << dict.functions()[j].label;
            }
        }
    }
}

TEST(Telescoping, MatchesEndpointIdentity)
{
    // int f d mu_n - int f d T_* mu_n = (f(x0) - f(T^n x0)) / n
    const SystemSpec s(Family::Doubling);
    const Dictionary dict = interval_dictionary();
    const Point x0 = Point::on_interval(0.271);
    const auto o = orbit(s, x0, 101);
    const auto r = telescoping_residuals(s, x0, 100, dict);
    for (std::size_t j = 0; j < r.size(); ++j)
        EXPECT_NEAR(r[j], std::abs(dict.functions()[j].eval(o[0]) - dict.functions()[j].eval(o[100])) / 100.0, 1e-13);
}
