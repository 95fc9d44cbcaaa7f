#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fdmlmc/analysis.hpp"
#include "fdmlmc/mc.hpp"

using namespace fdmlmc;

namespace {

// Transport-free, diffusion-free model: the solution stays at its initial datum.
ModelSample frozen(const PiecewiseConstant& initial) {
    ModelSample s;
    s.flux = [](double) { return 0.0; };
    s.flux_derivative = [](double) { return 0.0; };
    s.diffusion = [](double) { return 0.0; };
    s.diffusion_derivative = [](double) { return 0.0; };
    s.initial = initial;
    return s;
}

ModelFactory frozen_indicator(double offset = 0.0, double scale = 1.0) {
    return [offset, scale](const BlParams& p) {
        auto init = bl_initial_profile(p.c);
        for (double& v : init.values) v = offset + scale * v;
        return frozen(init);
    };
}

// E[cell average of the shifted indicator] for c ~ U(c_lo, c_hi): the overlap
// length is piecewise linear in c, so the trapezoid rule between its kinks is exact.
double expected_cell_average(double a, double b, double c_lo, double c_hi) {
    const double right = std::min(b, 0.0);
    auto overlap = [&](double c) { return std::max(0.0, right - std::max(a, c - 0.5)); };
    std::vector<double> knots{c_lo, c_hi};
    for (double k : {a + 0.5, right + 0.5})
        if (k > c_lo && k < c_hi) knots.push_back(k);
    std::sort(knots.begin(), knots.end());
    double integral = 0.0;
    for (std::size_t j = 0; j + 1 < knots.size(); ++j)
        integral += 0.5 * (overlap(knots[j]) + overlap(knots[j + 1])) * (knots[j + 1] - knots[j]);
    return 0.1 + 0.75 * integral / (c_hi - c_lo) / (b - a);
}

} // namespace

TEST(McSampleCount, Examples) {
    EXPECT_EQ(mc_sample_count(0.1, 0.5, 2.0), 7u);
    EXPECT_EQ(mc_sample_count(0.1, 1.5, 2.0), 3u);
    EXPECT_NEAR(2.0 * std::pow(10.0, 1.0 / 7.0), 2.77899, 1e-5);
    for (double lam : {0.3, 0.75, 1.9}) EXPECT_EQ(mc_sample_count(1.0, lam, 2.0), 2u);
    EXPECT_THROW(mc_sample_count(0.1, 1.0, 2.0), DomainError);
    EXPECT_THROW(mc_sample_count(0.0, 0.5, 2.0), DomainError);
}

TEST(McSampleCount, SwitchesExponentAtTwoThirds) {
    const double dx = 0.01;
    EXPECT_EQ(mc_sample_count(dx, 2.0 / 3.0, 1.0), 10u);
    EXPECT_EQ(mc_sample_count(dx, 0.7, 1.0), static_cast<std::size_t>(std::ceil(std::pow(dx, -1.3 / 2.7))));
}

TEST(SampleMoments, MeanAndBiasedVariance) {
    const std::vector<std::vector<double>> rows{{1.0, 0.0}, {2.0, 0.0}, {6.0, 0.0}};
    const auto [mean, var] = sample_moments(rows);
    EXPECT_DOUBLE_EQ(mean[0], 3.0);
    EXPECT_DOUBLE_EQ(var[0], (4.0 + 1.0 + 9.0) / 3.0);
    EXPECT_EQ(mean[1], 0.0);
    EXPECT_EQ(var[1], 0.0);
    EXPECT_THROW(sample_moments({}), DomainError);
}

TEST(SampleMoments, EqualRowsGiveExactMeanAndZeroVariance) {
    const std::vector<std::vector<double>> rows(37, std::vector<double>{0.1, 0.85, 1.0 / 3.0});
    const auto [mean, var] = sample_moments(rows);
    EXPECT_EQ(mean, rows.front());
    for (double v : var) EXPECT_EQ(v, 0.0);
}

TEST(McEstimate, DegenerateDistributionEqualsSingleSolve) {
    const Grid1D g(5.0, 41);
    SolverConfig cfg;
    McConfig mc;
    mc.samples = 5;
    const BlParams p{0.04, 0.45, 0.15};
    const auto r = mc_estimate(g, 0.5, ParamDistribution::point(p), cfg, mc);
    EXPECT_EQ(r.mean.values, solve(make_sample(p), g, 0.5, cfg).values);
    for (double v : r.variance.values) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(r.samples_per_level, std::vector<std::size_t>{5});
}

TEST(McEstimate, SingleSampleHasZeroVariance) {
    const Grid1D g(5.0, 41);
    SolverConfig cfg;
    McConfig mc;
    mc.samples = 1;
    mc.master_seed = 12;
    const auto r = mc_estimate(g, 0.75, ParamDistribution{}, cfg, mc);
    const auto p = draw_params(ParamDistribution{}, {12, 0, 0});
    EXPECT_EQ(r.mean.values, solve(make_sample(p), g, 0.75, cfg).values);
    for (double v : r.variance.values) EXPECT_EQ(v, 0.0);
}

TEST(McEstimate, UsesSampleCountRuleWhenAuto) {
    const Grid1D g(5.0, 41);
    SolverConfig cfg;
    cfg.final_time = 0.05;
    McConfig mc;
    const auto r = mc_estimate(g, 0.5, ParamDistribution{}, cfg, mc);
    EXPECT_EQ(r.samples_per_level.front(), mc_sample_count(g.dx(), 0.5, 2.0));
}

TEST(McEstimate, VarianceIsNonnegative) {
    const Grid1D g(5.0, 41);
    SolverConfig cfg;
    McConfig mc;
    mc.samples = 20;
    const auto r = mc_estimate(g, 1.5, ParamDistribution{}, cfg, mc);
    for (double v : r.variance.values) EXPECT_GE(v, 0.0);
    EXPECT_GT(*std::max_element(r.variance.values.begin(), r.variance.values.end()), 0.0);
}

TEST(McEstimate, AffineInTheSolution) {
    const Grid1D g(5.0, 41);
    SolverConfig cfg;
    McConfig mc;
    mc.samples = 50;
    mc.master_seed = 3;
    const double a = 0.25, b = -1.75;
    const auto base = mc_estimate(g, 0.5, ParamDistribution{}, cfg, mc, frozen_indicator());
    const auto shifted = mc_estimate(g, 0.5, ParamDistribution{}, cfg, mc, frozen_indicator(a, b));
    for (std::size_t i = 0; i < g.cells(); ++i) {
        EXPECT_NEAR(shifted.mean[i], a + b * base.mean[i], 1e-12);
        EXPECT_NEAR(shifted.variance[i], b * b * base.variance[i], 1e-12);
    }
}

TEST(McEstimate, BitIdenticalAcrossWorkerCounts) {
    const Grid1D g(5.0, 41);
    SolverConfig cfg;
    McConfig mc;
    mc.samples = 16;
    mc.master_seed = 99;
    mc.workers = 1;
    const auto one = mc_estimate(g, 0.5, ParamDistribution{}, cfg, mc);
    for (int w : {2, 4, 7}) {
        mc.workers = w;
        const auto many = mc_estimate(g, 0.5, ParamDistribution{}, cfg, mc);
        EXPECT_EQ(many.mean.values, one.mean.values);
        EXPECT_EQ(many.variance.values, one.variance.values);
        EXPECT_EQ(many.solver_steps, one.solver_steps);
    }
}

TEST(McEstimate, FrozenModelConvergesToAnalyticMean) {
    // spot values of the oracle
    const Grid1D g(5.0, 41);
    std::vector<double> exact(g.cells());
    for (std::size_t i = 0; i < g.cells(); ++i) exact[i] = expected_cell_average(g.left_face(i), g.right_face(i), 0.0, 0.1);
    EXPECT_NEAR(expected_cell_average(-0.3, -0.2, 0.0, 0.1), 0.85, 1e-15);
    EXPECT_NEAR(expected_cell_average(0.5, 0.6, 0.0, 0.1), 0.1, 1e-15);
    // window edge sweeps [-0.5, -0.4]: cell [-0.5, -0.4] is covered half the time on average
    EXPECT_NEAR(expected_cell_average(-0.5, -0.4, 0.0, 0.1), 0.1 + 0.75 * 0.5, 1e-15);

    SolverConfig cfg;
    cfg.final_time = 0.2;
    McConfig mc;
    mc.samples = 4096;
    const auto r = mc_estimate(g, 0.5, ParamDistribution{}, cfg, mc, frozen_indicator());
    double err = 0.0;
    for (std::size_t i = 0; i < g.cells(); ++i) err += std::abs(r.mean[i] - exact[i]);
    EXPECT_LT(err * g.dx(), 5e-3);
}

TEST(McEstimate, ErrorDecaysLikeInverseSquareRootOfSamples) {
    const Grid1D g(5.0, 41);
    std::vector<double> exact(g.cells());
    for (std::size_t i = 0; i < g.cells(); ++i) exact[i] = expected_cell_average(g.left_face(i), g.right_face(i), 0.0, 0.1);
    SolverConfig cfg;
    cfg.final_time = 0.05;
    std::vector<double> ms, errs;
    for (std::size_t m : {4, 16, 64, 256}) {
        double avg = 0.0;
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            McConfig mc;
            mc.samples = m;
            mc.master_seed = 1000 + seed;
            const auto r = mc_estimate(g, 0.5, ParamDistribution{}, cfg, mc, frozen_indicator());
            double e = 0.0;
            for (std::size_t i = 0; i < g.cells(); ++i) e += std::abs(r.mean[i] - exact[i]);
            avg += e * g.dx() / 30.0;
        }
        ms.push_back(static_cast<double>(m));
        errs.push_back(avg);
    }
    const double slope = fit_rate(ms, errs);
    EXPECT_GE(slope, 0.3);
    EXPECT_LE(slope, 0.7);
}

TEST(McEstimate, FailingSampleReportsItsCoordinates) {
    const ParamDistribution dist;
    std::size_t first_bad = 0;
    while (draw_params(dist, {8, 2, first_bad}).c <= 0.08) ++first_bad;
    ModelFactory picky = [](const BlParams& p) {
        if (p.c > 0.08) throw std::runtime_error("rejected");
        return make_sample(p);
    };
    McConfig mc;
    mc.samples = first_bad + 10;
    mc.master_seed = 8;
    mc.seed_level = 2;
    SolverConfig cfg;
    cfg.final_time = 0.01;
    for (int w : {1, 3}) {
        mc.workers = w;
        try {
            mc_estimate(Grid1D(5.0, 41), 0.5, dist, cfg, mc, picky);
            ADD_FAILURE() << "expected SampleError";
        } catch (const SampleError& e) {
            EXPECT_EQ(e.level(), 2);
            EXPECT_EQ(e.index(), first_bad);
            EXPECT_NE(std::string(e.what()).find("rejected"), std::string::npos);
        }
    }
}

TEST(McEstimate, CsvHasThreeColumns) {
    const Grid1D g(1.5, 3);
    EstimatorResult r;
    r.mean = SolutionField(g, {0.1, 0.2, 0.3});
    r.variance = SolutionField(g, {0.0, 0.5, 0.0});
    std::ostringstream os;
    write_csv(os, r);
    EXPECT_EQ(os.str(), "x,mean,variance\n-1,0.10000000000000001,0\n0,0.20000000000000001,0.5\n1,0.29999999999999999,0\n");
}
