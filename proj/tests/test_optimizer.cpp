#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "memchan/optimizer.hpp"
#include "oracles.hpp"

using namespace memchan;
using memchan::testing::scan_threshold;

namespace {

constexpr double kNoise = 2.0 / 3.0;
constexpr double kNbar = 2.0;
constexpr double kMemorylessRate = 1.481369110191152693;

double rate_at(const ChannelParams &c, double r, double y) {
    return transmission_rate(c, InputParams{kNbar, r, y, {}}).rate;
}

} // namespace

TEST(FeasibleRegion, TwoModeMemoryBound) {
    const FeasibleRegion region = feasible_region(ChannelParams::make(2, kNoise, 0.0), kNbar);
    EXPECT_NEAR(region.s_max, std::acosh(4.0 / 3.0), 1e-9);
    // Closed form for the squeezing bound: (cosh r - 1)/2 = nbar.
    EXPECT_NEAR(region.r_max, std::acosh(1.0 + 2.0 * kNbar), 1e-9);
    EXPECT_EQ(region.r_min, 0.0);
}

TEST(FeasibleRegion, CorrelationBandClosedFormAndEdge) {
    const FeasibleRegion region = feasible_region(ChannelParams::make(2, kNoise, 0.2), kNbar);
    EXPECT_NEAR(region.y_max(0.0), std::acosh(4.0), 1e-9);
    auto feasible = [](double y) { return modulation_slack(2, InputParams{kNbar, 0.0, y, {}}) >= 0.0; };
    EXPECT_NEAR(scan_threshold(feasible, 3.0, 300000), region.y_max(0.0), 1e-5);
    EXPECT_EQ(region.y_max(region.r_max), 0.0);
}

TEST(FeasibleRegion, CorrelationBandShrinksWithSqueezing) {
    for (int n : {2, 3, 5}) {
        const FeasibleRegion region = feasible_region(ChannelParams::make(n, kNoise, 0.1), kNbar);
        double previous = region.y_max(0.0);
        EXPECT_GT(previous, 0.0);
        for (int i = 1; i <= 40; ++i) {
            const double r = region.r_max * i / 40.0;
            const double current = region.y_max(r);
            EXPECT_LE(current, previous + 1e-12) << "n = " << n << " r = " << r;
            EXPECT_GE(current, 0.0);
            previous = current;
        }
    }
}

TEST(FeasibleRegion, UnboundedAndDegenerateCases) {
    EXPECT_TRUE(std::isinf(feasible_region(ChannelParams::make(1, kNoise, 0.0), kNbar).s_max));
    EXPECT_TRUE(std::isinf(feasible_region(ChannelParams::make(3, 0.2, 0.0, 0.0), kNbar).s_max));
    EXPECT_EQ(feasible_region(ChannelParams::make(1, kNoise, 0.0), kNbar).r_max, 0.0);
    EXPECT_EQ(feasible_region(ChannelParams::make(1, kNoise, 0.0), kNbar).y_max(0.0), 0.0);
    EXPECT_THROW((void)feasible_region(ChannelParams::make(2, 0.0, 0.1), kNbar), EmptyRegion);
    EXPECT_THROW((void)feasible_region(ChannelParams::make(2, kNoise, 0.9), kNbar), InfeasibleMemory);
}

TEST(FeasibleRegion, FixedThetaIntervals) {
    const ChannelParams c = ChannelParams::make(2, kNoise, 0.1);
    const FeasibleRegion one = feasible_region(c, kNbar, 1.0);
    EXPECT_EQ(one.r_min, 0.0);
    // Budget stays >= 1/2: (cosh r - 1)/2 <= 3/2.
    EXPECT_NEAR(one.r_max, std::acosh(4.0), 1e-9);

    const FeasibleRegion half = feasible_region(c, kNbar, 0.5);
    EXPECT_NEAR(half.r_min, std::acosh(4.0), 1e-9);
    EXPECT_NEAR(half.r_max, std::acosh(1.0 + 2.0 * (kNbar - 0.25)), 1e-9);
    EXPECT_NO_THROW((void)max_over_y(c, kNbar, 0.5 * (half.r_min + half.r_max), SearchSettings{.theta = 0.5}));

    EXPECT_THROW((void)feasible_region(c, 0.2, 1.0), EmptyRegion);
    EXPECT_THROW((void)feasible_region(c, kNbar, 1.5), InvalidParameter);
}

TEST(MaxOverY, MemorylessOptimumIsUncorrelated) {
    const RateResult best = max_over_y(ChannelParams::make(2, kNoise, 0.0), kNbar, 0.0);
    EXPECT_NEAR(best.input.y, 0.0, 1e-4);
    EXPECT_NEAR(best.rate, kMemorylessRate, 1e-9);
}

TEST(MaxOverY, DominatesFixedPointsAndGrid) {
    const ChannelParams c = ChannelParams::make(2, kNoise, 0.2);
    const RateResult best = max_over_y(c, kNbar, 0.0);
    EXPECT_GE(best.rate, rate_at(c, 0.0, 0.0));
    const double y_max = feasible_region(c, kNbar).y_max(0.0);
    double grid_best = -1.0;
    for (int i = 0; i < 129; ++i) {
        grid_best = std::max(grid_best, rate_at(c, 0.0, -y_max + 2.0 * y_max * i / 128.0));
    }
    EXPECT_GE(best.rate, grid_best - 1e-9);
    // Memory rewards positive modulation correlation in this convention.
    EXPECT_GT(best.input.y, 0.0);
}

TEST(MaxOverY, SignRestrictedSearches) {
    const ChannelParams c = ChannelParams::make(3, kNoise, 0.2);
    const RateResult both = max_over_y(c, kNbar, 0.1);
    const RateResult positive = max_over_y(c, kNbar, 0.1, SearchSettings{.y_sign = YSign::positive});
    const RateResult negative = max_over_y(c, kNbar, 0.1, SearchSettings{.y_sign = YSign::negative});
    EXPECT_GE(positive.input.y, 0.0);
    EXPECT_LE(negative.input.y, 0.0);
    EXPECT_NEAR(both.rate, std::max(positive.rate, negative.rate), 1e-9);
}

TEST(MaxOverRY, MemorylessPrefersNoSqueezing) {
    const RateResult best = max_over_ry(ChannelParams::make(2, kNoise, 0.0), kNbar);
    EXPECT_LT(best.input.r, 1e-3);
    EXPECT_NEAR(best.rate, kMemorylessRate, 1e-9);
}

TEST(MaxOverRY, MemoryRewardsEntangledInputs) {
    const ChannelParams c = ChannelParams::make(2, kNoise, 0.2);
    const RateResult best = max_over_ry(c, kNbar);
    EXPECT_GT(best.input.r, 1e-3);
    EXPECT_GT(best.rate, kMemorylessRate + 1e-4);

    // Optimality sanity and feasibility of the reported point.
    EXPECT_GE(best.rate, rate_at(c, best.input.r, 0.0));
    EXPECT_GE(best.rate, rate_at(c, 0.0, best.input.y));
    EXPECT_GE(best.rate, rate_at(c, 0.0, 0.0));
    EXPECT_NO_THROW((void)averaged_output_covariance(c, best.input));
    EXPECT_GE(modulation_slack(2, best.input), -1e-12);
}

TEST(MaxOverRY, StableUnderGridDoubling) {
    const ChannelParams c = ChannelParams::make(3, kNoise, 0.1);
    const RateResult coarse = max_over_ry(c, kNbar);
    const RateResult fine = max_over_ry(c, kNbar, SearchSettings{.y_points = 257, .r_points = 129});
    EXPECT_NEAR(coarse.rate, fine.rate, 1e-6);
}

TEST(Sweeps, RCurvesShapes) {
    const std::vector<ChannelParams> channels{ChannelParams::make(2, kNoise, 0.0), ChannelParams::make(2, kNoise, 0.2)};
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) {
        grid.push_back(0.03 * i);
    }
    const SweepResult sweep = sweep_r(channels, kNbar, grid, SearchSettings{.y_points = 65});
    ASSERT_EQ(sweep.rows.size(), 2 * grid.size());

    // s = 0 curve never increases.
    for (std::size_t i = 1; i < grid.size(); ++i) {
        EXPECT_LE(sweep.rows[i].rate, sweep.rows[i - 1].rate + 1e-9);
    }
    // s = 0.2 curve rises first, then falls: interior maximum.
    const auto first = sweep.rows.begin() + static_cast<std::ptrdiff_t>(grid.size());
    const auto peak = std::max_element(first, sweep.rows.end(),
                                       [](const SweepRow &a, const SweepRow &b) { return a.rate < b.rate; });
    EXPECT_NE(peak, first);
    EXPECT_NE(peak, sweep.rows.end() - 1);
    EXPECT_GT(peak->r, 0.0);
    for (auto it = first; it != sweep.rows.end(); ++it) {
        EXPECT_EQ(it->memory, 0.2);
    }
    // Both curves start at or above the memoryless value.
    EXPECT_GE(sweep.rows.front().rate, kMemorylessRate - 1e-9);
    EXPECT_GE(first->rate, kMemorylessRate - 1e-9);
}

TEST(Sweeps, DeterministicAcrossThreadCounts) {
    const std::vector<ChannelParams> channels{ChannelParams::make(3, kNoise, 0.1)};
    const std::vector<double> grid{0.0, 0.05, 0.1, 0.15};
    const SearchSettings one{.y_points = 33, .threads = 1};
    const SearchSettings many{.y_points = 33, .threads = 4};
    const SweepResult a = sweep_r(channels, kNbar, grid, one);
    const SweepResult b = sweep_r(channels, kNbar, grid, many);
    const SweepResult c = sweep_r(channels, kNbar, grid, many);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].rate, b.rows[i].rate);
        EXPECT_EQ(a.rows[i].y_opt, b.rows[i].y_opt);
        EXPECT_EQ(b.rows[i].rate, c.rows[i].rate);
    }
}

TEST(Sweeps, InfeasibleGridPointThrows) {
    const std::vector<ChannelParams> channels{ChannelParams::make(2, kNoise, 0.1)};
    const std::vector<double> grid{0.0, 3.0};
    EXPECT_THROW((void)sweep_r(channels, kNbar, grid), Error);
}

TEST(Sweeps, NSweepMemorylessIsFlat) {
    const std::vector<int> ns{2, 3, 4};
    const SweepResult sweep = sweep_n(ChannelParams::make(2, kNoise, 0.0), kNbar, ns);
    for (const SweepRow &row : sweep.rows) {
        EXPECT_NEAR(row.rate, kMemorylessRate, 1e-6);
        EXPECT_LT(row.r, 1e-3);
    }
}

TEST(Sweeps, MonotoneInMemory) {
    for (int n : {2, 3}) {
        const double r0 = max_over_ry(ChannelParams::make(n, kNoise, 0.0), kNbar).rate;
        const double r1 = max_over_ry(ChannelParams::make(n, kNoise, 0.1), kNbar).rate;
        const double r2 = max_over_ry(ChannelParams::make(n, kNoise, 0.2), kNbar).rate;
        EXPECT_GE(r1, r0);
        EXPECT_GE(r2, r1);
    }
}

TEST(GridHelpers, SymmetricGridHitsZero) {
    const std::vector<double> grid = detail::symmetric_grid(1.7, 129);
    EXPECT_EQ(grid[64], 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_EQ(grid[i], -grid[grid.size() - 1 - i]);
    }
    EXPECT_EQ(grid.front(), -1.7);
    EXPECT_EQ(detail::linspace(0.0, 1.0, 5).back(), 1.0);
}
