// Copyright (c) 2026 The promptpool Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "promptpool/context_extension.hpp"
#include "test_util.hpp"

namespace pp = promptpool;

namespace {

pp::RateSchedule default_schedule(std::size_t target) {
    pp::RateSchedule sched;  // boundary 20, r_head 1, r_tail 0.25
    sched.target_length = target;
    return sched;
}

template <typename T>
bool rows_equal(const pp::Tensor<T>& a, std::size_t row_a, const pp::Tensor<T>& b,
                std::size_t row_b) {
    const std::size_t width = a.extent(1);
    if (width != b.extent(1)) return false;
    return std::memcmp(a.data() + row_a * width, b.data() + row_b * width,
                       width * sizeof(T)) == 0;
}

}  // namespace

TEST(Continuity, NameRoundTrip) {
    EXPECT_STREQ(pp::to_string(pp::Continuity::continuous_piecewise), "continuous-piecewise");
    EXPECT_STREQ(pp::to_string(pp::Continuity::literal), "literal");
    EXPECT_EQ(pp::continuity_from_string("continuous-piecewise"),
              pp::Continuity::continuous_piecewise);
    EXPECT_EQ(pp::continuity_from_string("literal"), pp::Continuity::literal);
    EXPECT_THROW(pp::continuity_from_string("smooth"), std::invalid_argument);
}

TEST(MapIndex, HeadPositionsAreIdentityUnderBothForms) {
    for (const pp::Continuity c : {pp::Continuity::continuous_piecewise, pp::Continuity::literal}) {
        pp::RateSchedule sched = default_schedule(244);
        sched.continuity = c;
        EXPECT_EQ(pp::map_index(0, sched), 0.0);
        EXPECT_EQ(pp::map_index(5, sched), 5.0);
        EXPECT_EQ(pp::map_index(19, sched), 19.0);
    }
}

TEST(MapIndex, FormsDivergeAtTheBoundary) {
    pp::RateSchedule sched = default_schedule(244);
    EXPECT_EQ(pp::map_index(20, sched), 20.0);
    EXPECT_EQ(pp::map_index(24, sched), 21.0);

    sched.continuity = pp::Continuity::literal;
    // i * r(i) read literally jumps backwards at the rate switch.
    EXPECT_EQ(pp::map_index(19, sched), 19.0);
    EXPECT_EQ(pp::map_index(20, sched), 5.0);
}

TEST(MapIndex, UnitRatesGiveIdentityMapping) {
    pp::RateSchedule sched = default_schedule(100);
    sched.r_tail = 1.0;
    for (std::size_t i = 0; i < 100; ++i) {
        EXPECT_EQ(pp::map_index(i, sched), static_cast<double>(i));
    }
}

TEST(MapIndex, ContinuousFormIsStrictlyIncreasing) {
    const pp::RateSchedule sched = default_schedule(244);
    double prev = pp::map_index(0, sched);
    for (std::size_t i = 1; i < 244; ++i) {
        const double j = pp::map_index(i, sched);
        EXPECT_GT(j, prev) << "at position " << i;
        prev = j;
    }
}

TEST(MapIndex, RejectsBadArguments) {
    EXPECT_THROW(pp::map_index(0, default_schedule(0)), std::invalid_argument);
    EXPECT_THROW(pp::map_index(244, default_schedule(244)), std::invalid_argument);

    pp::RateSchedule sched = default_schedule(10);
    sched.boundary = 20;  // target below boundary
    EXPECT_THROW(pp::map_index(0, sched), std::invalid_argument);

    for (const double bad : {0.0, -1.0, std::numeric_limits<double>::quiet_NaN(),
                             std::numeric_limits<double>::infinity()}) {
        pp::RateSchedule rates = default_schedule(244);
        rates.r_tail = bad;
        EXPECT_THROW(pp::map_index(0, rates), std::invalid_argument);
    }
}

TEST(MaxTargetLength, DefaultScheduleOn77RowsGives244) {
    EXPECT_EQ(pp::max_target_length(77, default_schedule(1)), 244u);
}

TEST(MaxTargetLength, UnitRatesCapAtSourceRows) {
    pp::RateSchedule sched = default_schedule(1);
    sched.r_tail = 1.0;
    // j(i) = i reaches the final row at i = 76, so 76 positions keep both
    // bracket rows strictly inside the table...
    EXPECT_EQ(pp::max_target_length(77, sched), 76u);
    // ...while the interpolator itself still accepts one more position, whose
    // coordinate lands exactly on the final row and copies it verbatim.
    testutil::Rng rng(401);
    const auto table = testutil::random_tensor<double>({77, 4}, rng);
    sched.target_length = 77;
    EXPECT_TRUE(testutil::bit_equal(pp::interpolate_pe(table, sched), table));
}

TEST(MaxTargetLength, RejectsDegenerateInput) {
    EXPECT_THROW(pp::max_target_length(1, default_schedule(1)), std::invalid_argument);
    pp::RateSchedule crawl = default_schedule(1);
    crawl.r_head = 1e-9;
    crawl.r_tail = 1e-9;
    EXPECT_THROW(pp::max_target_length(77, crawl), std::invalid_argument);
}

TEST(InterpolatePe, PrefixRowsAreVerbatimCopies) {
    testutil::Rng rng(402);
    const auto table = testutil::random_tensor<double>({77, 8}, rng);
    const auto out = pp::interpolate_pe(table, default_schedule(244));
    ASSERT_EQ(out.extent(0), 244u);
    ASSERT_EQ(out.extent(1), 8u);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_TRUE(rows_equal(out, i, table, i)) << "row " << i;
    }
}

TEST(InterpolatePe, IntegerCoordinatesCopyBitExactly) {
    testutil::Rng rng(403);
    const auto table = testutil::random_tensor<float>({77, 6}, rng);
    const auto out = pp::interpolate_pe(table, default_schedule(244));
    // Under the default schedule j is an integer exactly when (i - 20) is a
    // multiple of 4: j = 20 + (i - 20)/4.
    for (std::size_t i = 20; i < 244; i += 4) {
        const std::size_t j = 20 + (i - 20) / 4;
        EXPECT_TRUE(rows_equal(out, i, table, j)) << "row " << i;
    }
}

TEST(InterpolatePe, MidpointBlendIsExact) {
    // boundary 0 makes j = i * r_tail; i = 10, r_tail = 0.25 lands at 2.5,
    // halfway between rows 2 and 3.
    pp::Tensor<double> table({4, 2});
    table[2 * 2 + 0] = 0.0;
    table[2 * 2 + 1] = 0.0;
    table[3 * 2 + 0] = 1.0;
    table[3 * 2 + 1] = 2.0;
    pp::RateSchedule sched;
    sched.boundary = 0;
    sched.r_tail = 0.25;
    sched.target_length = 11;
    const auto out = pp::interpolate_pe(table, sched);
    EXPECT_EQ(out[10 * 2 + 0], 0.5);
    EXPECT_EQ(out[10 * 2 + 1], 1.0);
}

TEST(InterpolatePe, RowsStayWithinTheirBrackets) {
    testutil::Rng rng(404);
    const auto table = testutil::random_tensor<double>({77, 5}, rng);
    const auto out = pp::interpolate_pe(table, default_schedule(244));
    const pp::RateSchedule sched = default_schedule(244);
    for (std::size_t i = 0; i < 244; ++i) {
        const double j = pp::map_index(i, sched);
        const auto lo = static_cast<std::size_t>(j);
        const std::size_t hi = (j == static_cast<double>(lo)) ? lo : lo + 1;
        for (std::size_t d = 0; d < 5; ++d) {
            const double a = table[lo * 5 + d];
            const double b = table[hi * 5 + d];
            const double v = out[i * 5 + d];
            EXPECT_GE(v, std::min(a, b)) << "row " << i << " dim " << d;
            EXPECT_LE(v, std::max(a, b)) << "row " << i << " dim " << d;
        }
    }
}

TEST(InterpolatePe, AcceptsExactlyOnePositionPastTheConservativeBound) {
    testutil::Rng rng(405);
    const auto table = testutil::random_tensor<double>({77, 3}, rng);
    // Position 244 maps to exactly 76.0 (the final row): accepted as a copy.
    const auto out = pp::interpolate_pe(table, default_schedule(245));
    EXPECT_TRUE(rows_equal(out, 244, table, 76));
    // Position 245 maps to 76.25, past the final row.
    try {
        pp::interpolate_pe(table, default_schedule(246));
        FAIL() << "expected out-of-range error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("target position 245"), std::string::npos)
            << e.what();
    }
}

TEST(InterpolatePe, RejectsTinyTables) {
    pp::Tensor<double> one_row({1, 4});
    EXPECT_THROW(pp::interpolate_pe(one_row, default_schedule(4)), std::invalid_argument);
    pp::Tensor<double> rank1({4});
    EXPECT_THROW(pp::interpolate_pe(rank1, default_schedule(4)), std::invalid_argument);
}

TEST(UniformInterpolatePe, SameLengthIsIdentity) {
    testutil::Rng rng(406);
    const auto table = testutil::random_tensor<float>({77, 8}, rng);
    EXPECT_TRUE(testutil::bit_equal(pp::uniform_interpolate_pe(table, 77), table));
}

TEST(UniformInterpolatePe, TwoToThreeInsertsTheMidpoint) {
    pp::Tensor<double> table({2, 2});
    table[0] = 1.0;
    table[1] = -3.0;
    table[2] = 5.0;
    table[3] = 7.0;
    const auto out = pp::uniform_interpolate_pe(table, 3);
    EXPECT_TRUE(rows_equal(out, 0, table, 0));
    EXPECT_TRUE(rows_equal(out, 2, table, 1));
    EXPECT_EQ(out[1 * 2 + 0], 3.0);
    EXPECT_EQ(out[1 * 2 + 1], 2.0);
}

TEST(UniformInterpolatePe, EndpointsAlwaysCopyVerbatim) {
    testutil::Rng rng(407);
    const auto table = testutil::random_tensor<double>({77, 4}, rng);
    const auto out = pp::uniform_interpolate_pe(table, 154);
    EXPECT_TRUE(rows_equal(out, 0, table, 0));
    EXPECT_TRUE(rows_equal(out, 153, table, 76));
}

TEST(UniformInterpolatePe, RejectsTargetBelowTwo) {
    testutil::Rng rng(408);
    const auto table = testutil::random_tensor<double>({4, 2}, rng);
    EXPECT_THROW(pp::uniform_interpolate_pe(table, 1), std::invalid_argument);
    EXPECT_THROW(pp::uniform_interpolate_pe(table, 0), std::invalid_argument);
}

TEST(RandomTailExtend, KeepsSourceRowsAndIsSeedDeterministic) {
    testutil::Rng rng(409);
    const auto table = testutil::random_tensor<double>({77, 8}, rng);
    const auto a = pp::random_tail_extend(table, 120, 42);
    const auto b = pp::random_tail_extend(table, 120, 42);
    const auto c = pp::random_tail_extend(table, 120, 43);
    EXPECT_TRUE(testutil::bit_equal(a, b));
    EXPECT_FALSE(testutil::bit_equal(a, c));
    for (std::size_t i = 0; i < 77; ++i) {
        EXPECT_TRUE(rows_equal(a, i, table, i)) << "row " << i;
        EXPECT_TRUE(rows_equal(c, i, table, i)) << "row " << i;
    }
}

TEST(RandomTailExtend, SameLengthAndZeroScaleEdgeCases) {
    testutil::Rng rng(410);
    const auto table = testutil::random_tensor<float>({10, 4}, rng);
    EXPECT_TRUE(testutil::bit_equal(pp::random_tail_extend(table, 10, 1), table));
    const auto zero_tail = pp::random_tail_extend(table, 15, 1, 0.0);
    for (std::size_t i = table.numel(); i < zero_tail.numel(); ++i) {
        EXPECT_EQ(zero_tail[i], 0.0f);
    }
}

TEST(RandomTailExtend, TailStatisticsMatchTheRequestedScale) {
    testutil::Rng rng(411);
    const auto table = testutil::random_tensor<double>({77, 16}, rng);
    const double scale = 0.02;
    const auto out = pp::random_tail_extend(table, 500, 7, scale);
    const std::size_t begin = table.numel();
    const std::size_t n = out.numel() - begin;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += out[begin + i];
        sum_sq += out[begin + i] * out[begin + i];
    }
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(sum_sq / static_cast<double>(n) - mean * mean);
    EXPECT_NEAR(mean, 0.0, 4.0 * scale / std::sqrt(static_cast<double>(n)));
    EXPECT_NEAR(sd, scale, 0.1 * scale);
}

TEST(RandomTailExtend, RejectsBadArguments) {
    testutil::Rng rng(412);
    const auto table = testutil::random_tensor<double>({10, 4}, rng);
    EXPECT_THROW(pp::random_tail_extend(table, 9, 1), std::invalid_argument);
    EXPECT_THROW(pp::random_tail_extend(table, 20, 1, -0.5), std::invalid_argument);
    EXPECT_THROW(pp::random_tail_extend(table, 20, 1, std::numeric_limits<double>::quiet_NaN()),
                 std::invalid_argument);
}

TEST(GaussianSource, StreamMatchesTheSpelledOutTransform) {
    // Recompute the first few draws straight from the raw engine to pin the
    // exact sampling recipe (shift by 11, reject u1 == 0, cos first then the
    // cached sin partner).
    pp::detail::GaussianSource source(99);
    std::mt19937_64 raw(99);
    const auto unit = [&raw] { return static_cast<double>(raw() >> 11) * 0x1.0p-53; };
    for (int pair = 0; pair < 4; ++pair) {
        double u1 = unit();
        while (u1 == 0.0) u1 = unit();
        const double u2 = unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        EXPECT_EQ(source.next(), radius * std::cos(angle));
        EXPECT_EQ(source.next(), radius * std::sin(angle));
    }
}
