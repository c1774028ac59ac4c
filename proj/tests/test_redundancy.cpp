// Copyright (c) 2026 The promptpool Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "promptpool/redundancy.hpp"
#include "test_util.hpp"

namespace pp = promptpool;

namespace {

// Independent per-row binary64 cosine oracle.
template <typename T>
double cosine_oracle(const pp::Tensor<T>& frames, std::size_t row, const pp::Tensor<T>& text) {
    const std::size_t width = frames.extent(1);
    double dot = 0.0, ff = 0.0, cc = 0.0;
    for (std::size_t d = 0; d < width; ++d) {
        const double f = frames[row * width + d];
        const double c = text[d];
        dot += f * c;
        ff += f * f;
        cc += c * c;
    }
    return dot / (std::sqrt(ff) * std::sqrt(cc));
}

}  // namespace

TEST(FrameSimilarities, FrameEqualToTextScoresExactlyOne) {
    const std::vector<double> v = {0.3, -1.7, 2.9, 0.001};
    const pp::Tensor<double> frames({1, 4}, v);
    const pp::Tensor<double> text({4}, v);
    const auto sims = pp::frame_similarities(frames, text);
    ASSERT_EQ(sims.size(), 1u);
    EXPECT_EQ(sims[0], 1.0);
}

TEST(FrameSimilarities, OrthogonalFrameScoresExactlyZero) {
    const pp::Tensor<double> frames({1, 2}, {3.0, 0.0});
    const pp::Tensor<double> text({2}, {0.0, 5.0});
    EXPECT_EQ(pp::frame_similarities(frames, text)[0], 0.0);
}

TEST(FrameSimilarities, OppositeFrameScoresMinusOne) {
    const pp::Tensor<double> frames({1, 3}, {-2.0, -4.0, -6.0});
    const pp::Tensor<double> text({3}, {1.0, 2.0, 3.0});
    EXPECT_NEAR(pp::frame_similarities(frames, text)[0], -1.0, 1e-15);
}

TEST(FrameSimilarities, MatchesBinary64OracleForBothDtypes) {
    testutil::Rng rng(501);
    {
        const auto frames = testutil::random_tensor<double>({5, 8}, rng);
        const auto text = testutil::random_tensor<double>({8}, rng);
        const auto sims = pp::frame_similarities(frames, text);
        for (std::size_t i = 0; i < 5; ++i) {
            EXPECT_NEAR(sims[i], cosine_oracle(frames, i, text), 1e-12);
        }
    }
    {
        const auto frames = testutil::random_tensor<float>({5, 8}, rng);
        const auto text = testutil::random_tensor<float>({8}, rng);
        const auto sims = pp::frame_similarities(frames, text);
        for (std::size_t i = 0; i < 5; ++i) {
            // Accumulation is binary64 even for f32 storage, so the oracle
            // agrees to full precision, not just float precision.
            EXPECT_NEAR(sims[i], cosine_oracle(frames, i, text), 1e-12);
        }
    }
}

TEST(FrameSimilarities, RejectsBadInputs) {
    testutil::Rng rng(502);
    const auto frames = testutil::random_tensor<double>({3, 4}, rng);
    const auto text = testutil::random_tensor<double>({4}, rng);

    EXPECT_THROW(pp::frame_similarities(testutil::random_tensor<double>({3}, rng), text),
                 std::invalid_argument);
    EXPECT_THROW(pp::frame_similarities(frames, testutil::random_tensor<double>({5}, rng)),
                 std::invalid_argument);
    EXPECT_THROW(pp::frame_similarities(pp::Tensor<double>({0, 4}), text), std::invalid_argument);
    EXPECT_THROW(pp::frame_similarities(frames, pp::Tensor<double>({4})), std::invalid_argument);

    pp::Tensor<double> with_zero_row = frames;
    for (std::size_t d = 0; d < 4; ++d) with_zero_row[1 * 4 + d] = 0.0;
    try {
        pp::frame_similarities(with_zero_row, text);
        FAIL() << "expected zero-norm error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos) << e.what();
    }
}

TEST(Certificate, HandComputedCases) {
    {
        const auto p = pp::certificate({0.9, 0.9, 0.9, 0.9});
        EXPECT_EQ(p.certificate, 1.0);
        EXPECT_EQ(p.mask, std::vector<bool>({true, true, true, true}));
    }
    {
        const auto p = pp::certificate({0.6, 0.4, 0.6, 0.4});
        EXPECT_EQ(p.certificate, 0.5);
        EXPECT_EQ(p.mask, std::vector<bool>({true, false, true, false}));
    }
    {
        const auto p = pp::certificate({0.1, 0.2, 0.3, 0.4});
        EXPECT_EQ(p.certificate, 0.0);
    }
}

TEST(Certificate, ThresholdComparisonIsStrict) {
    const auto p = pp::certificate({0.5, 0.5 + 1e-12, 0.4999});
    EXPECT_EQ(p.mask, std::vector<bool>({false, true, false}));
    EXPECT_EQ(p.certificate, 1.0 / 3.0);
}

TEST(Certificate, KeepsSimilaritiesInProfile) {
    const std::vector<double> sims = {0.1, 0.9, 0.5};
    EXPECT_EQ(pp::certificate(sims).similarities, sims);
}

TEST(Certificate, MonotonicallyNonIncreasingInThreshold) {
    testutil::Rng rng(503);
    std::vector<double> sims(64);
    for (double& s : sims) s = rng.uniform(-1.0, 1.0);
    double prev = 2.0;
    for (double threshold = -1.1; threshold <= 1.1; threshold += 0.05) {
        const double cert = pp::certificate(sims, threshold).certificate;
        EXPECT_LE(cert, prev) << "threshold " << threshold;
        prev = cert;
    }
    EXPECT_EQ(pp::certificate(sims, -2.0).certificate, 1.0);
    EXPECT_EQ(pp::certificate(sims, 2.0).certificate, 0.0);
}

TEST(Certificate, InvariantToJointScalingOfTheEmbeddings) {
    testutil::Rng rng(504);
    const auto frames = testutil::random_tensor<double>({6, 8}, rng);
    const auto text = testutil::random_tensor<double>({8}, rng);
    const auto base = pp::certificate(pp::frame_similarities(frames, text));

    for (const double factor : {4.0, 3.7}) {
        pp::Tensor<double> scaled_frames = frames;
        for (std::size_t i = 0; i < scaled_frames.numel(); ++i) scaled_frames[i] *= factor;
        pp::Tensor<double> scaled_text = text;
        for (std::size_t i = 0; i < scaled_text.numel(); ++i) scaled_text[i] *= factor;
        const auto scaled = pp::certificate(pp::frame_similarities(scaled_frames, scaled_text));
        EXPECT_EQ(scaled.mask, base.mask) << "factor " << factor;
        EXPECT_EQ(scaled.certificate, base.certificate) << "factor " << factor;
        for (std::size_t i = 0; i < base.similarities.size(); ++i) {
            if (factor == 4.0) {
                // Power-of-two scaling is exact in binary64.
                EXPECT_EQ(scaled.similarities[i], base.similarities[i]);
            } else {
                EXPECT_NEAR(scaled.similarities[i], base.similarities[i], 1e-12);
            }
        }
    }
}

TEST(Certificate, InvariantToFramePermutation) {
    testutil::Rng rng(505);
    std::vector<double> sims(16);
    for (double& s : sims) s = rng.uniform(-1.0, 1.0);
    const auto base = pp::certificate(sims);

    std::vector<double> reversed(sims.rbegin(), sims.rend());
    const auto flipped = pp::certificate(reversed);
    EXPECT_EQ(flipped.certificate, base.certificate);
    const std::vector<bool> expect_mask(base.mask.rbegin(), base.mask.rend());
    EXPECT_EQ(flipped.mask, expect_mask);
}

TEST(Certificate, RejectsBadArguments) {
    EXPECT_THROW(pp::certificate({}), std::invalid_argument);
    EXPECT_THROW(pp::certificate({0.5}, std::numeric_limits<double>::quiet_NaN()),
                 std::invalid_argument);
    EXPECT_THROW(pp::certificate({0.5}, std::numeric_limits<double>::infinity()),
                 std::invalid_argument);
}
