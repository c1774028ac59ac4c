// Copyright (c) 2026 The promptpool Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "promptpool/tensor.hpp"

// Certificate-length redundancy metric: given per-frame embeddings and one
// text embedding for the same clip, score each frame by cosine similarity,
// call a frame relevant when its similarity strictly exceeds a threshold,
// and report the relevant fraction ("certificate"). A low certificate means
// most frames are irrelevant to the prompt, i.e. the clip is highly
// redundant with respect to that question. Frame sampling (the upstream
// convention is 2 frames per second) and text embedding happen before this
// module; it only consumes the resulting vectors.

namespace promptpool {

struct RelevanceProfile {
    std::vector<double> similarities;  // per-frame cosine similarity, in [-1, 1]
    std::vector<bool> mask;            // mask[i] <=> similarities[i] > threshold
    double certificate = 0.0;          // relevant count / frame count
};

/// Cosine similarity of each frame row against the text embedding.
/// Accumulation runs in binary64 whatever the storage dtype, and each
/// similarity is dot / sqrt(|f|^2 * |c|^2), which makes a frame equal to the
/// text vector score exactly 1.0.
template <typename T>
std::vector<double> frame_similarities(const Tensor<T>& frames, const Tensor<T>& text) {
    detail::require_rank(frames, 2, "frame embedding matrix");
    detail::require_rank(text, 1, "text embedding");
    const std::size_t count = frames.extent(0);
    const std::size_t width = frames.extent(1);
    if (count == 0) throw std::invalid_argument("frame embedding matrix has no rows");
    if (width != text.extent(0)) {
        throw std::invalid_argument("frame width " + std::to_string(width) +
                                    " does not match text width " +
                                    std::to_string(text.extent(0)));
    }

    const T* c = text.data();
    double text_sq = 0.0;
    for (std::size_t d = 0; d < width; ++d) {
        text_sq += static_cast<double>(c[d]) * static_cast<double>(c[d]);
    }
    if (text_sq == 0.0) throw std::invalid_argument("text embedding has zero norm");

    std::vector<double> sims(count);
    for (std::size_t i = 0; i < count; ++i) {
        const T* f = frames.data() + i * width;
        double dot = 0.0;
        double frame_sq = 0.0;
        for (std::size_t d = 0; d < width; ++d) {
            const double x = static_cast<double>(f[d]);
            dot += x * static_cast<double>(c[d]);
            frame_sq += x * x;
        }
        if (frame_sq == 0.0) {
            throw std::invalid_argument("frame " + std::to_string(i) + " has zero norm");
        }
        sims[i] = dot / std::sqrt(frame_sq * text_sq);
    }
    return sims;
}

/// Thresholds similarities into a relevance mask ("exceeds" is a strict
/// comparison, so a similarity equal to the threshold is not relevant) and
/// reports the relevant fraction.
inline RelevanceProfile certificate(std::vector<double> similarities, double threshold = 0.5) {
    if (similarities.empty()) throw std::invalid_argument("similarity vector is empty");
    if (!std::isfinite(threshold)) throw std::invalid_argument("threshold must be finite");

    RelevanceProfile profile;
    profile.mask.reserve(similarities.size());
    std::size_t relevant = 0;
    for (const double s : similarities) {
        const bool keep = s > threshold;
        profile.mask.push_back(keep);
        relevant += keep ? 1 : 0;
    }
    profile.certificate =
        static_cast<double>(relevant) / static_cast<double>(similarities.size());
    profile.similarities = std::move(similarities);
    return profile;
}

}  // namespace promptpool
