// Copyright (c) 2026 The promptpool Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "promptpool/parallel.hpp"
#include "promptpool/tensor.hpp"

// Prompt-relevance scoring: project visual patch tokens into the joint
// text-vision space, score each token against a text feature, and turn the
// logits into a single distribution over all TxWxH positions.

namespace promptpool {

struct AlignmentConfig {
    /// Multiplicative logit scale; the usual CLIP value is exp(4.6052) ~ 100.
    double temperature = 100.0;
    /// L2-normalize the text feature and every projected token before the dot
    /// product (cosine similarity). Off reproduces the raw dot product.
    bool normalize = true;

    enum class Aggregation { mean_scores };
    /// Multi-prompt combination rule: average the per-prompt score tensors,
    /// then renormalize to sum 1.
    Aggregation aggregation = Aggregation::mean_scores;
};

namespace detail {

inline void check_alignment_config(const AlignmentConfig& cfg) {
    if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature)) {
        throw std::invalid_argument("temperature must be a positive finite scalar, got " +
                                    std::to_string(cfg.temperature));
    }
}

}  // namespace detail

/// Maps every patch token of a TxWxHxD grid through a DxD' matrix,
/// giving the TxWxHxD' grid of joint-space tokens.
template <typename T>
Tensor<T> project_visual(const Tensor<T>& video, const Tensor<T>& projection,
                         std::size_t parallelism = 1) {
    detail::require_rank(video, 4, "visual feature tensor");
    detail::require_rank(projection, 2, "projection matrix");
    const std::size_t dim = video.extent(3);
    if (projection.extent(0) != dim) {
        throw std::invalid_argument("token width " + std::to_string(dim) +
                                    " does not match projection rows " +
                                    std::to_string(projection.extent(0)));
    }
    const std::size_t joint = projection.extent(1);
    const std::size_t tokens = video.extent(0) * video.extent(1) * video.extent(2);

    Tensor<T> out({video.extent(0), video.extent(1), video.extent(2), joint});
    const T* v = video.data();
    const T* m = projection.data();
    T* o = out.data();
    parallel_for(tokens, parallelism, [&](std::size_t n) {
        const T* tok = v + n * dim;
        T* dst = o + n * joint;
        for (std::size_t d = 0; d < dim; ++d) {
            const T x = tok[d];
            const T* row = m + d * joint;
            for (std::size_t c = 0; c < joint; ++c) dst[c] += x * row[c];
        }
    });
    return out;
}

/// Per-token alignment logit: temperature * <text, token>, with both sides
/// L2-normalized first when cfg.normalize is set. Output is TxWxH.
template <typename T>
Tensor<T> alignment_logits(const Tensor<T>& projected, const Tensor<T>& text,
                           const AlignmentConfig& cfg = {}, std::size_t parallelism = 1) {
    detail::require_rank(projected, 4, "projected token tensor");
    detail::require_rank(text, 1, "text feature");
    detail::check_alignment_config(cfg);
    const std::size_t joint = projected.extent(3);
    if (text.extent(0) != joint) {
        throw std::invalid_argument("projected token width " + std::to_string(joint) +
                                    " does not match text feature width " +
                                    std::to_string(text.extent(0)));
    }

    std::vector<T> c(text.data(), text.data() + joint);
    if (cfg.normalize) {
        T sq = 0;
        for (T x : c) sq += x * x;
        if (sq == T(0)) throw std::invalid_argument("zero-norm text feature cannot be normalized");
        const T inv = T(1) / std::sqrt(sq);
        for (T& x : c) x *= inv;
    }

    const std::size_t tokens = projected.extent(0) * projected.extent(1) * projected.extent(2);
    const T tau = static_cast<T>(cfg.temperature);
    Tensor<T> logits({projected.extent(0), projected.extent(1), projected.extent(2)});
    const T* p = projected.data();
    T* out = logits.data();
    const bool normalize = cfg.normalize;
    parallel_for(tokens, parallelism, [&, tau, normalize](std::size_t n) {
        const T* tok = p + n * joint;
        T dot = 0;
        for (std::size_t d = 0; d < joint; ++d) dot += c[d] * tok[d];
        if (normalize) {
            T sq = 0;
            for (std::size_t d = 0; d < joint; ++d) sq += tok[d] * tok[d];
            if (sq == T(0)) {
                throw std::invalid_argument("zero-norm projected token at flat index " +
                                            std::to_string(n) + " cannot be normalized");
            }
            dot /= std::sqrt(sq);
        }
        out[n] = tau * dot;
    });
    return logits;
}

/// Softmax over all positions of a rank-3 logit tensor (max-subtracted for
/// stability). The result is non-negative and sums to 1.
template <typename T>
Tensor<T> softmax_scores(const Tensor<T>& logits) {
    detail::require_rank(logits, 3, "logit tensor");
    const std::size_t n = logits.numel();
    if (n == 0) throw std::invalid_argument("cannot normalize an empty logit tensor");

    const T* l = logits.data();
    T max_logit = l[0];
    for (std::size_t i = 1; i < n; ++i) max_logit = std::max(max_logit, l[i]);

    Tensor<T> scores(logits.shape());
    T* s = scores.data();
    T denom = 0;
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = std::exp(l[i] - max_logit);
        denom += s[i];
    }
    for (std::size_t i = 0; i < n; ++i) s[i] /= denom;
    return scores;
}

/// One score tensor per prompt, averaged elementwise and renormalized to sum 1.
template <typename T>
Tensor<T> scores_multi_prompt(const Tensor<T>& projected, const std::vector<Tensor<T>>& prompts,
                              const AlignmentConfig& cfg = {}, std::size_t parallelism = 1) {
    if (prompts.empty()) throw std::invalid_argument("at least one prompt feature is required");
    detail::require_rank(projected, 4, "projected token tensor");

    Tensor<T> acc({projected.extent(0), projected.extent(1), projected.extent(2)});
    for (const Tensor<T>& prompt : prompts) {
        const Tensor<T> s = softmax_scores(alignment_logits(projected, prompt, cfg, parallelism));
        const T* src = s.data();
        T* dst = acc.data();
        for (std::size_t i = 0; i < acc.numel(); ++i) dst[i] += src[i];
    }
    const T inv = T(1) / static_cast<T>(prompts.size());
    T total = 0;
    for (std::size_t i = 0; i < acc.numel(); ++i) {
        acc[i] *= inv;
        total += acc[i];
    }
    for (std::size_t i = 0; i < acc.numel(); ++i) acc[i] /= total;
    return acc;
}

/// Shannon entropy (nats) of a score tensor; 0 log 0 is taken as 0.
template <typename T>
double score_entropy(const Tensor<T>& scores) {
    double h = 0;
    for (std::size_t i = 0; i < scores.numel(); ++i) {
        const double s = scores[i];
        if (s > 0) h -= s * std::log(s);
    }
    return h;
}

}  // namespace promptpool
