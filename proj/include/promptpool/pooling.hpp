// Copyright (c) 2026 The promptpool Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "promptpool/parallel.hpp"
#include "promptpool/tensor.hpp"

// Convolution-style 3-D pooling of patch-token grids where the kernel weights
// come from a prompt-relevance score tensor instead of learned parameters.
// Window outputs are independent, so all kernels parallelize across output
// cells; intra-window reductions always run in ascending flat-index order,
// which keeps results bit-identical at any parallelism degree.

namespace promptpool {

enum class PoolMode {
    /// Score-weighted sum over the window, using the globally-normalized
    /// scores as-is.
    weighted_sum_literal,
    /// Score-weighted sum divided by the window's score mass; each output is
    /// a convex combination of its window's tokens.
    weighted_average,
    /// The window token with the highest score (ties: lowest flat index).
    max_by_score,
    /// Plain unweighted mean; needs no score tensor.
    average_baseline,
};

inline const char* to_string(PoolMode m) {
    switch (m) {
        case PoolMode::weighted_sum_literal: return "weighted-sum-literal";
        case PoolMode::weighted_average: return "weighted-average";
        case PoolMode::max_by_score: return "max";
        case PoolMode::average_baseline: return "average-baseline";
    }
    return "?";
}

inline PoolMode pool_mode_from_string(std::string_view name) {
    if (name == "weighted-sum-literal") return PoolMode::weighted_sum_literal;
    if (name == "weighted-average") return PoolMode::weighted_average;
    if (name == "max") return PoolMode::max_by_score;
    if (name == "average-baseline") return PoolMode::average_baseline;
    throw std::invalid_argument("unknown pooling mode '" + std::string(name) +
                                "' (expected weighted-sum-literal, weighted-average, max, or "
                                "average-baseline)");
}

/// Kernel and stride extents are ordered (t, w, h).
struct PoolingSpec {
    std::array<std::size_t, 3> kernel{1, 1, 1};
    std::array<std::size_t, 3> stride{1, 1, 1};
    PoolMode mode = PoolMode::weighted_average;
};

/// Output grid extents: X' = floor((X - k_x) / d_x) + 1 per axis. Trailing
/// positions not covered by a full window are dropped.
inline Shape3 output_shape(const Shape3& in, const PoolingSpec& spec) {
    const std::array<std::size_t, 3> extents{in.t, in.w, in.h};
    std::array<std::size_t, 3> out{};
    for (std::size_t a = 0; a < 3; ++a) {
        if (spec.kernel[a] == 0 || spec.stride[a] == 0) {
            throw std::invalid_argument("kernel and stride extents must be positive");
        }
        if (spec.kernel[a] > extents[a]) {
            throw std::invalid_argument("kernel extent " + std::to_string(spec.kernel[a]) +
                                        " exceeds input extent " + std::to_string(extents[a]) +
                                        " on axis " + std::to_string(a));
        }
        out[a] = (extents[a] - spec.kernel[a]) / spec.stride[a] + 1;
    }
    return Shape3{out[0], out[1], out[2]};
}

/// Input token count divided by output token count.
inline double compression_ratio(const Shape3& in, const Shape3& out) {
    if (out.count() == 0) throw std::invalid_argument("output token count must be positive");
    return static_cast<double>(in.count()) / static_cast<double>(out.count());
}

/// Unweighted mean over each window.
template <typename T>
Tensor<T> average_pool(const Tensor<T>& video, const PoolingSpec& spec,
                       std::size_t parallelism = 1) {
    detail::require_rank(video, 4, "video feature tensor");
    const Shape3 in = grid_shape(video);
    const Shape3 out_grid = output_shape(in, spec);
    const std::size_t depth = video.extent(3);

    Tensor<T> out({out_grid.t, out_grid.w, out_grid.h, depth});
    const T* v = video.data();
    T* o = out.data();
    const T inv_count = T(1) / static_cast<T>(spec.kernel[0] * spec.kernel[1] * spec.kernel[2]);
    parallel_for(out_grid.count(), parallelism, [&](std::size_t cell) {
        const std::size_t ot = cell / (out_grid.w * out_grid.h);
        const std::size_t ow = cell % (out_grid.w * out_grid.h) / out_grid.h;
        const std::size_t oh = cell % out_grid.h;
        T* dst = o + cell * depth;
        for (std::size_t i = 0; i < spec.kernel[0]; ++i) {
            for (std::size_t j = 0; j < spec.kernel[1]; ++j) {
                for (std::size_t k = 0; k < spec.kernel[2]; ++k) {
                    const std::size_t pos = ((ot * spec.stride[0] + i) * in.w +
                                             (ow * spec.stride[1] + j)) *
                                                in.h +
                                            (oh * spec.stride[2] + k);
                    const T* src = v + pos * depth;
                    for (std::size_t d = 0; d < depth; ++d) dst[d] += src[d];
                }
            }
        }
        for (std::size_t d = 0; d < depth; ++d) dst[d] *= inv_count;
    });
    return out;
}

/// Score-guided pooling. The video is TxWxHxD, the scores TxWxH on the same
/// grid; the output grid follows output_shape. average_baseline ignores the
/// score tensor.
template <typename T>
Tensor<T> pool_forward(const Tensor<T>& video, const Tensor<T>& scores, const PoolingSpec& spec,
                       std::size_t parallelism = 1) {
    if (spec.mode == PoolMode::average_baseline) return average_pool(video, spec, parallelism);

    detail::require_rank(video, 4, "video feature tensor");
    detail::require_rank(scores, 3, "score tensor");
    const Shape3 in = grid_shape(video);
    if (grid_shape(scores) != in) {
        throw std::invalid_argument("score tensor grid " + to_string(grid_shape(scores)) +
                                    " does not match video grid " + to_string(in));
    }
    const Shape3 out_grid = output_shape(in, spec);
    const std::size_t depth = video.extent(3);

    Tensor<T> out({out_grid.t, out_grid.w, out_grid.h, depth});
    const T* v = video.data();
    const T* s = scores.data();
    T* o = out.data();
    parallel_for(out_grid.count(), parallelism, [&](std::size_t cell) {
        const std::size_t ot = cell / (out_grid.w * out_grid.h);
        const std::size_t ow = cell % (out_grid.w * out_grid.h) / out_grid.h;
        const std::size_t oh = cell % out_grid.h;
        T* dst = o + cell * depth;

        if (spec.mode == PoolMode::max_by_score) {
            std::size_t best = 0;
            T best_score = 0;
            bool first = true;
            for (std::size_t i = 0; i < spec.kernel[0]; ++i) {
                for (std::size_t j = 0; j < spec.kernel[1]; ++j) {
                    for (std::size_t k = 0; k < spec.kernel[2]; ++k) {
                        const std::size_t pos = ((ot * spec.stride[0] + i) * in.w +
                                                 (ow * spec.stride[1] + j)) *
                                                    in.h +
                                                (oh * spec.stride[2] + k);
                        if (first || s[pos] > best_score) {
                            best = pos;
                            best_score = s[pos];
                            first = false;
                        }
                    }
                }
            }
            const T* src = v + best * depth;
            for (std::size_t d = 0; d < depth; ++d) dst[d] = src[d];
            return;
        }

        T mass = 0;
        for (std::size_t i = 0; i < spec.kernel[0]; ++i) {
            for (std::size_t j = 0; j < spec.kernel[1]; ++j) {
                for (std::size_t k = 0; k < spec.kernel[2]; ++k) {
                    const std::size_t pos = ((ot * spec.stride[0] + i) * in.w +
                                             (ow * spec.stride[1] + j)) *
                                                in.h +
                                            (oh * spec.stride[2] + k);
                    const T weight = s[pos];
                    mass += weight;
                    const T* src = v + pos * depth;
                    for (std::size_t d = 0; d < depth; ++d) dst[d] += weight * src[d];
                }
            }
        }
        if (spec.mode == PoolMode::weighted_average) {
            if (mass == T(0)) {
                throw std::invalid_argument("window at output cell (" + std::to_string(ot) + "," +
                                            std::to_string(ow) + "," + std::to_string(oh) +
                                            ") has zero score mass");
            }
            for (std::size_t d = 0; d < depth; ++d) dst[d] /= mass;
        }
    });
    return out;
}

template <typename T>
struct PoolGradients {
    Tensor<T> video;   // TxWxHxD
    Tensor<T> scores;  // TxWxH
};

/// Exact adjoint of pool_forward with respect to the video tokens and the
/// scores, for the two weighted modes. Windows may overlap (stride < kernel),
/// so each input position gathers from every window containing it; positions
/// covered by no window keep zero gradient. For weighted-average the quotient
/// rule through the per-window mass gives
///   d out(o,d) / d v(p,d) = s(p) / mass(o)
///   d out(o,d) / d s(p)   = (v(p,d) - out(o,d)) / mass(o).
template <typename T>
PoolGradients<T> pool_backward(const Tensor<T>& video, const Tensor<T>& scores,
                               const PoolingSpec& spec, const Tensor<T>& grad_out,
                               std::size_t parallelism = 1) {
    if (spec.mode != PoolMode::weighted_sum_literal && spec.mode != PoolMode::weighted_average) {
        throw std::invalid_argument(std::string("no gradient for mode '") + to_string(spec.mode) +
                                    "' (only the weighted modes are differentiable)");
    }
    detail::require_rank(video, 4, "video feature tensor");
    detail::require_rank(scores, 3, "score tensor");
    detail::require_rank(grad_out, 4, "output gradient");
    const Shape3 in = grid_shape(video);
    if (grid_shape(scores) != in) {
        throw std::invalid_argument("score tensor grid " + to_string(grid_shape(scores)) +
                                    " does not match video grid " + to_string(in));
    }
    const Shape3 out_grid = output_shape(in, spec);
    const std::size_t depth = video.extent(3);
    if (grid_shape(grad_out) != out_grid || grad_out.extent(3) != depth) {
        throw std::invalid_argument("output gradient shape " +
                                    detail::shape_string(grad_out.shape()) +
                                    " does not match the pooled shape");
    }

    const bool averaged = spec.mode == PoolMode::weighted_average;
    const T* v = video.data();
    const T* s = scores.data();
    const T* go = grad_out.data();

    // Per-window score mass and the forward output, needed by the
    // weighted-average adjoint.
    std::vector<T> mass;
    Tensor<T> forward;
    if (averaged) {
        mass.assign(out_grid.count(), T(0));
        parallel_for(out_grid.count(), parallelism, [&](std::size_t cell) {
            const std::size_t ot = cell / (out_grid.w * out_grid.h);
            const std::size_t ow = cell % (out_grid.w * out_grid.h) / out_grid.h;
            const std::size_t oh = cell % out_grid.h;
            T m = 0;
            for (std::size_t i = 0; i < spec.kernel[0]; ++i) {
                for (std::size_t j = 0; j < spec.kernel[1]; ++j) {
                    for (std::size_t k = 0; k < spec.kernel[2]; ++k) {
                        m += s[((ot * spec.stride[0] + i) * in.w + (ow * spec.stride[1] + j)) *
                                   in.h +
                               (oh * spec.stride[2] + k)];
                    }
                }
            }
            mass[cell] = m;
        });
        forward = pool_forward(video, scores, spec, parallelism);
    }
    const T* fwd = averaged ? forward.data() : nullptr;

    PoolGradients<T> grads{Tensor<T>({in.t, in.w, in.h, depth}), Tensor<T>({in.t, in.w, in.h})};
    T* gv = grads.video.data();
    T* gs = grads.scores.data();

    // Inclusive range of output windows covering input coordinate p on one axis.
    const auto window_range = [&](std::size_t p, std::size_t axis, std::size_t out_extent,
                                  std::size_t& lo, std::size_t& hi) {
        const std::size_t k = spec.kernel[axis];
        const std::size_t d = spec.stride[axis];
        lo = p + 1 > k ? (p + 1 - k + d - 1) / d : 0;
        hi = std::min(p / d, out_extent - 1);
    };

    parallel_for(in.count(), parallelism, [&](std::size_t pos) {
        const std::size_t pt = pos / (in.w * in.h);
        const std::size_t pw = pos % (in.w * in.h) / in.h;
        const std::size_t ph = pos % in.h;

        std::size_t t_lo, t_hi, w_lo, w_hi, h_lo, h_hi;
        window_range(pt, 0, out_grid.t, t_lo, t_hi);
        window_range(pw, 1, out_grid.w, w_lo, w_hi);
        window_range(ph, 2, out_grid.h, h_lo, h_hi);
        if (t_lo > t_hi || w_lo > w_hi || h_lo > h_hi) return;

        const T* vp = v + pos * depth;
        T* gvp = gv + pos * depth;
        const T sp = s[pos];
        T score_grad = 0;
        for (std::size_t ot = t_lo; ot <= t_hi; ++ot) {
            for (std::size_t ow = w_lo; ow <= w_hi; ++ow) {
                for (std::size_t oh = h_lo; oh <= h_hi; ++oh) {
                    const std::size_t cell = (ot * out_grid.w + ow) * out_grid.h + oh;
                    const T* gop = go + cell * depth;
                    if (averaged) {
                        const T m = mass[cell];
                        if (m == T(0)) {
                            throw std::invalid_argument("window at output cell (" +
                                                        std::to_string(ot) + "," +
                                                        std::to_string(ow) + "," +
                                                        std::to_string(oh) +
                                                        ") has zero score mass");
                        }
                        const T* fo = fwd + cell * depth;
                        const T weight = sp / m;
                        T acc = 0;
                        for (std::size_t d = 0; d < depth; ++d) {
                            gvp[d] += weight * gop[d];
                            acc += (vp[d] - fo[d]) * gop[d];
                        }
                        score_grad += acc / m;
                    } else {
                        T acc = 0;
                        for (std::size_t d = 0; d < depth; ++d) {
                            gvp[d] += sp * gop[d];
                            acc += vp[d] * gop[d];
                        }
                        score_grad += acc;
                    }
                }
            }
        }
        gs[pos] = score_grad;
    });
    return grads;
}

namespace detail {

// Stacks pooled grids into one rank-2 token sequence (tokens x depth).
// Pooled tensors are token-major, so branch payloads concatenate verbatim.
template <typename T>
Tensor<T> concat_tokens(const std::vector<Tensor<T>>& branches) {
    const std::size_t depth = branches.front().extent(3);
    std::size_t tokens = 0;
    for (const Tensor<T>& b : branches) tokens += b.numel() / depth;

    std::vector<T> data;
    data.reserve(tokens * depth);
    for (const Tensor<T>& b : branches) {
        data.insert(data.end(), b.data(), b.data() + b.numel());
    }
    return Tensor<T>({tokens, depth}, std::move(data));
}

}  // namespace detail

/// Two-branch decomposition: a temporal branch whose windows cover all of
/// space and a spatial branch whose windows cover all of time, concatenated
/// into one token sequence of T'x1x1 + 1xW'xH' tokens. spec_t carries only
/// temporal extents (spatial kernel/stride must be 1), spec_s only spatial.
template <typename T>
Tensor<T> pool_separate_st(const Tensor<T>& video, const Tensor<T>& scores,
                           const PoolingSpec& spec_t, const PoolingSpec& spec_s,
                           std::size_t parallelism = 1) {
    detail::require_rank(video, 4, "video feature tensor");
    if (spec_t.kernel[1] != 1 || spec_t.kernel[2] != 1 || spec_t.stride[1] != 1 ||
        spec_t.stride[2] != 1) {
        throw std::invalid_argument("temporal branch spec must have spatial kernel/stride 1");
    }
    if (spec_s.kernel[0] != 1 || spec_s.stride[0] != 1) {
        throw std::invalid_argument("spatial branch spec must have temporal kernel/stride 1");
    }
    const Shape3 in = grid_shape(video);

    PoolingSpec temporal = spec_t;
    temporal.kernel = {spec_t.kernel[0], in.w, in.h};
    temporal.stride = {spec_t.stride[0], in.w, in.h};
    PoolingSpec spatial = spec_s;
    spatial.kernel = {in.t, spec_s.kernel[1], spec_s.kernel[2]};
    spatial.stride = {in.t, spec_s.stride[1], spec_s.stride[2]};

    std::vector<Tensor<T>> branches;
    branches.push_back(pool_forward(video, scores, temporal, parallelism));
    branches.push_back(pool_forward(video, scores, spatial, parallelism));
    return detail::concat_tokens(branches);
}

/// Pools the same input with each branch spec (shared scores) and
/// concatenates the flattened token sequences.
template <typename T>
Tensor<T> pool_multi(const Tensor<T>& video, const Tensor<T>& scores,
                     const std::vector<PoolingSpec>& specs, std::size_t parallelism = 1) {
    if (specs.size() < 2) {
        throw std::invalid_argument("multi-branch pooling needs at least two specs, got " +
                                    std::to_string(specs.size()));
    }
    std::vector<Tensor<T>> branches;
    branches.reserve(specs.size());
    for (const PoolingSpec& spec : specs) {
        branches.push_back(pool_forward(video, scores, spec, parallelism));
    }
    return detail::concat_tokens(branches);
}

}  // namespace promptpool
