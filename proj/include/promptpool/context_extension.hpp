// Copyright (c) 2026 The promptpool Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "promptpool/tensor.hpp"

// Extends a pretrained text positional-embedding table (rank-2, positions x
// width) past its trained length by linear interpolation of source rows,
//   row'(i) = P[floor(j)] + (j - floor(j)) * (P[floor(j)+1] - P[floor(j)]),
// where j is the real-valued source coordinate assigned to target position i.
// The asymmetric schedule keeps early positions at rate r_head (identity when
// r_head = 1) and compresses the tail at rate r_tail, so prompt tokens keep
// their trained embeddings while the table stretches to cover long pooled
// token sequences. Two baselines are included: uniform interpolation across
// the whole table and random initialization of the appended tail.

namespace promptpool {

enum class Continuity {
    /// Piecewise-linear mapping with matching value at the boundary:
    /// j = i*r_head below the boundary, j = boundary*r_head +
    /// (i-boundary)*r_tail at or above it. Strictly increasing in i.
    continuous_piecewise,
    /// j = i * r(i) with r switching at the boundary. Taken at face value
    /// this drops backwards at the switch (i=20 maps to 5 under the default
    /// rates); kept for comparison against the continuous form.
    literal,
};

inline const char* to_string(Continuity c) {
    return c == Continuity::continuous_piecewise ? "continuous-piecewise" : "literal";
}

inline Continuity continuity_from_string(std::string_view name) {
    if (name == "continuous-piecewise") return Continuity::continuous_piecewise;
    if (name == "literal") return Continuity::literal;
    throw std::invalid_argument("unknown continuity '" + std::string(name) +
                                "' (expected continuous-piecewise or literal)");
}

/// Position-dependent interpolation-rate schedule. Positions below `boundary`
/// map at r_head, the rest at r_tail.
struct RateSchedule {
    std::size_t boundary = 20;
    double r_head = 1.0;
    double r_tail = 0.25;
    std::size_t target_length = 0;
    Continuity continuity = Continuity::continuous_piecewise;
};

namespace detail {

inline void check_rates(const RateSchedule& sched) {
    if (!(sched.r_head > 0.0) || !std::isfinite(sched.r_head) || !(sched.r_tail > 0.0) ||
        !std::isfinite(sched.r_tail)) {
        throw std::invalid_argument("interpolation rates must be positive finite numbers");
    }
}

inline void check_schedule(const RateSchedule& sched) {
    check_rates(sched);
    if (sched.target_length == 0) {
        throw std::invalid_argument("schedule target length must be positive");
    }
    if (sched.target_length < sched.boundary) {
        throw std::invalid_argument("schedule target length " +
                                    std::to_string(sched.target_length) +
                                    " is smaller than the boundary " +
                                    std::to_string(sched.boundary));
    }
}

inline double raw_map_index(std::size_t i, const RateSchedule& sched) {
    const double pos = static_cast<double>(i);
    if (sched.continuity == Continuity::literal) {
        return pos * (i < sched.boundary ? sched.r_head : sched.r_tail);
    }
    if (i < sched.boundary) return pos * sched.r_head;
    return static_cast<double>(sched.boundary) * sched.r_head +
           (pos - static_cast<double>(sched.boundary)) * sched.r_tail;
}

// Writes one interpolated row. A zero fraction copies the source row
// verbatim and never touches row lo+1, so lo may be the last source row.
template <typename T>
void blend_row(const T* table, std::size_t width, std::size_t lo, double frac, T* row) {
    const T* a = table + lo * width;
    if (frac == 0.0) {
        std::copy(a, a + width, row);
        return;
    }
    const T* b = a + width;
    const T f = static_cast<T>(frac);
    // a + f*(b - a) with 0 < f < 1 stays within [min(a,b), max(a,b)] under
    // round-to-nearest, so interpolated rows never overshoot their brackets.
    for (std::size_t d = 0; d < width; ++d) row[d] = a[d] + f * (b[d] - a[d]);
}

template <typename T>
void check_table(const Tensor<T>& table) {
    require_rank(table, 2, "positional-embedding table");
    if (table.extent(0) < 2) {
        throw std::invalid_argument("positional-embedding table needs at least 2 rows, got " +
                                    std::to_string(table.extent(0)));
    }
}

}  // namespace detail

/// Real-valued source coordinate for target position i. The caller is
/// responsible for checking the result against its table length; this
/// function only knows the schedule.
inline double map_index(std::size_t i, const RateSchedule& sched) {
    detail::check_schedule(sched);
    if (i >= sched.target_length) {
        throw std::invalid_argument("target position " + std::to_string(i) +
                                    " is outside [0, " + std::to_string(sched.target_length) +
                                    ")");
    }
    return detail::raw_map_index(i, sched);
}

/// Largest target length for which every mapped position keeps both
/// interpolation bracket rows (floor(j) and floor(j)+1) inside a table of
/// `source_length` rows, i.e. j < source_length - 1 for all positions.
/// Equivalently: the first position whose coordinate reaches the final row
/// caps the sweep. interpolate_pe itself additionally accepts a coordinate
/// that lands on the final row exactly (the blend fraction is zero there),
/// so a target one past this value can still be valid; this bound is the
/// conservative one that never relies on that edge case. Ignores
/// sched.target_length. Under the default schedule a 77-row table yields 244.
inline std::size_t max_target_length(std::size_t source_length, const RateSchedule& sched) {
    if (source_length < 2) {
        throw std::invalid_argument("source table needs at least 2 rows, got " +
                                    std::to_string(source_length));
    }
    detail::check_rates(sched);
    const double limit = static_cast<double>(source_length - 1);
    constexpr std::size_t kSweepCap = std::size_t{1} << 24;
    for (std::size_t i = 0; i < kSweepCap; ++i) {
        if (!(detail::raw_map_index(i, sched) < limit)) return i;
    }
    throw std::invalid_argument("schedule admits target lengths beyond " +
                                std::to_string(kSweepCap) + "; refusing to sweep further");
}

/// Stretches the table to sched.target_length rows under the schedule.
/// Integer coordinates copy their source row bit-exactly; in particular the
/// first `boundary` rows are verbatim copies when r_head = 1.
template <typename T>
Tensor<T> interpolate_pe(const Tensor<T>& table, const RateSchedule& sched) {
    detail::check_table(table);
    detail::check_schedule(sched);
    const std::size_t length = table.extent(0);
    const std::size_t width = table.extent(1);
    const double limit = static_cast<double>(length - 1);

    Tensor<T> out({sched.target_length, width});
    const T* src = table.data();
    T* dst = out.data();
    for (std::size_t i = 0; i < sched.target_length; ++i) {
        const double j = detail::raw_map_index(i, sched);
        if (!(j >= 0.0) || j > limit) {
            throw std::invalid_argument("target position " + std::to_string(i) +
                                        " maps to source coordinate " + std::to_string(j) +
                                        " outside [0, " + std::to_string(length - 1) + "]");
        }
        const auto lo = static_cast<std::size_t>(j);
        detail::blend_row(src, width, lo, j - static_cast<double>(lo), dst + i * width);
    }
    return out;
}

/// Baseline: one global rate (length-1)/(target_length-1). The first and
/// last target rows always map exactly onto the first and last source rows;
/// target_length == length reproduces the input bit-exactly.
template <typename T>
Tensor<T> uniform_interpolate_pe(const Tensor<T>& table, std::size_t target_length) {
    detail::check_table(table);
    if (target_length < 2) {
        throw std::invalid_argument("target length must be at least 2, got " +
                                    std::to_string(target_length));
    }
    const std::size_t length = table.extent(0);
    const std::size_t width = table.extent(1);

    Tensor<T> out({target_length, width});
    const T* src = table.data();
    T* dst = out.data();
    const double span = static_cast<double>(length - 1);
    const double steps = static_cast<double>(target_length - 1);
    for (std::size_t i = 0; i < target_length; ++i) {
        // Multiply before dividing: whenever i*(length-1) is a multiple of
        // target_length-1 the quotient is exact and the row copies verbatim.
        const double j = static_cast<double>(i) * span / steps;
        auto lo = static_cast<std::size_t>(j);
        double frac = j - static_cast<double>(lo);
        if (lo >= length - 1) {  // exact endpoint: copy the last row
            lo = length - 1;
            frac = 0.0;
        }
        detail::blend_row(src, width, lo, frac, dst + i * width);
    }
    return out;
}

namespace detail {

// Basic-form Box-Muller transform over a fixed 64-bit engine. The standard
// library's normal_distribution is implementation-defined, so the transform
// is spelled out to keep seeded streams identical across toolchains.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = unit();
        while (u1 == 0.0) u1 = unit();
        const double u2 = unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    // Uniform in [0, 1) with 53-bit resolution.
    double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace detail

/// Baseline: keeps the source table verbatim and appends target_length -
/// length rows of i.i.d. zero-mean Gaussian entries with standard deviation
/// `scale`. Deterministic for a given seed.
template <typename T>
Tensor<T> random_tail_extend(const Tensor<T>& table, std::size_t target_length,
                             std::uint64_t seed, double scale = 0.02) {
    detail::check_table(table);
    const std::size_t length = table.extent(0);
    const std::size_t width = table.extent(1);
    if (target_length < length) {
        throw std::invalid_argument("target length " + std::to_string(target_length) +
                                    " is smaller than the source length " +
                                    std::to_string(length));
    }
    if (!(scale >= 0.0) || !std::isfinite(scale)) {
        throw std::invalid_argument("scale must be a finite non-negative number");
    }

    Tensor<T> out({target_length, width});
    std::copy(table.data(), table.data() + table.numel(), out.data());
    detail::GaussianSource gauss(seed);
    T* tail = out.data() + table.numel();
    const std::size_t extra = (target_length - length) * width;
    for (std::size_t i = 0; i < extra; ++i) tail[i] = static_cast<T>(scale * gauss.next());
    return out;
}

}  // namespace promptpool
