// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paro/metrics.hpp"
#include "paro/tensor.hpp"

namespace paro {

// An axis permutation of the token grid, materialized as row index maps.
// forward[old] = new, inverse[new] = old; forward sends each token to the
// row-major position of its coordinates under `order`.
struct PermPlan {
    std::string order;                 // axis labels, e.g. "HWF"
    std::vector<std::uint32_t> forward;
    std::vector<std::uint32_t> inverse;

    bool is_identity() const;
    // Plan that undoes this one (forward and inverse swapped).
    PermPlan inverted() const;
    // Same permutation acting on rows [prefix, prefix+N) with the leading
    // `prefix` rows pinned in place.
    PermPlan with_prefix(std::size_t prefix) const;
};

// Plan for one axis order of `grid`.
PermPlan make_perm(const TokenGrid& grid, const std::string& order);

// All ndim! plans; identity (the grid's own order) first, the rest in
// lexicographic label order. Tie-breaks elsewhere refer to this order.
std::vector<PermPlan> enumerate_perms(const TokenGrid& grid);

// result.row(i) = m.row(plan.inverse[i]); apply plan.inverted() to undo.
Matrix apply_perm_rows(const Matrix& m, const PermPlan& plan);

// Simultaneous row and column permutation of a token x token map.
Matrix apply_perm_map(const Matrix& m, const PermPlan& plan);

struct PermScore {
    std::string order;
    double sparse_mean;  // mean sparse-block fraction over the calibration set
    double quant_mean;   // mean per-block incoherence over the calibration set
    double sparse_share; // normalized non-sparse fraction (lower = sparser)
    double quant_share;  // normalized incoherence
    double combined;     // alpha * sparse_share + (1 - alpha) * quant_share
};

struct SelectionResult {
    std::size_t chosen; // index into plans/scores (canonical enumeration order)
    std::vector<PermPlan> plans;
    std::vector<PermScore> scores;

    const PermPlan& plan() const { return plans[chosen]; }
};

// Scores every axis permutation over the calibration maps and returns the
// argmin of the combined metric. Both terms enter as "lower is better":
// the sparsity term is the non-sparse block fraction (1 - sparse fraction),
// the quant term is the mean incoherence; each is normalized by its sum over
// all permutations and mixed with weight cfg.alpha. Ties go to the earliest
// plan in canonical order. The first `dense_prefix` tokens of each map are
// pinned and excluded from the metrics; maps must have
// dense_prefix + grid.token_count() rows.
SelectionResult select_permutation(const std::vector<Matrix>& calib, const TokenGrid& grid, const MetricConfig& cfg,
                                   std::size_t dense_prefix = 0);

// Plan file: one "head_id,order" line per head (e.g. "0,HWF").
void save_plan_file(const std::vector<std::pair<std::uint32_t, std::string>>& entries, const std::string& path);
std::vector<std::pair<std::uint32_t, std::string>> load_plan_file(const std::string& path);

} // namespace paro
