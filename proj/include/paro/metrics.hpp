// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "paro/tensor.hpp"

namespace paro {

struct MetricConfig {
    std::size_t block = 64; // b, tile edge for both sparsity and quant grouping
    float eps = 1e-3f;      // |p| < eps counts as a small entry
    float sigma = 0.9f;     // a block is sparse when >= sigma of its entries are small
    float alpha = 0.5f;     // weight of the sparsity term in the combined score

    void validate() const;
};

// Post-softmax attention map partitioned into block x block tiles. Rows must
// sum to 1 within 1e-5 unless `relaxed` (dumped, unnormalized maps) is set.
struct AttnMap {
    Matrix map;        // N x N
    std::size_t block; // b

    AttnMap(Matrix m, std::size_t b, bool relaxed = false);

    std::size_t tokens() const { return map.rows; }
    std::size_t blocks_per_side() const { return (map.rows + block - 1) / block; } // k
};

// Small dense grid of binary64 per-block reductions (k x k).
struct BlockGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    BlockGrid() = default;
    BlockGrid(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
    double& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

// Per-block sums of |values|. Ragged edge blocks sum their true entries only.
BlockGrid block_sums(const AttnMap& map);

// Fraction of blocks whose small-entry share reaches cfg.sigma. Ragged blocks
// use their true element count as the denominator.
double m_sparse(const AttnMap& map, const MetricConfig& cfg);

// max|x| / mean|x|; 1.0 for an all-zero group (the 0/0 convention), >= 1 otherwise.
double incoherence(std::span<const float> group);

// Mean incoherence over all k*k blocks.
double m_quant(const AttnMap& map, const MetricConfig& cfg);

struct SimilarityResult {
    double cosine;
    double l1;   // mean absolute difference
    double rmse;
};

SimilarityResult map_similarity(const Matrix& a, const Matrix& b);

} // namespace paro
