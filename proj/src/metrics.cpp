// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include "paro/metrics.hpp"

#include <cmath>

#include "paro/error.hpp"
#include "paro/kernels.hpp"

namespace paro {

void MetricConfig::validate() const {
    if (block < 1)
        throw ConfigError("block must be >= 1");
    if (!(eps > 0.0f))
        throw ConfigError("eps must be > 0");
    if (!(sigma > 0.0f && sigma <= 1.0f))
        throw ConfigError("sigma must be in (0,1]");
    if (!(alpha >= 0.0f && alpha <= 1.0f))
        throw ConfigError("alpha must be in [0,1]");
}

AttnMap::AttnMap(Matrix m, std::size_t b, bool relaxed) : map(std::move(m)), block(b) {
    if (map.rows != map.cols)
        throw ShapeError("attention map must be square, got " + std::to_string(map.rows) + "x" +
                         std::to_string(map.cols));
    if (block < 1)
        throw ConfigError("block must be >= 1");
    if (!relaxed) {
        const auto& k = kernels::active();
        for (std::size_t i = 0; i < map.rows; ++i) {
            double s = k.sum(map.row(i), map.cols);
            if (std::fabs(s - 1.0) > 1e-5)
                throw InvariantError("attention map row " + std::to_string(i) + " sums to " + std::to_string(s) +
                                     ", expected 1 within 1e-5");
        }
    }
}

BlockGrid block_sums(const AttnMap& map) {
    const auto& kr = kernels::active();
    const std::size_t n = map.tokens();
    const std::size_t b = map.block;
    const std::size_t k = map.blocks_per_side();
    BlockGrid out(k, k);
    for (std::size_t bi = 0; bi < k; ++bi) {
        const std::size_t r0 = bi * b;
        const std::size_t r1 = std::min(n, r0 + b);
        for (std::size_t r = r0; r < r1; ++r) {
            const float* row = map.map.row(r);
            for (std::size_t bj = 0; bj < k; ++bj) {
                const std::size_t c0 = bj * b;
                const std::size_t c1 = std::min(n, c0 + b);
                out.at(bi, bj) += kr.sum_abs(row + c0, c1 - c0);
            }
        }
    }
    return out;
}

double m_sparse(const AttnMap& map, const MetricConfig& cfg) {
    cfg.validate();
    const auto& kr = kernels::active();
    const std::size_t n = map.tokens();
    const std::size_t b = map.block;
    const std::size_t k = map.blocks_per_side();
    std::size_t sparse_blocks = 0;
    for (std::size_t bi = 0; bi < k; ++bi) {
        const std::size_t r0 = bi * b;
        const std::size_t r1 = std::min(n, r0 + b);
        for (std::size_t bj = 0; bj < k; ++bj) {
            const std::size_t c0 = bj * b;
            const std::size_t c1 = std::min(n, c0 + b);
            std::size_t small = 0;
            for (std::size_t r = r0; r < r1; ++r)
                small += kr.count_abs_lt(map.map.row(r) + c0, c1 - c0, cfg.eps);
            const std::size_t count = (r1 - r0) * (c1 - c0);
            if (static_cast<double>(small) / static_cast<double>(count) >= static_cast<double>(cfg.sigma))
                ++sparse_blocks;
        }
    }
    return static_cast<double>(sparse_blocks) / static_cast<double>(k * k);
}

double incoherence(std::span<const float> group) {
    if (group.empty())
        throw InputError("incoherence of an empty group");
    const auto& kr = kernels::active();
    double mx = kr.max_abs(group.data(), group.size());
    if (mx == 0.0)
        return 1.0;
    double mean = kr.sum_abs(group.data(), group.size()) / static_cast<double>(group.size());
    return mx / mean;
}

namespace {

// incoherence of one tile without gathering it into a contiguous buffer
double tile_incoherence(const Matrix& m, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    const auto& kr = kernels::active();
    double mx = 0.0;
    double sum = 0.0;
    for (std::size_t r = r0; r < r1; ++r) {
        const float* p = m.row(r) + c0;
        mx = std::max(mx, static_cast<double>(kr.max_abs(p, c1 - c0)));
        sum += kr.sum_abs(p, c1 - c0);
    }
    if (mx == 0.0)
        return 1.0;
    const double count = static_cast<double>((r1 - r0) * (c1 - c0));
    return mx / (sum / count);
}

} // namespace

double m_quant(const AttnMap& map, const MetricConfig& cfg) {
    cfg.validate();
    const std::size_t n = map.tokens();
    const std::size_t b = map.block;
    const std::size_t k = map.blocks_per_side();
    double total = 0.0;
    for (std::size_t bi = 0; bi < k; ++bi) {
        const std::size_t r0 = bi * b;
        const std::size_t r1 = std::min(n, r0 + b);
        for (std::size_t bj = 0; bj < k; ++bj) {
            const std::size_t c0 = bj * b;
            const std::size_t c1 = std::min(n, c0 + b);
            total += tile_incoherence(map.map, r0, r1, c0, c1);
        }
    }
    return total / static_cast<double>(k * k);
}

SimilarityResult map_similarity(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw ShapeError("map_similarity: shape mismatch");
    const auto& kr = kernels::active();
    const std::size_t n = a.size();
    double ab = kr.dot(a.data.data(), b.data.data(), n);
    double aa = kr.dot(a.data.data(), a.data.data(), n);
    double bb = kr.dot(b.data.data(), b.data.data(), n);
    double denom = std::sqrt(aa) * std::sqrt(bb);
    SimilarityResult r;
    r.cosine = denom > 0.0 ? ab / denom : (aa == bb ? 1.0 : 0.0);
    r.l1 = kr.sum_abs_diff(a.data.data(), b.data.data(), n) / static_cast<double>(n);
    r.rmse = std::sqrt(kr.sum_sq_diff(a.data.data(), b.data.data(), n) / static_cast<double>(n));
    return r;
}

} // namespace paro
