// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include "paro/attention.hpp"

#include <cmath>
#include <limits>

#include "paro/error.hpp"
#include "paro/kernels.hpp"

namespace paro {

void AttnInputs::validate() const {
    if (q.rows != k.rows || q.rows != v.rows || q.cols != k.cols || q.cols != v.cols)
        throw ShapeError("Q/K/V must share N x d, got Q " + std::to_string(q.rows) + "x" + std::to_string(q.cols) +
                         ", K " + std::to_string(k.rows) + "x" + std::to_string(k.cols) + ", V " +
                         std::to_string(v.rows) + "x" + std::to_string(v.cols));
    if (q.rows == 0 || q.cols == 0)
        throw ShapeError("attention inputs must be non-empty");
    if (dense_prefix > q.rows)
        throw ConfigError("dense_prefix " + std::to_string(dense_prefix) + " exceeds token count " +
                          std::to_string(q.rows));
}

double AttnInputs::effective_scale() const {
    return scale != 0.0f ? static_cast<double>(scale) : 1.0 / std::sqrt(static_cast<double>(q.cols));
}

AttnResult dense_attention(const AttnInputs& in, bool want_map) {
    in.validate();
    const auto& kr = kernels::active();
    const std::size_t n = in.tokens();
    const std::size_t d = in.head_dim();
    const double scale = in.effective_scale();

    AttnResult res;
    res.output = Matrix(n, d);
    if (want_map)
        res.attn_map = Matrix(n, n);

    std::vector<double> logits(n);
    std::vector<double> acc(d);
    for (std::size_t i = 0; i < n; ++i) {
        const float* qi = in.q.row(i);
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            logits[j] = scale * kr.dot(qi, in.k.row(j), d);
            m = std::max(m, logits[j]);
        }
        double l = 0.0;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            double p = std::exp(logits[j] - m);
            l += p;
            kr.axpy(acc.data(), p, in.v.row(j), d);
            logits[j] = p; // reuse as the unnormalized weight
        }
        float* out = res.output.row(i);
        for (std::size_t c = 0; c < d; ++c)
            out[c] = static_cast<float>(acc[c] / l);
        if (want_map) {
            float* map_row = res.attn_map->row(i);
            for (std::size_t j = 0; j < n; ++j)
                map_row[j] = static_cast<float>(logits[j] / l);
        }
    }
    return res;
}

namespace {

// One symmetric quantized V tile (rows [r0,r1) x d), shared across query tiles.
struct QuantVTile {
    float scale = 1.0f;
    std::vector<std::int32_t> codes;   // (r1-r0) x d
    std::vector<std::int64_t> colsum;  // per output dim, for the offset term
    bool ready = false;
};

// Streaming engine behind the three blocked entry points. Key tiles are
// skipped per the mask; rows below dense_prefix and key tiles that touch the
// prefix stay dense and unquantized.
AttnResult stream_engine(const AttnInputs& in, std::size_t block, const BlockMask* mask, const QuantConfig* qcfg) {
    in.validate();
    if (block < 1)
        throw ConfigError("tile block must be >= 1");
    const auto& kr = kernels::active();
    const std::size_t n = in.tokens();
    const std::size_t d = in.head_dim();
    const std::size_t kblocks = (n + block - 1) / block;
    const double scale = in.effective_scale();
    const std::size_t dp = in.dense_prefix;

    if (mask && (mask->k_rows != kblocks || mask->k_cols != kblocks))
        throw ShapeError("mask grid " + std::to_string(mask->k_rows) + "x" + std::to_string(mask->k_cols) +
                         " does not cover " + std::to_string(kblocks) + "x" + std::to_string(kblocks) + " blocks");
    if (qcfg)
        qcfg->validate();

    AttnResult res;
    res.output = Matrix(n, d);

    std::vector<QuantVTile> vtiles(qcfg ? kblocks : 0);
    auto quant_v_tile = [&](std::size_t bj) -> const QuantVTile& {
        QuantVTile& t = vtiles[bj];
        if (!t.ready) {
            const std::size_t ks = bj * block;
            const std::size_t ke = std::min(n, ks + block);
            float amax = 0.0f;
            for (std::size_t r = ks; r < ke; ++r)
                amax = std::max(amax, kr.max_abs(in.v.row(r), d));
            const auto qmax = static_cast<float>((1 << (qcfg->bits - 1)) - 1);
            t.scale = amax == 0.0f ? 1.0f : amax / qmax;
            t.codes.resize((ke - ks) * d);
            for (std::size_t r = ks; r < ke; ++r)
                kr.quant_affine(in.v.row(r), d, 0.0f, t.scale, -static_cast<std::int32_t>(qmax),
                                static_cast<std::int32_t>(qmax), t.codes.data() + (r - ks) * d);
            t.colsum.assign(d, 0);
            for (std::size_t r = 0; r < ke - ks; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    t.colsum[c] += t.codes[r * d + c];
            t.ready = true;
        }
        return t;
    };

    // per-row running state for the current query tile
    std::vector<double> row_max, row_sum, acc;
    std::vector<double> s;        // tile logits
    std::vector<float> ptile;     // tile exponentials, quantizer input
    std::vector<std::int32_t> pcodes;

    for (std::size_t qs = 0; qs < n; qs += block) {
        const std::size_t qe = std::min(n, qs + block);
        const std::size_t qn = qe - qs;
        const std::size_t qb = qs / block;

        row_max.assign(qn, -std::numeric_limits<double>::infinity());
        row_sum.assign(qn, 0.0);
        acc.assign(qn * d, 0.0);

        for (std::size_t bj = 0; bj < kblocks; ++bj) {
            const std::size_t ks = bj * block;
            const std::size_t ke = std::min(n, ks + block);
            const std::size_t kn = ke - ks;

            const bool tile_dense = ks < dp; // key tile touches the prefix
            const bool tile_kept = tile_dense || mask == nullptr || mask->get(qb, bj);
            const bool has_prefix_rows = qs < dp;
            if (!tile_kept && !has_prefix_rows)
                continue;

            s.resize(qn * kn);
            ptile.resize(qn * kn);
            bool any_quant_rows = false;
            for (std::size_t r = 0; r < qn; ++r) {
                const std::size_t i = qs + r;
                const bool row_dense = i < dp;
                if (!tile_kept && !row_dense)
                    continue; // this row skips the tile
                const float* qi = in.q.row(i);
                double* srow = s.data() + r * kn;
                double tmax = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < kn; ++j) {
                    srow[j] = scale * kr.dot(qi, in.k.row(ks + j), d);
                    tmax = std::max(tmax, srow[j]);
                }
                const double m_new = std::max(row_max[r], tmax);
                if (row_sum[r] > 0.0) {
                    const double gamma = std::exp(row_max[r] - m_new);
                    if (gamma != 1.0) {
                        row_sum[r] *= gamma;
                        double* arow = acc.data() + r * d;
                        for (std::size_t c = 0; c < d; ++c)
                            arow[c] *= gamma;
                    }
                }
                row_max[r] = m_new;

                float* prow = ptile.data() + r * kn;
                double psum = 0.0;
                for (std::size_t j = 0; j < kn; ++j) {
                    const double p = std::exp(srow[j] - m_new);
                    psum += p;
                    srow[j] = p;
                    prow[j] = static_cast<float>(p);
                }
                row_sum[r] += psum;

                const bool quantize_row = qcfg && !row_dense && !tile_dense;
                if (!quantize_row) {
                    double* arow = acc.data() + r * d;
                    for (std::size_t j = 0; j < kn; ++j)
                        kr.axpy(arow, srow[j], in.v.row(ks + j), d);
                } else {
                    any_quant_rows = true;
                }
            }

            if (qcfg && any_quant_rows) {
                // one unsigned group over the tile's quantizable rows
                float mn = 0.0f, mx = 0.0f;
                bool first = true;
                for (std::size_t r = 0; r < qn; ++r) {
                    const std::size_t i = qs + r;
                    if (i < dp || (!tile_kept && i >= dp))
                        continue;
                    float rmn, rmx;
                    kr.min_max(ptile.data() + r * kn, kn, &rmn, &rmx);
                    mn = first ? rmn : std::min(mn, rmn);
                    mx = first ? rmx : std::max(mx, rmx);
                    first = false;
                }
                const auto qmax = static_cast<float>((1u << qcfg->bits) - 1);
                float pscale = (mx - mn) / qmax;
                if (pscale == 0.0f)
                    pscale = 1.0f;
                const float poffset = mn;

                const QuantVTile& vt = quant_v_tile(bj);
                pcodes.resize(kn);
                for (std::size_t r = 0; r < qn; ++r) {
                    const std::size_t i = qs + r;
                    if (i < dp || (!tile_kept && i >= dp))
                        continue;
                    kr.quant_affine(ptile.data() + r * kn, kn, poffset, pscale, 0, static_cast<std::int32_t>(qmax),
                                    pcodes.data());
                    double* arow = acc.data() + r * d;
                    const double ss = static_cast<double>(pscale) * static_cast<double>(vt.scale);
                    const double os = static_cast<double>(poffset) * static_cast<double>(vt.scale);
                    for (std::size_t c = 0; c < d; ++c) {
                        std::int64_t ip = 0;
                        for (std::size_t j = 0; j < kn; ++j)
                            ip += static_cast<std::int64_t>(pcodes[j]) * vt.codes[j * d + c];
                        arow[c] += ss * static_cast<double>(ip) + os * static_cast<double>(vt.colsum[c]);
                    }
                }
            }
        }

        for (std::size_t r = 0; r < qn; ++r) {
            float* out = res.output.row(qs + r);
            if (row_sum[r] == 0.0) {
                res.zeroed_rows.push_back(static_cast<std::uint32_t>(qs + r));
                continue; // output row stays zero
            }
            const double* arow = acc.data() + r * d;
            for (std::size_t c = 0; c < d; ++c)
                out[c] = static_cast<float>(arow[c] / row_sum[r]);
        }
    }
    return res;
}

} // namespace

AttnResult blocked_attention_stream(const AttnInputs& in, std::size_t block) {
    return stream_engine(in, block, nullptr, nullptr);
}

AttnResult masked_blocked_attention(const AttnInputs& in, const BlockMask& mask) {
    return stream_engine(in, mask.block, &mask, nullptr);
}

AttnResult quantized_blocked_attention(const AttnInputs& in, const BlockMask* mask, const QuantConfig& qcfg) {
    const std::size_t block = mask ? mask->block : qcfg.block;
    return stream_engine(in, block, mask, &qcfg);
}

} // namespace paro
