// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "paro/mask.hpp"
#include "paro/quant.hpp"
#include "paro/tensor.hpp"

namespace paro {

struct AttnInputs {
    Matrix q, k, v;                // N x d each
    float scale = 0.0f;            // 0 selects 1/sqrt(d)
    std::size_t dense_prefix = 0;  // leading tokens exempt from masking/quantization

    void validate() const;
    std::size_t tokens() const { return q.rows; }
    std::size_t head_dim() const { return q.cols; }
    double effective_scale() const;
};

struct AttnResult {
    Matrix output;                          // N x d
    std::optional<Matrix> attn_map;         // N x N, materialized on request only
    std::vector<std::uint32_t> zeroed_rows; // rows whose every block was skipped
};

// softmax(scale * Q K^T) V with binary64 row accumulation; the reference path.
AttnResult dense_attention(const AttnInputs& in, bool want_map = false);

// Tile-by-tile attention with running row max and row sum; never materializes
// the full attention matrix. Matches dense_attention within accumulation-order
// rounding.
AttnResult blocked_attention_stream(const AttnInputs& in, std::size_t block);

// Streaming attention that skips masked key blocks entirely: they contribute
// neither to the running max nor to the accumulators. With an all-true mask
// this is bit-identical to blocked_attention_stream. Rows and columns inside
// dense_prefix are forced dense.
AttnResult masked_blocked_attention(const AttnInputs& in, const BlockMask& mask);

// Streaming attention where, inside every surviving tile, the unnormalized
// exponentials (post row-max subtraction, pre rescale) and the V tile are
// quantized per tile, multiplied in integers, and dequantized into the
// binary64 accumulators. The final normalization uses the exact running sums.
// Pass mask = nullptr for an all-true mask.
AttnResult quantized_blocked_attention(const AttnInputs& in, const BlockMask* mask, const QuantConfig& qcfg);

} // namespace paro
