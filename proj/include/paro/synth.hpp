// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "paro/attention.hpp"
#include "paro/tensor.hpp"

namespace paro {

// Generative model for attention maps: each head aggregates locally along the
// positively weighted axes, with Gaussian locality of scale `bandwidth`;
// zero-weight axes are held fixed (they receive a fixed pinning penalty
// coefficient of 32). With weights on the innermost axes this yields
// near-diagonal banded maps; with weight on an outer axis the same head shows
// stripes at that axis' flattening stride. Small weights widen the
// aggregation: at weight w the locality scale along that axis is bandwidth /
// sqrt(w).
//
//   logit(i, j) = -sum_a c_a * (x_a(i) - x_a(j))^2 / (2 * bandwidth^2)
//                 + noise * eta(i, j)
//
// eta is a deterministic stream in [0,1): MT19937-64 seeded with `seed`, one
// draw per entry in row-major order, mapped by (x >> 11) * 2^-53. The map is
// the row softmax of the logits. When dense_prefix > 0, the leading tokens get
// flat logits (rows and columns), modeling uncompressed text tokens.
struct AggregationSpec {
    TokenGrid grid;
    std::vector<float> axis_weights; // parallel to grid.axes, >= 0, at least one positive
    float bandwidth = 1.0f;
    float noise = 0.0f;
    std::uint64_t seed = 0;
    std::size_t dense_prefix = 0;

    void validate() const;
};

Matrix gen_attention_map(const AggregationSpec& spec);

// Maps drifting across timesteps: the bandwidth is modulated by
// (1 + drift * exp(-6 t / (T-1))), so early maps move fast and the second half
// is nearly stable. With stability_floor > 0 the pairwise cosine similarity of
// later-half maps is checked against it (InvariantError on violation).
std::vector<Matrix> gen_calibration_set(const AggregationSpec& spec, std::uint32_t timesteps, double drift,
                                        double stability_floor = 0.0);

// Q/K/V whose dense attention reproduces the noiseless aggregation pattern:
// the pairwise Gaussian penalty is expanded into a rank-(ndim+1) product, so
// head_dim must be at least ndim+1 (extra dims are zero). V is standard
// normal, drawn from the same documented generator. Prefix rows of Q and K are
// zero, which makes their logits flat on both sides.
AttnInputs gen_attention_inputs(const AggregationSpec& spec, std::size_t head_dim);

// "F:1,H:0.5" -> per-axis weights in grid order; absent axes get 0.
std::vector<float> parse_axis_weights(const TokenGrid& grid, const std::string& text);

// Key-value text form of a spec, one `key = value` per line, '#' comments:
//
//   grid = F:4,H:4,W:4
//   weights = F:1
//   bandwidth = 1.0
//   noise = 0.1
//   seed = 7
//   dense_prefix = 0
//
// grid and weights are required, the rest default as above.
AggregationSpec parse_aggregation_spec(const std::string& text);
AggregationSpec load_aggregation_spec(const std::string& path);

} // namespace paro
