// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paro/metrics.hpp"
#include "paro/tensor.hpp"

namespace paro {

enum class QuantMode : std::uint8_t {
    Unsigned = 0,  // affine, codes in [0, 2^bits - 1]; inputs must be >= 0
    Symmetric = 1, // codes in [-(2^(bits-1) - 1), 2^(bits-1) - 1]
};

enum class QuantGrouping : std::uint8_t {
    PerBlock = 0, // block x block tiles (ragged edges use their true extent)
    PerRow = 1,   // one group per matrix row
};

struct QuantConfig {
    unsigned bits = 8; // 4 or 8
    QuantMode mode = QuantMode::Unsigned;
    QuantGrouping grouping = QuantGrouping::PerBlock;
    std::size_t block = 64;

    void validate() const;
    std::int32_t qmin() const;
    std::int32_t qmax() const;
};

// Integer codes with one scale (and, in unsigned mode, one offset) per group.
// dequantized value = code * scale (+ offset).
struct QuantBlockTensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    QuantConfig config;
    std::vector<std::int32_t> codes;  // row-major, parallel to the source matrix
    std::vector<float> scales;        // one per group
    std::vector<float> offsets;       // one per group; empty in symmetric mode

    std::size_t group_count() const;
};

QuantBlockTensor quantize(const Matrix& m, const QuantConfig& cfg);
Matrix dequantize(const QuantBlockTensor& q);

struct IncoherenceReport {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    // histogram of per-group incoherence over power-of-two bins:
    // [1,2), [2,4), ..., [2^(B-1), inf)
    std::vector<std::size_t> histogram;
    std::size_t groups = 0;
};

IncoherenceReport incoherence_report(const AttnMap& map, const QuantConfig& cfg);

// Rounding comparators for 8-bit float formats, used in reports only.
enum class Fp8Format { E4M3, E5M2 };
float round_to_fp8(float x, Fp8Format fmt);

// PARQ dump, little-endian: magic "PARQ" (4), version u8 = 1, bitwidth u8,
// mode u8, grouping u8, u32 block, u32 rows, u32 cols, u32 group count,
// f32 scales, f32 offsets (unsigned mode only), then codes packed one per
// byte at 8 bits or two per byte at 4 bits (low nibble first, two's
// complement nibbles in symmetric mode).
void save_quant_tensor(const QuantBlockTensor& q, const std::string& path);
QuantBlockTensor load_quant_tensor(const std::string& path);

} // namespace paro
