// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paro/metrics.hpp"

namespace paro {

// Boolean block-retention grid over k_rows x k_cols tiles of edge `block`.
struct BlockMask {
    std::size_t k_rows = 0;
    std::size_t k_cols = 0;
    std::size_t block = 0;
    std::vector<std::uint8_t> bits; // row-major, one byte per block

    BlockMask() = default;
    BlockMask(std::size_t kr, std::size_t kc, std::size_t b, bool value = false);

    bool get(std::size_t i, std::size_t j) const { return bits[i * k_cols + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v) { bits[i * k_cols + j] = v ? 1 : 0; }

    std::size_t popcount() const;
    double density() const; // kept blocks / total blocks, exact ratio

    // is_subset_of: every kept block of *this is kept in `other`
    bool is_subset_of(const BlockMask& other) const;
};

struct MaskGenResult {
    BlockMask mask;
    std::size_t repaired_rows = 0; // rows that needed their best block re-enabled
};

// Keeps exactly ceil(density * k_rows * k_cols) blocks with the largest sums.
// Guard: the leading `guard_blocks` block rows and columns are forced true and
// count toward the total. Ties at the cutoff go to the lexicographically
// smaller (row, col). Rows left without any block are repaired by enabling
// their largest block and dropping the smallest kept block elsewhere, keeping
// the count exact; repairs are reported, never silent.
// Throws ConfigError when the guard or the row-coverage floor makes the
// requested density infeasible.
MaskGenResult gen_mask(const BlockGrid& sums, double density, std::size_t block, std::size_t guard_blocks = 0);

// Per-timestep masks for the first half of the schedule, one shared mask,
// generated from the mean of the later-half block sums, for the rest.
struct MaskSchedule {
    std::uint32_t timesteps = 0;
    std::vector<std::pair<std::uint32_t, BlockMask>> distinct; // t < timesteps/2
    BlockMask shared;                                          // t >= timesteps/2
    std::size_t repaired_rows = 0;                             // total over all generated masks

    const BlockMask& at(std::uint32_t t) const;
};

// `calib` holds one block-sum grid per timestep, in timestep order.
MaskSchedule build_schedule(const std::vector<BlockGrid>& calib, double density, std::uint32_t timesteps,
                            std::size_t block, std::size_t guard_blocks = 0);

// PMSK mask blob, little-endian:
//
//   magic "PMSK" (4), version u8 = 1, reserved u8 = 0,
//   u32 k_rows, u32 k_cols, u32 block,
//   k_rows * ceil(k_cols/8) payload bytes, LSB-first within each byte,
//   each row padded to a byte boundary.
//
// The row padding costs ~2% over the tightly packed size but keeps row
// access O(1) during streaming.
std::vector<std::uint8_t> serialize_mask(const BlockMask& m);
BlockMask deserialize_mask(const std::uint8_t* data, std::size_t size, std::size_t* consumed = nullptr);

// Tightly packed bit count -> bytes, the figure quoted for mask storage.
std::size_t unpadded_mask_bytes(std::size_t k_rows, std::size_t k_cols);

// PSCH schedule file: magic "PSCH" (4), u32 timesteps, u32 distinct count,
// then (u32 timestep, PMSK blob) per distinct entry, then the shared PMSK blob.
void save_schedule(const MaskSchedule& s, const std::string& path);
MaskSchedule load_schedule(const std::string& path);

struct MaskQuality {
    double l1;
    double rmse;
    double cosine;
    double retained_mass; // kept attention mass fraction, before renormalization
};

// Compares `map` against itself with masked blocks zeroed and rows
// renormalized.
MaskQuality mask_quality(const AttnMap& map, const BlockMask& mask);

} // namespace paro
