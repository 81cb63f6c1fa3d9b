// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paro/tensor.hpp"

namespace paro {

// PAT1 tensor file, little-endian throughout:
//
//   offset  size        field
//   0       4           magic "PARO"
//   4       1           version, = 1
//   5       1           dtype, = 0 (binary32)
//   6       1           ndim
//   7       1           reserved, = 0
//   8       4*ndim      u32 extents
//   ...     product*4   row-major binary32 payload
//
// The byte layout is normative; loaders report the byte offset of the first
// violation they see.

struct TensorData {
    std::vector<std::uint32_t> shape;
    std::vector<float> values; // row-major

    std::size_t element_count() const;
};

void save_tensor(const TensorData& t, const std::string& path);
TensorData load_tensor(const std::string& path);

// 2D convenience wrappers; the loader rejects non-finite payloads and
// (for load_matrix) any ndim other than 2.
void save_matrix(const Matrix& m, const std::string& path);
Matrix load_matrix(const std::string& path);

} // namespace paro
