// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace paro {

// Dense row-major binary32 matrix. Values are immutable by convention once a
// matrix has been handed to an operation; accumulation happens in binary64
// inside the kernels, never in place.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}
    Matrix(std::size_t r, std::size_t c, std::vector<float> d);

    float* row(std::size_t i) { return data.data() + i * cols; }
    const float* row(std::size_t i) const { return data.data() + i * cols; }
    float& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    float at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::size_t size() const { return rows * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Throws InvariantError if any value is NaN or infinite.
void require_finite(const Matrix& m, const std::string& what);

struct GridAxis {
    char label; // one of F, H, W
    std::uint32_t extent;
};

// Labeled token layout, e.g. [F=13, H=30, W=45]; flattening to the 1D token
// sequence is row-major in the listed axis order.
struct TokenGrid {
    std::vector<GridAxis> axes;

    TokenGrid() = default;
    explicit TokenGrid(std::vector<GridAxis> a);

    std::size_t ndim() const { return axes.size(); }
    std::size_t token_count() const;
    // position of `label` in axes; throws InputError when absent
    std::size_t axis_index(char label) const;
    std::string label_string() const; // e.g. "FHW"
};

// Row-major flat index of `coords` (given in the grid's own axis order).
// Bijective over the grid; throws InputError on out-of-range coordinates.
std::size_t flat_index(const TokenGrid& grid, const std::vector<std::uint32_t>& coords);

// Inverse of flat_index.
std::vector<std::uint32_t> grid_coords(const TokenGrid& grid, std::size_t index);

// Parses "F:13,H:30,W:45" (2D: "H:64,W:64").
TokenGrid parse_grid(const std::string& text);

} // namespace paro
