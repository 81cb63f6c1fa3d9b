// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include "paro/tensor.hpp"

#include <cmath>
#include <sstream>

#include "paro/error.hpp"

namespace paro {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<float> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols)
        throw ShapeError("matrix data length " + std::to_string(data.size()) + " does not match " +
                         std::to_string(rows) + "x" + std::to_string(cols));
}

void require_finite(const Matrix& m, const std::string& what) {
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        if (!std::isfinite(m.data[i]))
            throw InvariantError(what + ": non-finite value at flat index " + std::to_string(i));
    }
}

TokenGrid::TokenGrid(std::vector<GridAxis> a) : axes(std::move(a)) {
    if (axes.size() != 2 && axes.size() != 3)
        throw ConfigError("token grid must have 2 or 3 axes, got " + std::to_string(axes.size()));
    unsigned seen = 0;
    for (const GridAxis& ax : axes) {
        unsigned bit;
        switch (ax.label) {
        case 'F': bit = 1; break;
        case 'H': bit = 2; break;
        case 'W': bit = 4; break;
        default:
            throw ConfigError(std::string("unknown grid axis label '") + ax.label + "'");
        }
        if (seen & bit)
            throw ConfigError(std::string("duplicate grid axis label '") + ax.label + "'");
        seen |= bit;
        if (ax.extent == 0)
            throw ConfigError(std::string("grid axis '") + ax.label + "' has zero extent");
    }
    if (axes.size() == 2 && (seen & 1))
        throw ConfigError("2D grids use labels H and W only");
}

std::size_t TokenGrid::token_count() const {
    std::size_t n = 1;
    for (const GridAxis& ax : axes)
        n *= ax.extent;
    return n;
}

std::size_t TokenGrid::axis_index(char label) const {
    for (std::size_t i = 0; i < axes.size(); ++i)
        if (axes[i].label == label)
            return i;
    throw InputError(std::string("grid has no axis labeled '") + label + "'");
}

std::string TokenGrid::label_string() const {
    std::string s;
    for (const GridAxis& ax : axes)
        s.push_back(ax.label);
    return s;
}

std::size_t flat_index(const TokenGrid& grid, const std::vector<std::uint32_t>& coords) {
    if (coords.size() != grid.ndim())
        throw InputError("expected " + std::to_string(grid.ndim()) + " coordinates, got " +
                         std::to_string(coords.size()));
    std::size_t idx = 0;
    for (std::size_t a = 0; a < coords.size(); ++a) {
        if (coords[a] >= grid.axes[a].extent)
            throw InputError(std::string("coordinate ") + std::to_string(coords[a]) + " out of range for axis '" +
                             grid.axes[a].label + "' (extent " + std::to_string(grid.axes[a].extent) + ")");
        idx = idx * grid.axes[a].extent + coords[a];
    }
    return idx;
}

std::vector<std::uint32_t> grid_coords(const TokenGrid& grid, std::size_t index) {
    if (index >= grid.token_count())
        throw InputError("token index " + std::to_string(index) + " out of range");
    std::vector<std::uint32_t> coords(grid.ndim());
    for (std::size_t a = grid.ndim(); a-- > 0;) {
        coords[a] = static_cast<std::uint32_t>(index % grid.axes[a].extent);
        index /= grid.axes[a].extent;
    }
    return coords;
}

TokenGrid parse_grid(const std::string& text) {
    std::vector<GridAxis> axes;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        auto colon = part.find(':');
        if (colon != 1 || part.size() < 3)
            throw ConfigError("bad grid axis '" + part + "', expected LABEL:EXTENT (e.g. F:13)");
        char label = part[0];
        std::uint32_t extent = 0;
        try {
            unsigned long v = std::stoul(part.substr(2));
            extent = static_cast<std::uint32_t>(v);
        } catch (const std::exception&) {
            throw ConfigError("bad grid extent in '" + part + "'");
        }
        axes.push_back({label, extent});
    }
    return TokenGrid(std::move(axes));
}

} // namespace paro
