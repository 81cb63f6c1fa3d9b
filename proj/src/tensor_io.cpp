// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include "paro/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include "paro/error.hpp"

namespace paro {

namespace {

constexpr char kMagic[4] = {'P', 'A', 'R', 'O'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

void put_u32le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

[[noreturn]] void format_fail(const std::string& path, std::size_t offset, const std::string& why) {
    throw FormatError(path + ": " + why + " (at byte offset " + std::to_string(offset) + ")");
}

} // namespace

std::size_t TensorData::element_count() const {
    std::size_t n = 1;
    for (std::uint32_t e : shape)
        n *= e;
    return shape.empty() ? 0 : n;
}

void save_tensor(const TensorData& t, const std::string& path) {
    if (t.shape.empty() || t.shape.size() > 255)
        throw ConfigError("tensor ndim must be in [1,255]");
    if (t.element_count() != t.values.size())
        throw ShapeError("tensor value count does not match shape");

    std::string header;
    header.append(kMagic, 4);
    header.push_back(static_cast<char>(kVersion));
    header.push_back(static_cast<char>(kDtypeF32));
    header.push_back(static_cast<char>(t.shape.size()));
    header.push_back(0);
    for (std::uint32_t e : t.shape)
        put_u32le(header, e);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open '" + path + "' for writing");
    f.write(header.data(), static_cast<std::streamsize>(header.size()));

    static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);
    // payload is raw binary32; this code assumes a little-endian host
    f.write(reinterpret_cast<const char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * sizeof(float)));
    if (!f)
        throw IoError("short write to '" + path + "'");
}

TensorData load_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + path + "' for reading");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t size = bytes.size();

    if (size < 8)
        format_fail(path, size, "truncated header, need 8 bytes");
    if (std::memcmp(p, kMagic, 4) != 0)
        format_fail(path, 0, "bad magic, expected \"PARO\"");
    if (p[4] != kVersion)
        format_fail(path, 4, "unsupported version " + std::to_string(p[4]));
    if (p[5] != kDtypeF32)
        format_fail(path, 5, "unsupported dtype " + std::to_string(p[5]));
    const std::size_t ndim = p[6];
    if (ndim == 0)
        format_fail(path, 6, "ndim must be >= 1");
    if (p[7] != 0)
        format_fail(path, 7, "reserved byte must be 0");

    const std::size_t header_size = 8 + 4 * ndim;
    if (size < header_size)
        format_fail(path, size, "truncated extents, need " + std::to_string(header_size) + " header bytes");

    TensorData t;
    t.shape.resize(ndim);
    std::size_t count = 1;
    for (std::size_t a = 0; a < ndim; ++a) {
        t.shape[a] = get_u32le(p + 8 + 4 * a);
        if (t.shape[a] == 0)
            format_fail(path, 8 + 4 * a, "zero extent");
        count *= t.shape[a];
    }

    const std::size_t payload = count * 4;
    if (size != header_size + payload)
        format_fail(path, size,
                    "payload length mismatch, expected " + std::to_string(payload) + " bytes, found " +
                        std::to_string(size - header_size));

    t.values.resize(count);
    std::memcpy(t.values.data(), p + header_size, payload);
    return t;
}

void save_matrix(const Matrix& m, const std::string& path) {
    TensorData t;
    t.shape = {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)};
    t.values = m.data;
    save_tensor(t, path);
}

Matrix load_matrix(const std::string& path) {
    TensorData t = load_tensor(path);
    if (t.shape.size() != 2)
        throw FormatError(path + ": expected a 2D tensor, found ndim=" + std::to_string(t.shape.size()));
    Matrix m(t.shape[0], t.shape[1], std::move(t.values));
    require_finite(m, path);
    return m;
}

} // namespace paro
