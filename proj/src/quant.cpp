// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include "paro/quant.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "paro/error.hpp"
#include "paro/kernels.hpp"

namespace paro {

void QuantConfig::validate() const {
    if (bits != 4 && bits != 8)
        throw ConfigError("quantization bitwidth must be 4 or 8, got " + std::to_string(bits));
    if (block < 1)
        throw ConfigError("quantization block must be >= 1");
}

std::int32_t QuantConfig::qmin() const {
    return mode == QuantMode::Unsigned ? 0 : -((1 << (bits - 1)) - 1);
}

std::int32_t QuantConfig::qmax() const {
    return mode == QuantMode::Unsigned ? (1 << bits) - 1 : (1 << (bits - 1)) - 1;
}

std::size_t QuantBlockTensor::group_count() const {
    if (config.grouping == QuantGrouping::PerRow)
        return rows;
    const std::size_t b = config.block;
    return ((rows + b - 1) / b) * ((cols + b - 1) / b);
}

namespace {

struct GroupSpan {
    std::size_t r0, r1, c0, c1;
};

// Groups enumerated row-major over the block grid (or by row); the group
// order is part of the dump format.
template <typename Fn>
void for_each_group(std::size_t rows, std::size_t cols, const QuantConfig& cfg, Fn&& fn) {
    if (cfg.grouping == QuantGrouping::PerRow) {
        for (std::size_t r = 0; r < rows; ++r)
            fn(GroupSpan{r, r + 1, 0, cols});
        return;
    }
    const std::size_t b = cfg.block;
    for (std::size_t r0 = 0; r0 < rows; r0 += b)
        for (std::size_t c0 = 0; c0 < cols; c0 += b)
            fn(GroupSpan{r0, std::min(rows, r0 + b), c0, std::min(cols, c0 + b)});
}

} // namespace

QuantBlockTensor quantize(const Matrix& m, const QuantConfig& cfg) {
    cfg.validate();
    const auto& kr = kernels::active();

    QuantBlockTensor q;
    q.rows = m.rows;
    q.cols = m.cols;
    q.config = cfg;
    q.codes.resize(m.size());

    const auto qmax = static_cast<float>(cfg.qmax());
    for_each_group(m.rows, m.cols, cfg, [&](const GroupSpan& g) {
        float scale = 1.0f;
        float offset = 0.0f;
        if (cfg.mode == QuantMode::Unsigned) {
            float mn = m.at(g.r0, g.c0), mx = mn;
            for (std::size_t r = g.r0; r < g.r1; ++r) {
                float rmn, rmx;
                kr.min_max(m.row(r) + g.c0, g.c1 - g.c0, &rmn, &rmx);
                mn = std::min(mn, rmn);
                mx = std::max(mx, rmx);
            }
            if (mn < 0.0f)
                throw InputError("negative input " + std::to_string(mn) + " in unsigned quantization");
            scale = (mx - mn) / qmax;
            offset = mn;
            if (scale == 0.0f)
                scale = 1.0f; // constant group, codes all 0
        } else {
            float amax = 0.0f;
            for (std::size_t r = g.r0; r < g.r1; ++r)
                amax = std::max(amax, kr.max_abs(m.row(r) + g.c0, g.c1 - g.c0));
            scale = amax / qmax;
            if (scale == 0.0f)
                scale = 1.0f;
        }
        q.scales.push_back(scale);
        if (cfg.mode == QuantMode::Unsigned)
            q.offsets.push_back(offset);
        for (std::size_t r = g.r0; r < g.r1; ++r)
            kr.quant_affine(m.row(r) + g.c0, g.c1 - g.c0, offset, scale, cfg.qmin(), cfg.qmax(),
                            q.codes.data() + r * m.cols + g.c0);
    });
    return q;
}

Matrix dequantize(const QuantBlockTensor& q) {
    const auto& kr = kernels::active();
    Matrix out(q.rows, q.cols);
    std::size_t gi = 0;
    for_each_group(q.rows, q.cols, q.config, [&](const GroupSpan& g) {
        const float scale = q.scales[gi];
        const float offset = q.config.mode == QuantMode::Unsigned ? q.offsets[gi] : 0.0f;
        ++gi;
        for (std::size_t r = g.r0; r < g.r1; ++r)
            kr.dequant_affine(q.codes.data() + r * q.cols + g.c0, g.c1 - g.c0, scale, offset, out.row(r) + g.c0);
    });
    return out;
}

IncoherenceReport incoherence_report(const AttnMap& map, const QuantConfig& cfg) {
    const auto& kr = kernels::active();
    QuantConfig grouping_cfg = cfg;
    grouping_cfg.block = cfg.grouping == QuantGrouping::PerBlock ? map.block : cfg.block;

    IncoherenceReport rep;
    rep.histogram.assign(12, 0);
    bool first = true;
    double total = 0.0;
    for_each_group(map.map.rows, map.map.cols, grouping_cfg, [&](const GroupSpan& g) {
        double mx = 0.0, sum = 0.0;
        for (std::size_t r = g.r0; r < g.r1; ++r) {
            const float* p = map.map.row(r) + g.c0;
            mx = std::max(mx, static_cast<double>(kr.max_abs(p, g.c1 - g.c0)));
            sum += kr.sum_abs(p, g.c1 - g.c0);
        }
        const double count = static_cast<double>((g.r1 - g.r0) * (g.c1 - g.c0));
        const double psi = mx == 0.0 ? 1.0 : mx / (sum / count);
        total += psi;
        rep.min = first ? psi : std::min(rep.min, psi);
        rep.max = first ? psi : std::max(rep.max, psi);
        first = false;
        auto bin = static_cast<std::size_t>(std::max(0.0, std::floor(std::log2(psi))));
        rep.histogram[std::min(bin, rep.histogram.size() - 1)]++;
        rep.groups++;
    });
    rep.mean = rep.groups ? total / static_cast<double>(rep.groups) : 0.0;
    return rep;
}

float round_to_fp8(float x, Fp8Format fmt) {
    if (std::isnan(x))
        return x;
    const int mant_bits = fmt == Fp8Format::E4M3 ? 3 : 2;
    const int bias = fmt == Fp8Format::E4M3 ? 7 : 15;
    const float max_finite = fmt == Fp8Format::E4M3 ? 448.0f : 57344.0f;

    const bool neg = std::signbit(x);
    double a = std::fabs(static_cast<double>(x));
    if (a == 0.0)
        return neg ? -0.0f : 0.0f;

    int k = 0;
    std::frexp(a, &k); // a = f * 2^k, f in [0.5, 1)
    const int e = k - 1;
    const int min_normal_exp = 1 - bias;
    const double quantum = std::ldexp(1.0, std::max(e, min_normal_exp) - mant_bits);

    double steps = a / quantum;
    double lo = std::floor(steps);
    double frac = steps - lo;
    double r;
    if (frac > 0.5)
        r = lo + 1.0;
    else if (frac < 0.5)
        r = lo;
    else
        r = (std::fmod(lo, 2.0) == 0.0) ? lo : lo + 1.0; // ties to even
    double out = r * quantum;

    if (out > max_finite) {
        // E5M2 keeps the IEEE infinity; E4M3 has none, so saturate
        out = fmt == Fp8Format::E5M2 ? std::numeric_limits<double>::infinity() : max_finite;
    }
    auto result = static_cast<float>(out);
    return neg ? -result : result;
}

namespace {

constexpr char kQuantMagic[4] = {'P', 'A', 'R', 'Q'};

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

void put_f32le(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32le(out, bits);
}

float get_f32le(const unsigned char* p) {
    std::uint32_t bits = get_u32le(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

} // namespace

void save_quant_tensor(const QuantBlockTensor& q, const std::string& path) {
    std::string out;
    out.append(kQuantMagic, 4);
    out.push_back(1); // version
    out.push_back(static_cast<char>(q.config.bits));
    out.push_back(static_cast<char>(q.config.mode));
    out.push_back(static_cast<char>(q.config.grouping));
    put_u32le(out, static_cast<std::uint32_t>(q.config.block));
    put_u32le(out, static_cast<std::uint32_t>(q.rows));
    put_u32le(out, static_cast<std::uint32_t>(q.cols));
    put_u32le(out, static_cast<std::uint32_t>(q.scales.size()));
    for (float s : q.scales)
        put_f32le(out, s);
    for (float o : q.offsets)
        put_f32le(out, o);
    if (q.config.bits == 8) {
        for (std::int32_t c : q.codes)
            out.push_back(static_cast<char>(c & 0xff));
    } else {
        for (std::size_t i = 0; i < q.codes.size(); i += 2) {
            unsigned lo = static_cast<unsigned>(q.codes[i]) & 0xf;
            unsigned hi = i + 1 < q.codes.size() ? static_cast<unsigned>(q.codes[i + 1]) & 0xf : 0;
            out.push_back(static_cast<char>(lo | (hi << 4)));
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open '" + path + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f)
        throw IoError("short write to '" + path + "'");
}

QuantBlockTensor load_quant_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + path + "' for reading");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 24)
        throw FormatError(path + ": truncated header (at byte offset " + std::to_string(bytes.size()) + ")");
    if (std::memcmp(p, kQuantMagic, 4) != 0)
        throw FormatError(path + ": bad magic, expected \"PARQ\" (at byte offset 0)");
    if (p[4] != 1)
        throw FormatError(path + ": unsupported version " + std::to_string(p[4]) + " (at byte offset 4)");

    QuantBlockTensor q;
    q.config.bits = p[5];
    if (p[6] > 1)
        throw FormatError(path + ": bad mode byte (at byte offset 6)");
    if (p[7] > 1)
        throw FormatError(path + ": bad grouping byte (at byte offset 7)");
    q.config.mode = static_cast<QuantMode>(p[6]);
    q.config.grouping = static_cast<QuantGrouping>(p[7]);
    q.config.block = get_u32le(p + 8);
    q.config.validate();
    q.rows = get_u32le(p + 12);
    q.cols = get_u32le(p + 16);
    const std::uint32_t ngroups = get_u32le(p + 20);
    if (ngroups != q.group_count())
        throw FormatError(path + ": group count " + std::to_string(ngroups) + " does not match shape (at byte offset 20)");

    std::size_t off = 24;
    auto need = [&](std::size_t n, const char* what) {
        if (bytes.size() < off + n)
            throw FormatError(path + ": truncated " + std::string(what) + " (at byte offset " + std::to_string(off) +
                              ")");
    };
    need(4u * ngroups, "scales");
    q.scales.resize(ngroups);
    for (std::uint32_t i = 0; i < ngroups; ++i, off += 4)
        q.scales[i] = get_f32le(p + off);
    if (q.config.mode == QuantMode::Unsigned) {
        need(4u * ngroups, "offsets");
        q.offsets.resize(ngroups);
        for (std::uint32_t i = 0; i < ngroups; ++i, off += 4)
            q.offsets[i] = get_f32le(p + off);
    }

    const std::size_t count = q.rows * q.cols;
    q.codes.resize(count);
    if (q.config.bits == 8) {
        need(count, "codes");
        for (std::size_t i = 0; i < count; ++i) {
            auto v = static_cast<std::int32_t>(p[off + i]);
            if (q.config.mode == QuantMode::Symmetric && v >= 128)
                v -= 256;
            q.codes[i] = v;
        }
        off += count;
    } else {
        const std::size_t packed = (count + 1) / 2;
        need(packed, "codes");
        for (std::size_t i = 0; i < count; ++i) {
            unsigned byte = p[off + i / 2];
            auto v = static_cast<std::int32_t>((i % 2 == 0) ? (byte & 0xf) : (byte >> 4));
            if (q.config.mode == QuantMode::Symmetric && v >= 8)
                v -= 16;
            q.codes[i] = v;
        }
        off += packed;
    }
    if (off != bytes.size())
        throw FormatError(path + ": " + std::to_string(bytes.size() - off) + " trailing bytes (at byte offset " +
                          std::to_string(off) + ")");
    return q;
}

} // namespace paro
