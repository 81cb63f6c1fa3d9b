// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include "paro/mask.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "paro/error.hpp"
#include "paro/kernels.hpp"

namespace paro {

BlockMask::BlockMask(std::size_t kr, std::size_t kc, std::size_t b, bool value)
    : k_rows(kr), k_cols(kc), block(b), bits(kr * kc, value ? 1 : 0) {}

std::size_t BlockMask::popcount() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

double BlockMask::density() const {
    return static_cast<double>(popcount()) / static_cast<double>(k_rows * k_cols);
}

bool BlockMask::is_subset_of(const BlockMask& other) const {
    if (k_rows != other.k_rows || k_cols != other.k_cols)
        return false;
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i] && !other.bits[i])
            return false;
    return true;
}

namespace {

struct BlockRef {
    double sum;
    std::uint32_t row;
    std::uint32_t col;
};

// keep-preference: larger sum first, then lexicographically smaller (row, col)
bool keep_before(const BlockRef& a, const BlockRef& b) {
    if (a.sum != b.sum)
        return a.sum > b.sum;
    if (a.row != b.row)
        return a.row < b.row;
    return a.col < b.col;
}

} // namespace

MaskGenResult gen_mask(const BlockGrid& sums, double density, std::size_t block, std::size_t guard_blocks) {
    if (!(density > 0.0 && density <= 1.0))
        throw ConfigError("density must be in (0,1], got " + std::to_string(density));
    const std::size_t kr = sums.rows;
    const std::size_t kc = sums.cols;
    const std::size_t total = kr * kc;
    const auto target = static_cast<std::size_t>(std::ceil(density * static_cast<double>(total)));

    auto guarded = [&](std::size_t i, std::size_t j) { return i < guard_blocks || j < guard_blocks; };
    std::size_t guard_count = 0;
    if (guard_blocks > 0) {
        const std::size_t gr = std::min(guard_blocks, kr);
        const std::size_t gc = std::min(guard_blocks, kc);
        guard_count = total - (kr - gr) * (kc - gc);
    }
    if (guard_count > target)
        throw ConfigError("density " + std::to_string(density) + " keeps " + std::to_string(target) +
                          " blocks but the dense prefix alone occupies " + std::to_string(guard_count));
    if (guard_blocks == 0 && target < kr)
        throw ConfigError("density " + std::to_string(density) + " keeps " + std::to_string(target) +
                          " blocks, fewer than the " + std::to_string(kr) + " rows that each need one");

    std::vector<BlockRef> candidates;
    candidates.reserve(total - guard_count);
    for (std::size_t i = 0; i < kr; ++i)
        for (std::size_t j = 0; j < kc; ++j)
            if (!guarded(i, j))
                candidates.push_back({sums.at(i, j), static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
    std::sort(candidates.begin(), candidates.end(), keep_before);

    MaskGenResult res;
    res.mask = BlockMask(kr, kc, block, false);
    for (std::size_t i = 0; i < kr; ++i)
        for (std::size_t j = 0; j < kc; ++j)
            if (guarded(i, j))
                res.mask.set(i, j, true);
    for (std::size_t c = 0; c < target - guard_count; ++c)
        res.mask.set(candidates[c].row, candidates[c].col, true);

    // degenerate-row repair: a query row with every block skipped would have
    // an undefined output, so re-enable its best block and drop the weakest
    // kept block from a row that can spare one
    std::vector<std::size_t> row_kept(kr, 0);
    for (std::size_t i = 0; i < kr; ++i)
        for (std::size_t j = 0; j < kc; ++j)
            if (res.mask.get(i, j))
                ++row_kept[i];

    for (std::size_t i = 0; i < kr; ++i) {
        if (row_kept[i] > 0)
            continue;
        std::size_t best = 0;
        for (std::size_t j = 1; j < kc; ++j)
            if (sums.at(i, j) > sums.at(i, best))
                best = j;
        res.mask.set(i, best, true);
        ++row_kept[i];
        ++res.repaired_rows;

        bool dropped = false;
        for (std::size_t c = candidates.size(); c-- > 0;) { // reverse keep-preference
            const BlockRef& cb = candidates[c];
            if (res.mask.get(cb.row, cb.col) && row_kept[cb.row] >= 2) {
                res.mask.set(cb.row, cb.col, false);
                --row_kept[cb.row];
                dropped = true;
                break;
            }
        }
        if (!dropped)
            throw ConfigError("cannot repair empty mask row " + std::to_string(i) + " at density " +
                              std::to_string(density));
    }
    return res;
}

const BlockMask& MaskSchedule::at(std::uint32_t t) const {
    if (t >= timesteps)
        throw InputError("timestep " + std::to_string(t) + " out of range, schedule covers " +
                         std::to_string(timesteps));
    const std::uint32_t half = timesteps / 2;
    if (t < half)
        return distinct[t].second;
    return shared;
}

MaskSchedule build_schedule(const std::vector<BlockGrid>& calib, double density, std::uint32_t timesteps,
                            std::size_t block, std::size_t guard_blocks) {
    if (timesteps < 1)
        throw ConfigError("schedule needs at least one timestep");
    if (calib.size() != timesteps)
        throw InputError("calibration covers " + std::to_string(calib.size()) + " timesteps, schedule needs " +
                         std::to_string(timesteps));
    for (const BlockGrid& g : calib)
        if (g.rows != calib[0].rows || g.cols != calib[0].cols)
            throw ShapeError("calibration block-sum grids disagree in shape");

    MaskSchedule s;
    s.timesteps = timesteps;
    const std::uint32_t half = timesteps / 2;
    for (std::uint32_t t = 0; t < half; ++t) {
        MaskGenResult r = gen_mask(calib[t], density, block, guard_blocks);
        s.repaired_rows += r.repaired_rows;
        s.distinct.emplace_back(t, std::move(r.mask));
    }
    BlockGrid mean(calib[0].rows, calib[0].cols);
    for (std::uint32_t t = half; t < timesteps; ++t)
        for (std::size_t i = 0; i < mean.v.size(); ++i)
            mean.v[i] += calib[t].v[i];
    const double late = static_cast<double>(timesteps - half);
    for (double& v : mean.v)
        v /= late;
    MaskGenResult r = gen_mask(mean, density, block, guard_blocks);
    s.repaired_rows += r.repaired_rows;
    s.shared = std::move(r.mask);
    return s;
}

namespace {

constexpr char kMaskMagic[4] = {'P', 'M', 'S', 'K'};
constexpr char kSchedMagic[4] = {'P', 'S', 'C', 'H'};

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

} // namespace

std::size_t unpadded_mask_bytes(std::size_t k_rows, std::size_t k_cols) {
    return (k_rows * k_cols + 7) / 8;
}

std::vector<std::uint8_t> serialize_mask(const BlockMask& m) {
    std::vector<std::uint8_t> out;
    const std::size_t row_bytes = (m.k_cols + 7) / 8;
    out.reserve(18 + m.k_rows * row_bytes);
    out.insert(out.end(), kMaskMagic, kMaskMagic + 4);
    out.push_back(1); // version
    out.push_back(0); // reserved
    put_u32le(out, static_cast<std::uint32_t>(m.k_rows));
    put_u32le(out, static_cast<std::uint32_t>(m.k_cols));
    put_u32le(out, static_cast<std::uint32_t>(m.block));
    for (std::size_t i = 0; i < m.k_rows; ++i) {
        std::size_t base = out.size();
        out.resize(base + row_bytes, 0);
        for (std::size_t j = 0; j < m.k_cols; ++j)
            if (m.get(i, j))
                out[base + j / 8] |= static_cast<std::uint8_t>(1u << (j % 8)); // LSB first
    }
    return out;
}

BlockMask deserialize_mask(const std::uint8_t* data, std::size_t size, std::size_t* consumed) {
    if (size < 18)
        throw FormatError("mask blob truncated: need 18 header bytes, have " + std::to_string(size));
    if (std::memcmp(data, kMaskMagic, 4) != 0)
        throw FormatError("bad mask magic, expected \"PMSK\" (at byte offset 0)");
    if (data[4] != 1)
        throw FormatError("unsupported mask version " + std::to_string(data[4]) + " (at byte offset 4)");
    const std::uint32_t kr = get_u32le(data + 6);
    const std::uint32_t kc = get_u32le(data + 10);
    const std::uint32_t block = get_u32le(data + 14);
    if (kr == 0 || kc == 0 || block == 0)
        throw FormatError("mask dimensions must be nonzero");
    const std::size_t row_bytes = (kc + 7) / 8;
    const std::size_t need = 18 + static_cast<std::size_t>(kr) * row_bytes;
    if (size < need)
        throw FormatError("mask blob truncated: need " + std::to_string(need) + " bytes, have " +
                          std::to_string(size));

    BlockMask m(kr, kc, block, false);
    for (std::size_t i = 0; i < kr; ++i) {
        const std::uint8_t* row = data + 18 + i * row_bytes;
        for (std::size_t j = 0; j < kc; ++j)
            m.set(i, j, (row[j / 8] >> (j % 8)) & 1u);
    }
    if (consumed)
        *consumed = need;
    return m;
}

void save_schedule(const MaskSchedule& s, const std::string& path) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kSchedMagic, kSchedMagic + 4);
    put_u32le(out, s.timesteps);
    put_u32le(out, static_cast<std::uint32_t>(s.distinct.size()));
    for (const auto& [t, mask] : s.distinct) {
        put_u32le(out, t);
        std::vector<std::uint8_t> blob = serialize_mask(mask);
        out.insert(out.end(), blob.begin(), blob.end());
    }
    std::vector<std::uint8_t> blob = serialize_mask(s.shared);
    out.insert(out.end(), blob.begin(), blob.end());

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f)
        throw IoError("short write to '" + path + "'");
}

MaskSchedule load_schedule(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + path + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12)
        throw FormatError(path + ": truncated schedule header (at byte offset " + std::to_string(bytes.size()) + ")");
    if (std::memcmp(bytes.data(), kSchedMagic, 4) != 0)
        throw FormatError(path + ": bad magic, expected \"PSCH\" (at byte offset 0)");

    MaskSchedule s;
    s.timesteps = get_u32le(bytes.data() + 4);
    const std::uint32_t n_distinct = get_u32le(bytes.data() + 8);
    if (n_distinct != s.timesteps / 2)
        throw FormatError(path + ": schedule declares " + std::to_string(n_distinct) + " distinct masks, expected " +
                          std::to_string(s.timesteps / 2));
    std::size_t off = 12;
    try {
        for (std::uint32_t i = 0; i < n_distinct; ++i) {
            if (bytes.size() < off + 4)
                throw FormatError("truncated distinct entry");
            std::uint32_t t = get_u32le(bytes.data() + off);
            off += 4;
            std::size_t consumed = 0;
            BlockMask m = deserialize_mask(bytes.data() + off, bytes.size() - off, &consumed);
            off += consumed;
            s.distinct.emplace_back(t, std::move(m));
        }
        std::size_t consumed = 0;
        s.shared = deserialize_mask(bytes.data() + off, bytes.size() - off, &consumed);
        off += consumed;
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what() + " (schedule parse position " + std::to_string(off) + ")");
    }
    if (off != bytes.size())
        throw FormatError(path + ": " + std::to_string(bytes.size() - off) + " trailing bytes (at byte offset " +
                          std::to_string(off) + ")");
    return s;
}

MaskQuality mask_quality(const AttnMap& map, const BlockMask& mask) {
    const std::size_t n = map.tokens();
    const std::size_t k = map.blocks_per_side();
    if (mask.k_rows != k || mask.k_cols != k || mask.block != map.block)
        throw ShapeError("mask grid " + std::to_string(mask.k_rows) + "x" + std::to_string(mask.k_cols) + "/b=" +
                         std::to_string(mask.block) + " does not cover the map (" + std::to_string(k) + "x" +
                         std::to_string(k) + "/b=" + std::to_string(map.block) + ")");

    const auto& kr = kernels::active();
    Matrix masked = map.map;
    double total = 0.0, kept = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t bi = i / map.block;
        float* row = masked.row(i);
        double row_kept = 0.0, row_dropped = 0.0;
        for (std::size_t bj = 0; bj < k; ++bj) {
            const std::size_t c0 = bj * map.block;
            const std::size_t c1 = std::min(n, c0 + map.block);
            if (mask.get(bi, bj)) {
                row_kept += kr.sum_abs(row + c0, c1 - c0);
            } else {
                row_dropped += kr.sum_abs(row + c0, c1 - c0);
                std::memset(row + c0, 0, (c1 - c0) * sizeof(float));
            }
        }
        total += row_kept + row_dropped;
        kept += row_kept;
        // renormalize only when the row actually lost mass, so a lossless mask
        // leaves the map bit-identical
        if (row_dropped > 0.0 && row_kept > 0.0) {
            const double inv = 1.0 / row_kept;
            for (std::size_t j = 0; j < n; ++j)
                row[j] = static_cast<float>(row[j] * inv);
        }
    }

    SimilarityResult sim = map_similarity(map.map, masked);
    MaskQuality q;
    q.l1 = sim.l1;
    q.rmse = sim.rmse;
    q.cosine = sim.cosine;
    q.retained_mass = total > 0.0 ? kept / total : 1.0;
    return q;
}

} // namespace paro
