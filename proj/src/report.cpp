// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include "paro/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "paro/error.hpp"
#include "paro/kernels.hpp"

namespace paro {

double psnr(const Matrix& ref, const Matrix& test) {
    if (!ref.same_shape(test))
        throw ShapeError("psnr: shape mismatch");
    const auto& kr = kernels::active();
    const double mse = kr.sum_sq_diff(ref.data.data(), test.data.data(), ref.size()) / static_cast<double>(ref.size());
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    float mn, mx;
    kr.min_max(ref.data.data(), ref.size(), &mn, &mx);
    const double range = static_cast<double>(mx) - static_cast<double>(mn);
    return 10.0 * std::log10(range * range / mse);
}

SweepRow compare_row(const std::string& label, double knob, const Matrix& ref, const Matrix& test,
                     double retained_mass, std::size_t repaired_rows) {
    SimilarityResult sim = map_similarity(ref, test);
    SweepRow row;
    row.label = label;
    row.knob = knob;
    row.psnr_db = psnr(ref, test);
    row.cosine = sim.cosine;
    row.l1 = sim.l1;
    row.rmse = sim.rmse;
    row.retained_mass = retained_mass;
    row.repaired_rows = repaired_rows;
    return row;
}

SweepResult density_sweep(const AttnInputs& in, const std::vector<Matrix>& calib, std::vector<double> densities,
                          const MetricConfig& cfg, const std::string& label) {
    if (densities.empty())
        throw InputError("density_sweep: empty density list");
    cfg.validate();
    std::sort(densities.begin(), densities.end());

    BlockGrid mean;
    for (const Matrix& m : calib) {
        AttnMap map(m, cfg.block, /*relaxed=*/true);
        BlockGrid sums = block_sums(map);
        if (mean.rows == 0)
            mean = BlockGrid(sums.rows, sums.cols);
        for (std::size_t i = 0; i < sums.v.size(); ++i)
            mean.v[i] += sums.v[i];
    }
    if (mean.rows == 0)
        throw InputError("density_sweep: empty calibration set");
    for (double& v : mean.v)
        v /= static_cast<double>(calib.size());

    const AttnResult reference = blocked_attention_stream(in, cfg.block);
    const AttnResult exact = dense_attention(in, /*want_map=*/true);
    const AttnMap true_map(*exact.attn_map, cfg.block, /*relaxed=*/true);
    const std::size_t guard = (in.dense_prefix + cfg.block - 1) / cfg.block;

    SweepResult out;
    for (double density : densities) {
        MaskGenResult gen = gen_mask(mean, density, cfg.block, guard);
        AttnResult masked = masked_blocked_attention(in, gen.mask);
        const double retained = mask_quality(true_map, gen.mask).retained_mass;
        out.rows.push_back(
            compare_row(label, density, reference.output, masked.output, retained, gen.repaired_rows));
    }
    return out;
}

namespace {

std::string fmt_metric(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace

std::string to_csv(const SweepResult& result) {
    std::string out = "label,knob,psnr_db,cosine,l1,rmse,retained_mass,repaired_rows\n";
    for (const SweepRow& r : result.rows) {
        out += r.label;
        out += ',';
        out += fmt_metric(r.knob);
        out += ',';
        out += fmt_metric(r.psnr_db);
        out += ',';
        out += fmt_metric(r.cosine);
        out += ',';
        out += fmt_metric(r.l1);
        out += ',';
        out += fmt_metric(r.rmse);
        out += ',';
        out += fmt_metric(r.retained_mass);
        out += ',';
        out += std::to_string(r.repaired_rows);
        out += '\n';
    }
    return out;
}

void emit_csv(const SweepResult& result, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open '" + path + "' for writing");
    const std::string text = to_csv(result);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f)
        throw IoError("short write to '" + path + "'");
}

} // namespace paro
