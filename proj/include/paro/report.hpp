// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "paro/attention.hpp"
#include "paro/mask.hpp"
#include "paro/metrics.hpp"
#include "paro/tensor.hpp"

namespace paro {

// 10 log10(R^2 / MSE) with R = max(ref) - min(ref). Identical inputs give
// +infinity (written as the "inf" sentinel in CSV). Directional: ref fixes R.
double psnr(const Matrix& ref, const Matrix& test);

struct SweepRow {
    std::string label;
    double knob; // density or bitwidth
    double psnr_db;
    double cosine;
    double l1;
    double rmse;
    double retained_mass;
    std::size_t repaired_rows;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

// psnr/cosine/l1/rmse of `test` against `ref` packed into a row.
SweepRow compare_row(const std::string& label, double knob, const Matrix& ref, const Matrix& test,
                     double retained_mass, std::size_t repaired_rows);

// For each density (ascending): build a mask from the mean calibration block
// sums, run the masked path on `in`, and score it against the unmasked
// streaming output (so the density-1.0 row is exact and reports the inf
// sentinel). retained_mass comes from the dense attention map of `in`.
SweepResult density_sweep(const AttnInputs& in, const std::vector<Matrix>& calib, std::vector<double> densities,
                          const MetricConfig& cfg, const std::string& label = "sparse");

// RFC-4180-style CSV, fixed header
//   label,knob,psnr_db,cosine,l1,rmse,retained_mass,repaired_rows
// 6 significant digits, "inf" sentinel, deterministic bytes.
void emit_csv(const SweepResult& result, const std::string& path);
std::string to_csv(const SweepResult& result);

} // namespace paro
