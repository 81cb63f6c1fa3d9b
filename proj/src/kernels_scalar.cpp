// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include "paro/kernels.hpp"

#include <cmath>

namespace paro::kernels {
namespace {

double dot_scalar(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

void axpy_scalar(double* acc, double w, const float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        acc[i] += w * static_cast<double>(x[i]);
}

double sum_scalar(const float* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += static_cast<double>(x[i]);
    return acc;
}

double sum_abs_scalar(const float* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += std::fabs(static_cast<double>(x[i]));
    return acc;
}

float max_abs_scalar(const float* x, std::size_t n) {
    float m = 0.0f;
    for (std::size_t i = 0; i < n; ++i)
        m = std::max(m, std::fabs(x[i]));
    return m;
}

void min_max_scalar(const float* x, std::size_t n, float* mn, float* mx) {
    float lo = x[0], hi = x[0];
    for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
    }
    *mn = lo;
    *mx = hi;
}

std::size_t count_abs_lt_scalar(const float* x, std::size_t n, float bound) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (std::fabs(x[i]) < bound)
            ++c;
    return c;
}

double sum_sq_diff_scalar(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

double sum_abs_diff_scalar(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    return acc;
}

void quant_affine_scalar(const float* x, std::size_t n, float offset, float scale, std::int32_t qmin,
                         std::int32_t qmax, std::int32_t* codes) {
    for (std::size_t i = 0; i < n; ++i) {
        float q = (x[i] - offset) / scale;
        q = std::min(static_cast<float>(qmax), std::max(static_cast<float>(qmin), q));
        codes[i] = static_cast<std::int32_t>(std::round(q)); // half away from zero
    }
}

void dequant_affine_scalar(const std::int32_t* codes, std::size_t n, float scale, float offset, float* out) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<float>(codes[i]) * scale + offset;
}

} // namespace

const Kernels& scalar() {
    static const Kernels k = {
        "scalar",
        dot_scalar,
        axpy_scalar,
        sum_scalar,
        sum_abs_scalar,
        max_abs_scalar,
        min_max_scalar,
        count_abs_lt_scalar,
        sum_sq_diff_scalar,
        sum_abs_diff_scalar,
        quant_affine_scalar,
        dequant_affine_scalar,
    };
    return k;
}

} // namespace paro::kernels
