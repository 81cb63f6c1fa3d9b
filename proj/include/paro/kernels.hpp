// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace paro::kernels {

// Data-parallel inner loops shared by the attention engine, the metrics and
// the quantizer. The scalar implementations are the reference; the AVX2
// variants must match them bit-for-bit for element-wise ops (axpy, quant,
// dequant, min/max, counting) and to within accumulation-order rounding for
// reductions. See tests/test_kernels.cpp for the equivalence suite.
struct Kernels {
    const char* name;

    // sum_i a[i]*b[i], accumulated in binary64
    double (*dot)(const float* a, const float* b, std::size_t n);
    // acc[i] += w * x[i], element-wise in binary64 (mul then add, no fma)
    void (*axpy)(double* acc, double w, const float* x, std::size_t n);

    double (*sum)(const float* x, std::size_t n);
    double (*sum_abs)(const float* x, std::size_t n);
    float (*max_abs)(const float* x, std::size_t n);
    void (*min_max)(const float* x, std::size_t n, float* mn, float* mx);
    std::size_t (*count_abs_lt)(const float* x, std::size_t n, float bound);

    double (*sum_sq_diff)(const float* a, const float* b, std::size_t n);
    double (*sum_abs_diff)(const float* a, const float* b, std::size_t n);

    // codes[i] = clamp(round_half_away((x[i] - offset) / scale), qmin, qmax)
    void (*quant_affine)(const float* x, std::size_t n, float offset, float scale, std::int32_t qmin,
                         std::int32_t qmax, std::int32_t* codes);
    // out[i] = float(codes[i]) * scale + offset
    void (*dequant_affine)(const std::int32_t* codes, std::size_t n, float scale, float offset, float* out);
};

enum class Impl { Auto, Scalar, Avx2 };

const Kernels& scalar();
const Kernels* avx2(); // nullptr when not compiled in or not supported by the CPU

// Active set: chosen once from PARO_KERNELS (scalar|avx2|auto) or CPU probing;
// select() overrides it (throws ConfigError when the implementation is unavailable).
const Kernels& active();
void select(Impl impl);
Impl parse_impl(std::string_view name);

} // namespace paro::kernels
