// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include "paro/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include <bit>
#include <cmath>

namespace paro::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swap = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

inline float hmax(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_max_ps(lo, hi);
    lo = _mm_max_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_max_ss(lo, _mm_shuffle_ps(lo, lo, 1));
    return _mm_cvtss_f32(lo);
}

inline float hmin(__m128 lo4, __m128 hi4) {
    __m128 lo = _mm_min_ps(lo4, hi4);
    lo = _mm_min_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_min_ss(lo, _mm_shuffle_ps(lo, lo, 1));
    return _mm_cvtss_f32(lo);
}

const __m256 kAbsMask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff));
const __m256 kSignMask = _mm256_castsi256_ps(_mm256_set1_epi32(static_cast<int>(0x80000000u)));

double dot_avx2(const float* a, const float* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 av = _mm256_loadu_ps(a + i);
        __m256 bv = _mm256_loadu_ps(b + i);
        __m256d alo = _mm256_cvtps_pd(_mm256_castps256_ps128(av));
        __m256d ahi = _mm256_cvtps_pd(_mm256_extractf128_ps(av, 1));
        __m256d blo = _mm256_cvtps_pd(_mm256_castps256_ps128(bv));
        __m256d bhi = _mm256_cvtps_pd(_mm256_extractf128_ps(bv, 1));
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(alo, blo));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(ahi, bhi));
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

void axpy_avx2(double* acc, double w, const float* x, std::size_t n) {
    __m256d wv = _mm256_set1_pd(w);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        __m256d av = _mm256_loadu_pd(acc + i);
        _mm256_storeu_pd(acc + i, _mm256_add_pd(av, _mm256_mul_pd(wv, xv)));
    }
    for (; i < n; ++i)
        acc[i] += w * static_cast<double>(x[i]);
}

double sum_avx2(const float* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        acc += static_cast<double>(x[i]);
    return acc;
}

double sum_abs_avx2(const float* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_and_ps(_mm256_loadu_ps(x + i), kAbsMask);
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        acc += std::fabs(static_cast<double>(x[i]));
    return acc;
}

float max_abs_avx2(const float* x, std::size_t n) {
    __m256 m = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        m = _mm256_max_ps(m, _mm256_and_ps(_mm256_loadu_ps(x + i), kAbsMask));
    float r = hmax(m);
    for (; i < n; ++i)
        r = std::max(r, std::fabs(x[i]));
    return r;
}

void min_max_avx2(const float* x, std::size_t n, float* mn, float* mx) {
    float lo = x[0], hi = x[0];
    std::size_t i = 0;
    if (n >= 8) {
        __m256 vlo = _mm256_loadu_ps(x);
        __m256 vhi = vlo;
        for (i = 8; i + 8 <= n; i += 8) {
            __m256 v = _mm256_loadu_ps(x + i);
            vlo = _mm256_min_ps(vlo, v);
            vhi = _mm256_max_ps(vhi, v);
        }
        lo = hmin(_mm256_castps256_ps128(vlo), _mm256_extractf128_ps(vlo, 1));
        hi = hmax(vhi);
    }
    for (; i < n; ++i) {
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
    }
    *mn = lo;
    *mx = hi;
}

std::size_t count_abs_lt_avx2(const float* x, std::size_t n, float bound) {
    __m256 bv = _mm256_set1_ps(bound);
    std::size_t c = 0;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_and_ps(_mm256_loadu_ps(x + i), kAbsMask);
        __m256 lt = _mm256_cmp_ps(v, bv, _CMP_LT_OQ);
        c += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(_mm256_movemask_ps(lt))));
    }
    for (; i < n; ++i)
        if (std::fabs(x[i]) < bound)
            ++c;
    return c;
}

double sum_sq_diff_avx2(const float* a, const float* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 av = _mm256_loadu_ps(a + i);
        __m256 bv = _mm256_loadu_ps(b + i);
        __m256d dlo = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(av)),
                                    _mm256_cvtps_pd(_mm256_castps256_ps128(bv)));
        __m256d dhi = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(av, 1)),
                                    _mm256_cvtps_pd(_mm256_extractf128_ps(bv, 1)));
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(dlo, dlo));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(dhi, dhi));
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

double sum_abs_diff_avx2(const float* a, const float* b, std::size_t n) {
    const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 av = _mm256_loadu_ps(a + i);
        __m256 bv = _mm256_loadu_ps(b + i);
        __m256d dlo = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(av)),
                                    _mm256_cvtps_pd(_mm256_castps256_ps128(bv)));
        __m256d dhi = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(av, 1)),
                                    _mm256_cvtps_pd(_mm256_extractf128_ps(bv, 1)));
        acc0 = _mm256_add_pd(acc0, _mm256_and_pd(dlo, absmask));
        acc1 = _mm256_add_pd(acc1, _mm256_and_pd(dhi, absmask));
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        acc += std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    return acc;
}

// round-half-away-from-zero, matching std::round bit-for-bit
inline __m256 round_half_away(__m256 q) {
    __m256 t = _mm256_round_ps(q, _MM_FROUND_TO_ZERO | _MM_FROUND_NO_EXC);
    __m256 frac = _mm256_and_ps(_mm256_sub_ps(q, t), kAbsMask);
    __m256 ge_half = _mm256_cmp_ps(frac, _mm256_set1_ps(0.5f), _CMP_GE_OQ);
    __m256 step = _mm256_or_ps(_mm256_set1_ps(1.0f), _mm256_and_ps(q, kSignMask));
    return _mm256_add_ps(t, _mm256_and_ps(ge_half, step));
}

void quant_affine_avx2(const float* x, std::size_t n, float offset, float scale, std::int32_t qmin,
                       std::int32_t qmax, std::int32_t* codes) {
    __m256 off = _mm256_set1_ps(offset);
    __m256 sc = _mm256_set1_ps(scale);
    __m256 lo = _mm256_set1_ps(static_cast<float>(qmin));
    __m256 hi = _mm256_set1_ps(static_cast<float>(qmax));
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 q = _mm256_div_ps(_mm256_sub_ps(_mm256_loadu_ps(x + i), off), sc);
        q = _mm256_min_ps(hi, _mm256_max_ps(lo, q));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(codes + i), _mm256_cvttps_epi32(round_half_away(q)));
    }
    for (; i < n; ++i) {
        float q = (x[i] - offset) / scale;
        q = std::min(static_cast<float>(qmax), std::max(static_cast<float>(qmin), q));
        codes[i] = static_cast<std::int32_t>(std::round(q));
    }
}

void dequant_affine_avx2(const std::int32_t* codes, std::size_t n, float scale, float offset, float* out) {
    __m256 sc = _mm256_set1_ps(scale);
    __m256 off = _mm256_set1_ps(offset);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_cvtepi32_ps(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(codes + i)));
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_mul_ps(v, sc), off));
    }
    for (; i < n; ++i)
        out[i] = static_cast<float>(codes[i]) * scale + offset;
}

} // namespace

const Kernels* avx2_table() {
    static const Kernels k = {
        "avx2",
        dot_avx2,
        axpy_avx2,
        sum_avx2,
        sum_abs_avx2,
        max_abs_avx2,
        min_max_avx2,
        count_abs_lt_avx2,
        sum_sq_diff_avx2,
        sum_abs_diff_avx2,
        quant_affine_avx2,
        dequant_affine_avx2,
    };
    return &k;
}

} // namespace paro::kernels

#else // !__AVX2__

namespace paro::kernels {
const Kernels* avx2_table() {
    return nullptr;
}
} // namespace paro::kernels

#endif
