// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0
//
// Scalar/AVX2 equivalence. Element-wise ops must agree bit-for-bit; reductions
// may differ only by accumulation order.

#include <cmath>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "paro/error.hpp"
#include "paro/kernels.hpp"

using namespace paro;

namespace {

const kernels::Kernels& S() {
    return kernels::scalar();
}

std::vector<float> vec(std::size_t n, std::uint64_t seed, float lo = -2.0f, float hi = 2.0f) {
    std::uint64_t state = seed * 40503u + 3;
    std::vector<float> v(n);
    for (float& x : v)
        x = lo + (hi - lo) * oracle::test_value(state);
    return v;
}

// sizes that exercise full lanes, tails and tiny inputs
const std::size_t kSizes[] = {1, 2, 3, 7, 8, 9, 15, 16, 31, 64, 127, 1000};

} // namespace

TEST_CASE("scalar kernels match brute-force loops") {
    for (std::size_t n : kSizes) {
        auto a = vec(n, n), b = vec(n, n + 1);
        double dot = 0.0, sa = 0.0, ssd = 0.0, sad = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
            sa += std::fabs(static_cast<double>(a[i]));
            double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
            ssd += d * d;
            sad += std::fabs(d);
        }
        CHECK(S().dot(a.data(), b.data(), n) == doctest::Approx(dot).epsilon(1e-12));
        CHECK(S().sum_abs(a.data(), n) == doctest::Approx(sa).epsilon(1e-12));
        CHECK(S().sum_sq_diff(a.data(), b.data(), n) == doctest::Approx(ssd).epsilon(1e-12));
        CHECK(S().sum_abs_diff(a.data(), b.data(), n) == doctest::Approx(sad).epsilon(1e-12));
    }
}

TEST_CASE("avx2 kernels agree with scalar") {
    const kernels::Kernels* A = kernels::avx2();
    if (!A) {
        MESSAGE("AVX2 unavailable on this machine; skipping");
        return;
    }

    for (std::size_t n : kSizes) {
        auto a = vec(n, 11 * n + 1), b = vec(n, 13 * n + 5);

        // reductions: accumulation-order tolerance
        CHECK(A->dot(a.data(), b.data(), n) == doctest::Approx(S().dot(a.data(), b.data(), n)).epsilon(1e-12));
        CHECK(A->sum(a.data(), n) == doctest::Approx(S().sum(a.data(), n)).epsilon(1e-12));
        CHECK(A->sum_abs(a.data(), n) == doctest::Approx(S().sum_abs(a.data(), n)).epsilon(1e-12));
        CHECK(A->sum_sq_diff(a.data(), b.data(), n) ==
              doctest::Approx(S().sum_sq_diff(a.data(), b.data(), n)).epsilon(1e-12));
        CHECK(A->sum_abs_diff(a.data(), b.data(), n) ==
              doctest::Approx(S().sum_abs_diff(a.data(), b.data(), n)).epsilon(1e-12));

        // element-wise and order-free ops: exact
        CHECK(A->max_abs(a.data(), n) == S().max_abs(a.data(), n));
        float mn_s, mx_s, mn_a, mx_a;
        S().min_max(a.data(), n, &mn_s, &mx_s);
        A->min_max(a.data(), n, &mn_a, &mx_a);
        CHECK(mn_a == mn_s);
        CHECK(mx_a == mx_s);
        CHECK(A->count_abs_lt(a.data(), n, 0.5f) == S().count_abs_lt(a.data(), n, 0.5f));

        std::vector<double> acc_s(n, 0.25), acc_a(n, 0.25);
        S().axpy(acc_s.data(), 1.7, a.data(), n);
        A->axpy(acc_a.data(), 1.7, a.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(acc_a[i] == acc_s[i]);

        std::vector<std::int32_t> cs(n), ca(n);
        S().quant_affine(a.data(), n, -2.0f, 4.0f / 255.0f, 0, 255, cs.data());
        A->quant_affine(a.data(), n, -2.0f, 4.0f / 255.0f, 0, 255, ca.data());
        CHECK(cs == ca);
        std::vector<float> ds(n), da(n);
        S().dequant_affine(cs.data(), n, 4.0f / 255.0f, -2.0f, ds.data());
        A->dequant_affine(ca.data(), n, 4.0f / 255.0f, -2.0f, da.data());
        CHECK(ds == da);
    }
}

TEST_CASE("quantization rounding is half away from zero in both variants") {
    // adversarial values around .5 steps, including the float just below 0.5
    std::vector<float> xs = {0.5f,  1.5f,  2.5f,  -0.5f, -1.5f, -2.5f, 0.49999997f, -0.49999997f,
                             3.49f, 3.51f, -3.49f, -3.51f, 0.0f, -0.0f, 126.5f,      -126.5f};
    std::vector<std::int32_t> expected;
    for (float x : xs)
        expected.push_back(static_cast<std::int32_t>(std::round(x)));

    std::vector<std::int32_t> got(xs.size());
    S().quant_affine(xs.data(), xs.size(), 0.0f, 1.0f, -127, 127, got.data());
    CHECK(got == expected);

    if (const kernels::Kernels* A = kernels::avx2()) {
        std::vector<std::int32_t> gota(xs.size());
        A->quant_affine(xs.data(), xs.size(), 0.0f, 1.0f, -127, 127, gota.data());
        CHECK(gota == expected);
    }
}

TEST_CASE("kernel selection") {
    CHECK(kernels::parse_impl("scalar") == kernels::Impl::Scalar);
    CHECK(kernels::parse_impl("avx2") == kernels::Impl::Avx2);
    CHECK(kernels::parse_impl("auto") == kernels::Impl::Auto);
    CHECK_THROWS_AS(kernels::parse_impl("sse9"), ConfigError);

    kernels::select(kernels::Impl::Scalar);
    CHECK(std::string(kernels::active().name) == "scalar");
    kernels::select(kernels::Impl::Auto);
    if (kernels::avx2())
        CHECK(std::string(kernels::active().name) == "avx2");
}
