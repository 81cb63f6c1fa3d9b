// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <doctest.h>

#include "oracles.hpp"
#include "paro/error.hpp"
#include "paro/metrics.hpp"

using namespace paro;

namespace {

Matrix uniform_map(std::size_t n) {
    Matrix m(n, n);
    for (float& v : m.data)
        v = static_cast<float>(1.0 / static_cast<double>(n));
    return m;
}

Matrix identity_map(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m.at(i, i) = 1.0f;
    return m;
}

} // namespace

TEST_CASE("attention map row-sum validation") {
    CHECK_NOTHROW(AttnMap(uniform_map(64), 8));
    CHECK_NOTHROW(AttnMap(identity_map(64), 8));
    Matrix bad = uniform_map(16);
    bad.at(3, 3) += 0.25f;
    CHECK_THROWS_AS(AttnMap(bad, 4), InvariantError);
    CHECK_NOTHROW(AttnMap(bad, 4, /*relaxed=*/true));
    CHECK_THROWS_AS(AttnMap(Matrix(4, 5), 4, true), ShapeError);
}

TEST_CASE("block sums") {
    AttnMap uni(uniform_map(64), 8);
    BlockGrid sums = block_sums(uni);
    REQUIRE(sums.rows == 8);
    for (double v : sums.v)
        CHECK(v == doctest::Approx(1.0).epsilon(1e-12)); // 64 entries of 1/64 per block

    AttnMap ident(identity_map(64), 8);
    BlockGrid dsums = block_sums(ident);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j)
            CHECK(dsums.at(i, j) == doctest::Approx(i == j ? 8.0 : 0.0));

    // ragged edges and random values against the double-loop oracle
    for (std::size_t n : {13u, 64u, 100u}) {
        for (std::size_t b : {5u, 8u, 64u}) {
            Matrix m = oracle::random_map(n, n * b);
            AttnMap map(m, b, true);
            BlockGrid got = block_sums(map);
            auto want = oracle::naive_block_sums(m, b);
            double total = 0.0;
            for (std::size_t i = 0; i < got.rows; ++i)
                for (std::size_t j = 0; j < got.cols; ++j) {
                    CHECK(got.at(i, j) == doctest::Approx(want[i][j]).epsilon(1e-9));
                    total += got.at(i, j);
                }
            // block sums conserve the map's total mass
            double mass = 0.0;
            for (float v : m.data)
                mass += std::fabs(static_cast<double>(v));
            CHECK(std::fabs(total - mass) < 1e-6 * static_cast<double>(n));
        }
    }
}

TEST_CASE("sparse-block fraction") {
    MetricConfig cfg{8, 1e-3f, 0.9f, 0.5f};

    AttnMap zeros(Matrix(64, 64), 8, true);
    CHECK(m_sparse(zeros, cfg) == 1.0);

    // diagonal blocks of the identity map have 56/64 = 0.875 small entries,
    // just under sigma = 0.9, so exactly the 56 off-diagonal blocks count
    AttnMap ident(identity_map(64), 8);
    CHECK(m_sparse(ident, cfg) == 0.875);

    // uniform 1/64 entries sit above eps everywhere
    AttnMap uni(uniform_map(64), 8);
    CHECK(m_sparse(uni, cfg) == 0.0);

    // sigma exactly at the small-entry share counts as sparse (>=)
    MetricConfig at_sigma{8, 1e-3f, 0.875f, 0.5f};
    CHECK(m_sparse(ident, at_sigma) == 1.0);

    for (std::size_t n : {24u, 64u, 127u}) {
        Matrix m = oracle::random_map(n, 7 * n);
        for (std::size_t i = 0; i < m.data.size(); i += 3)
            m.data[i] = 0.0f; // sprinkle small entries
        AttnMap map(m, 8, true);
        for (float sigma : {0.25f, 0.5f, 0.9f}) {
            MetricConfig c{8, 1e-2f, sigma, 0.5f};
            CHECK(m_sparse(map, c) == doctest::Approx(oracle::naive_m_sparse(m, 8, 1e-2, sigma)).epsilon(1e-12));
        }
        // monotone: non-increasing in sigma, non-decreasing in eps
        MetricConfig lo{8, 1e-2f, 0.3f, 0.5f}, hi{8, 1e-2f, 0.8f, 0.5f};
        CHECK(m_sparse(map, hi) <= m_sparse(map, lo));
        MetricConfig eps_lo{8, 1e-4f, 0.5f, 0.5f}, eps_hi{8, 1e-1f, 0.5f, 0.5f};
        CHECK(m_sparse(map, eps_lo) <= m_sparse(map, eps_hi));
    }
}

TEST_CASE("incoherence") {
    std::vector<float> constant(17, 0.42f);
    CHECK(incoherence(constant) == 1.0);

    std::vector<float> spike(64, 0.0f);
    spike[13] = 1.0f;
    CHECK(incoherence(spike) == 64.0); // 1 / (1/64)

    std::vector<float> zeros(9, 0.0f);
    CHECK(incoherence(zeros) == 1.0);
    CHECK_THROWS_AS(incoherence(std::span<const float>{}), InputError);

    // scale invariance: exact for power-of-two factors
    std::vector<float> xs = {0.1f, -0.7f, 0.3f, 0.9f, -0.2f};
    double base = incoherence(xs);
    for (float c : {2.0f, 0.25f, 1024.0f}) {
        std::vector<float> scaled;
        for (float x : xs)
            scaled.push_back(c * x);
        CHECK(incoherence(scaled) == base);
    }
    std::vector<float> scaled37;
    for (float x : xs)
        scaled37.push_back(3.7f * x);
    CHECK(incoherence(scaled37) == doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("mean block incoherence") {
    MetricConfig cfg{8, 1e-3f, 0.9f, 0.5f};
    CHECK(m_quant(AttnMap(uniform_map(64), 8), cfg) == 1.0);

    // block-diagonal map with constant blocks: every tile is constant or zero
    Matrix bd(64, 64);
    for (std::size_t i = 0; i < 64; ++i)
        for (std::size_t j = (i / 8) * 8; j < (i / 8) * 8 + 8; ++j)
            bd.at(i, j) = 0.125f;
    CHECK(m_quant(AttnMap(bd, 8), cfg) == 1.0);

    for (std::size_t n : {24u, 64u, 127u}) {
        Matrix m = oracle::random_map(n, 7919 * n);
        AttnMap map(m, 8, true);
        CHECK(m_quant(map, cfg) == doctest::Approx(oracle::naive_m_quant(m, 8)).epsilon(1e-9));
    }
}

TEST_CASE("map similarity") {
    Matrix a = oracle::random_map(32, 5);
    SimilarityResult self = map_similarity(a, a);
    CHECK(self.cosine == 1.0);
    CHECK(self.l1 == 0.0);
    CHECK(self.rmse == 0.0);

    // identity vs uniform has closed-form cosine 1/sqrt(N)
    const std::size_t n = 64;
    Matrix ident = identity_map(n);
    Matrix uni = uniform_map(n);
    SimilarityResult s = map_similarity(ident, uni);
    CHECK(s.cosine == doctest::Approx(1.0 / std::sqrt(static_cast<double>(n))).epsilon(1e-9));
    CHECK(s.cosine == doctest::Approx(oracle::naive_cosine(ident, uni)).epsilon(1e-12));

    Matrix b = oracle::random_map(32, 6);
    SimilarityResult r = map_similarity(a, b);
    CHECK(r.cosine == doctest::Approx(oracle::naive_cosine(a, b)).epsilon(1e-9));
    CHECK(r.l1 == doctest::Approx(oracle::naive_l1(a, b)).epsilon(1e-9));
    CHECK(r.rmse == doctest::Approx(oracle::naive_rmse(a, b)).epsilon(1e-9));

    // symmetry
    SimilarityResult rr = map_similarity(b, a);
    CHECK(r.cosine == doctest::Approx(rr.cosine).epsilon(1e-12));
    CHECK(r.l1 == doctest::Approx(rr.l1).epsilon(1e-12));
    CHECK(r.rmse == doctest::Approx(rr.rmse).epsilon(1e-12));

    CHECK_THROWS_AS(map_similarity(a, Matrix(31, 32)), ShapeError);
}

TEST_CASE("metric config validation") {
    MetricConfig bad{0, 1e-3f, 0.9f, 0.5f};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS((MetricConfig{8, 0.0f, 0.9f, 0.5f}).validate(), ConfigError);
    CHECK_THROWS_AS((MetricConfig{8, 1e-3f, 1.5f, 0.5f}).validate(), ConfigError);
    CHECK_THROWS_AS((MetricConfig{8, 1e-3f, 0.9f, -0.1f}).validate(), ConfigError);
    CHECK_NOTHROW((MetricConfig{}).validate());
}
