#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mixdg/kernels.hpp"
#include "mixdg/rng.hpp"
#include "oracles.hpp"

using namespace mixdg;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal(0.0, 1.0);
    return v;
}

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-12});
}

}  // namespace

TEST_CASE("scalar kernels match straight-line oracles") {
    const auto& k = kernels::scalar_table();
    Rng rng(11);
    for (std::size_t n : {1u, 3u, 4u, 7u, 16u, 33u}) {
        const auto a = random_vec(n, rng);
        const auto b = random_vec(n, rng);
        CHECK(rel_err(k.dot(a.data(), b.data(), n), oracles::dot(a, b)) < 1e-13);
    }
    // matmul vs ijk oracle
    const std::size_t m = 5, kk = 7, n = 6;
    const auto a = random_vec(m * kk, rng);
    const auto b = random_vec(kk * n, rng);
    std::vector<double> c(m * n);
    k.matmul_nn(a.data(), b.data(), c.data(), m, kk, n);
    const auto ref = oracles::matmul(a, b, m, kk, n);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(rel_err(c[i], ref[i]) < 1e-12);
}

TEST_CASE("matmul transpose variants agree with explicit transposition") {
    const auto& k = kernels::scalar_table();
    Rng rng(12);
    const std::size_t m = 4, p = 5, n = 3;

    // tn: C = A^T B with A (p x m)
    const auto a = random_vec(p * m, rng);
    const auto b = random_vec(p * n, rng);
    std::vector<double> at(m * p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < m; ++j) at[j * p + i] = a[i * m + j];
    }
    std::vector<double> c(m * n);
    k.matmul_tn(a.data(), b.data(), c.data(), m, p, n);
    const auto ref = oracles::matmul(at, b, m, p, n);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(rel_err(c[i], ref[i]) < 1e-12);

    // nt: C = A B^T with B (n x p)
    const auto a2 = random_vec(m * p, rng);
    const auto b2 = random_vec(n * p, rng);
    std::vector<double> b2t(p * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) b2t[j * n + i] = b2[i * p + j];
    }
    std::vector<double> c2(m * n);
    k.matmul_nt(a2.data(), b2.data(), c2.data(), m, p, n);
    const auto ref2 = oracles::matmul(a2, b2t, m, p, n);
    for (std::size_t i = 0; i < c2.size(); ++i) CHECK(rel_err(c2[i], ref2[i]) < 1e-12);
}

TEST_CASE("avx2 kernels agree with scalar kernels" *
          doctest::skip(!kernels::avx2_supported())) {
    const auto* avx = kernels::avx2_table_if_available();
    REQUIRE(avx != nullptr);
    const auto& ref = kernels::scalar_table();
    Rng rng(13);

    // Sizes straddling the vector width to exercise the remainder loops.
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 8u, 9u, 15u, 16u, 17u, 64u, 100u, 257u}) {
        const auto a = random_vec(n, rng);
        const auto b = random_vec(n, rng);

        CHECK(rel_err(avx->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n)) < 1e-13);
        CHECK(rel_err(avx->sum(a.data(), n), ref.sum(a.data(), n)) < 1e-12);

        std::vector<double> y1 = b, y2 = b;
        avx->axpy(0.37, a.data(), y1.data(), n);
        ref.axpy(0.37, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(y1[i], y2[i]) < 1e-14);

        std::vector<double> s1 = a, s2 = a;
        avx->scale(-1.7, s1.data(), n);
        ref.scale(-1.7, s2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(s1[i] == s2[i]);  // pure elementwise mul

        std::vector<double> r1(n), r2(n), d1(n), d2(n);
        avx->relu_fwd(a.data(), r1.data(), n);
        ref.relu_fwd(a.data(), r2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(r1[i] == r2[i]);
        avx->relu_bwd(a.data(), b.data(), d1.data(), n);
        ref.relu_bwd(a.data(), b.data(), d2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(d1[i] == d2[i]);
    }

    for (auto [m, kk, n] : std::vector<std::array<std::size_t, 3>>{
             {1, 1, 1}, {2, 3, 4}, {5, 8, 13}, {16, 16, 16}, {7, 31, 9}}) {
        const auto a = random_vec(m * kk, rng);
        const auto b = random_vec(kk * n, rng);
        std::vector<double> c1(m * n), c2(m * n);
        avx->matmul_nn(a.data(), b.data(), c1.data(), m, kk, n);
        ref.matmul_nn(a.data(), b.data(), c2.data(), m, kk, n);
        for (std::size_t i = 0; i < c1.size(); ++i) CHECK(rel_err(c1[i], c2[i]) < 1e-12);

        const auto at = random_vec(kk * m, rng);
        avx->matmul_tn(at.data(), b.data(), c1.data(), m, kk, n);
        ref.matmul_tn(at.data(), b.data(), c2.data(), m, kk, n);
        for (std::size_t i = 0; i < c1.size(); ++i) CHECK(rel_err(c1[i], c2[i]) < 1e-12);

        const auto bt = random_vec(n * kk, rng);
        avx->matmul_nt(a.data(), bt.data(), c1.data(), m, kk, n);
        ref.matmul_nt(a.data(), bt.data(), c2.data(), m, kk, n);
        for (std::size_t i = 0; i < c1.size(); ++i) CHECK(rel_err(c1[i], c2[i]) < 1e-12);
    }
}

TEST_CASE("active table resolves and backends can be forced") {
    CHECK((kernels::active_name() == "avx2" || kernels::active_name() == "scalar"));
    kernels::set_backend(kernels::Backend::Scalar);
    CHECK(kernels::active_name() == "scalar");
    if (kernels::avx2_supported()) {
        kernels::set_backend(kernels::Backend::Avx2);
        CHECK(kernels::active_name() == "avx2");
    }
}
