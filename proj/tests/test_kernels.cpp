// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <skit/kernels.hpp>

using namespace skit;

TEST_CASE("matmul parallel paths are bit-identical to the serial reference") {
    RngState rng(11);
    for (auto [m, k, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{3, 4, 5},
                           {64, 64, 64},
                           {130, 70, 90},
                           {256, 32, 256}}) {
        DenseMatrix a = gaussian_matrix(m, k, rng);
        DenseMatrix b = gaussian_matrix(k, n, rng);
        CHECK(matmul(a, b).storage() == matmul_serial(a, b).storage());

        DenseMatrix at = gaussian_matrix(k, m, rng);
        CHECK(matmul_tn(at, b).storage() == matmul_tn_serial(at, b).storage());

        DenseMatrix bt = gaussian_matrix(n, k, rng);
        CHECK(matmul_nt(a, bt).storage() == matmul_nt_serial(a, bt).storage());
    }
}

TEST_CASE("matmul agrees with the transpose identities") {
    RngState rng(12);
    DenseMatrix a = gaussian_matrix(17, 9, rng);
    DenseMatrix b = gaussian_matrix(17, 13, rng);
    DenseMatrix direct = matmul_tn(a, b);
    DenseMatrix ref = matmul(transpose(a), b);
    CHECK(frobenius_norm(sub(direct, ref)) <= 1e-12 * frobenius_norm(ref));

    DenseMatrix c = gaussian_matrix(9, 17, rng);
    DenseMatrix nt = matmul_nt(c, a);
    DenseMatrix ref2 = matmul(c, transpose(a));
    CHECK(frobenius_norm(sub(nt, ref2)) <= 1e-12 * frobenius_norm(ref2));
}

TEST_CASE("elementwise helpers") {
    DenseMatrix a = DenseMatrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    DenseMatrix b = DenseMatrix::from_rows({{2.0, 0.5}, {1.0, 2.0}});
    CHECK(hadamard(a, b)(0, 0) == 2.0);
    CHECK(hadamard(a, b)(1, 1) == 8.0);
    CHECK(add(a, b)(0, 1) == 2.5);
    CHECK(sub(a, b)(1, 0) == 2.0);
    CHECK(elementwise_pow(a, -0.5, 0.0)(0, 0) == 1.0);
    CHECK(frobenius_inner(a, b) == doctest::Approx(2.0 + 1.0 + 3.0 + 8.0));
    CHECK_THROWS_AS(add(a, DenseMatrix(3, 3)), std::invalid_argument);
}

TEST_CASE("rng: identical seeds give identical streams") {
    RngState a(123), b(123);
    DenseMatrix ma = gaussian_matrix(2, 2, a);
    DenseMatrix mb = gaussian_matrix(2, 2, b);
    CHECK(ma.storage() == mb.storage());

    RngState c(124);
    DenseMatrix mc = gaussian_matrix(2, 2, c);
    CHECK(ma.storage() != mc.storage());
}

TEST_CASE("rng: gaussian moments") {
    RngState rng(7);
    DenseMatrix m = gaussian_matrix(100, 100, rng);
    double mean = 0.0;
    for (double v : m.storage()) mean += v;
    mean /= static_cast<double>(m.size());
    double var = 0.0;
    for (double v : m.storage()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(m.size());
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.05);

    DenseMatrix one = gaussian_matrix(1, 1, rng);
    CHECK(std::isfinite(one(0, 0)));
    CHECK_THROWS_AS(gaussian_matrix(0, 3, rng), std::invalid_argument);
}
