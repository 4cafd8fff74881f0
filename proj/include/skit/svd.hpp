// SPDX-License-Identifier: Apache-2.0
//
// One-sided Jacobi SVD, Gram-Schmidt orthonormalization, spectral norm
// bounds and power iteration. All routines are deterministic for a given
// input (the Jacobi rotation schedule is a fixed round-robin, so results
// do not depend on the thread count).

#pragma once

#include <skit/dense.hpp>
#include <skit/kernels.hpp>

namespace skit {

struct SvdResult {
    DenseMatrix u;              // m x k, orthonormal columns
    std::vector<double> sigma;  // k, descending, >= 0
    DenseMatrix vt;             // k x n, orthonormal rows
    int sweeps = 0;
    bool rank_deficient = false;

    DenseMatrix reconstruct() const;
    // V as an n x k matrix (columns are right singular vectors)
    DenseMatrix v() const { return transpose(vt); }
};

SvdResult svd(const DenseMatrix& m);

struct OrthonormalizeResult {
    DenseMatrix q;  // same shape as input, orthonormal columns
    bool rank_deficient = false;
};

OrthonormalizeResult orthonormalize(const DenseMatrix& m);

enum class AlphaVariant { schatten2, schatten4 };

// upper bound on the spectral norm: schatten2 is the Frobenius norm,
// schatten4 is (sum sigma^4)^{1/4} = ||M^T M||_F^{1/2}
double spectral_norm_upper_bound(const DenseMatrix& m, AlphaVariant variant);

double power_iteration_norm(const DenseMatrix& m, int iters, RngState& rng);

double nuclear_norm(const DenseMatrix& m);

// lp norm of the singular values; p may be infinity
double schatten_norm(const DenseMatrix& m, double p);

}  // namespace skit
