// SPDX-License-Identifier: Apache-2.0
//
// Random feature regression surrogate as an executable oracle: exact loss
// decomposition, brute-force p* and eta* grids, and the
// nuclear-to-Frobenius vs stable-rank criterion.

#pragma once

#include <skit/dense.hpp>
#include <skit/svd.hpp>

namespace skit {

struct RfrProblem {
    DenseMatrix w;  // m x n
    DenseMatrix a;  // n x k
    DenseMatrix y;  // m x k
    std::size_t k() const { return a.cols(); }
    void validate() const;
};

double rfr_loss(const RfrProblem& p);

// (1/k) (WA - Y) A^T
DenseMatrix rfr_gradient(const RfrProblem& p);

// <G, dW>_F + (1/2k) ||dW A||_F^2, exactly the loss change
double exact_decrease(const RfrProblem& p, const DenseMatrix& dw);

struct PstarTableRow {
    double p = 0.0;
    double eta_star_closed = 0.0;
    double eta_star_grid = 0.0;
    double decrease = 0.0;  // true loss decrease at the grid vertex
};

struct BruteForceResult {
    double pstar = 0.0;
    std::vector<PstarTableRow> table;
};

// nested grids: log-spaced p over [p_min, p_max], per-p log-spaced eta around
// the closed form, true loss evaluated directly at each vertex
BruteForceResult brute_force_pstar(const RfrProblem& p, const DenseMatrix& momentum,
                                   std::size_t grid_size, double p_min = 1.02, double p_max = 50.0,
                                   std::size_t eta_grid = 256);

struct SpectralCriterion {
    bool favor_spectral = false;
    double lhs = 0.0;  // ||G||_*^2 / ||G||_F^2
    double rhs = 0.0;  // ||A||_F^2 / ||A||_2^2
};

SpectralCriterion spectral_vs_euclidean_criterion(const DenseMatrix& g, const DenseMatrix& a);

// teacher-student instance with controllable activation spectral decay
RfrProblem make_rfr_instance(std::size_t m, std::size_t n, std::size_t k, double decay,
                             double noise, RngState& rng);

// random matrix with a prescribed singular spectrum (random orthogonal factors)
DenseMatrix matrix_with_spectrum(std::size_t rows, std::size_t cols,
                                 const std::vector<double>& sigma, RngState& rng);

// heavy-tailed benchmark spectrum: quarter-circle bulk with heavy top
// outliers, rescaled in log space to an exact condition number
std::vector<double> heavy_tailed_spectrum(std::size_t k, double cond, RngState& rng);

}  // namespace skit
