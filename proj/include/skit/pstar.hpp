// SPDX-License-Identifier: Apache-2.0
//
// Layerwise spectral statistics, the descent-ratio objective J(p) = N(p)^2/D(p),
// bounded scalar search for p*, EMA smoothing, the preconditioned objective,
// and the Frobenius-anchored randomized estimator.

#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <skit/dense.hpp>
#include <skit/svd.hpp>

namespace skit {

struct SpectralStats {
    std::vector<double> sigma;   // momentum singular values, descending
    std::vector<double> c_diag;  // (U_M^T G V_M)_ii, signed
    std::vector<double> b_diag;  // ||A^T V_M e_i||^2, >= 0
    std::size_t k_samples = 0;   // activation column count
};

struct EmaStats {
    double beta_p = 0.95;
    SpectralStats smoothed;
    bool initialized = false;
};

enum class PStarMode { exact, randomized };

struct PStarConfig {
    double p_min = 1.02;
    double p_max = 50.0;
    int update_interval = 100;
    double beta_p = 0.95;
    PStarMode mode = PStarMode::exact;
    double search_tol = 1e-3;  // bracket width in x = ln(p-1) space
    int rand_rank = 8;
    int rand_power_iters = 2;
    int rand_probes = 5;
    int rand_oversample = 5;

    void validate() const;
};

struct TailBound {
    double energy = 0.0;   // uncomputed Frobenius energy E
    double radius = 0.0;   // residual spectral norm estimate R
    std::size_t d = 0;     // number of uncomputed singular values
};

SpectralStats compute_stats(const DenseMatrix& m, const DenseMatrix& g, const DenseMatrix& a);

// N(p)^2 / D(p); p may be infinity (saturation limit over sigma > 0 components)
double objective(const SpectralStats& stats, double p);

// k * N(p) / D(p); may be <= 0, the caller applies the fallback
double eta_star(const SpectralStats& stats, double p);

struct SelectResult {
    double pstar = 0.0;
    double objective_value = 0.0;
    double eta = 0.0;
    bool fallback = false;
};

SelectResult select_pstar(const SpectralStats& stats, const PStarConfig& cfg, double previous);

EmaStats ema_update(EmaStats state, const SpectralStats& fresh);

double preconditioned_objective(const DenseMatrix& mt, const DenseMatrix& gt,
                                const DenseMatrix& d_inv, const DenseMatrix& a, double p);

double tail_mass(const TailBound& tb, double q);

// ---- randomized estimator (Frobenius-anchored) ----

struct TailSummary {
    std::vector<double> head;  // top-k singular value estimates, descending
    TailBound tail;
};

// norm-ratio objective on full spectra:
// (sum sigma_G^{1+1/p})^{p/(p+1)} / (sum sigma_A^{2(p+1)/(p-1)})^{(p-1)/(2(p+1))}
double norm_ratio_objective(const std::vector<double>& sigma_g,
                            const std::vector<double>& sigma_a, double p);

// the lower-bound surrogate built from head spectra plus worst-case tail mass
double surrogate_objective(const TailSummary& g, const TailSummary& a, double p);

// Algorithm-1 per-matrix block: subspace iteration, residual probes,
// exact Frobenius anchor
TailSummary randomized_tail_summary(const DenseMatrix& m, int k, int power_iters, int probes,
                                    int oversample, RngState& rng);

double randomized_pstar(const DenseMatrix& a, const DenseMatrix& g, const PStarConfig& cfg,
                        RngState& rng);

std::vector<double> spectral_momentum_update(const std::vector<double>& bar_sigma,
                                             const std::vector<double>& fresh_sigma, double beta);

}  // namespace skit
