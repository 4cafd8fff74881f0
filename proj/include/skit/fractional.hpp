// SPDX-License-Identifier: Apache-2.0
//
// The fractional map F_p(G) = U Sigma^{1/p} V^T by three routes: exact SVD,
// Newton-Schulz polar factor plus binomial Taylor-Horner expansion, and the
// per-iteration minimax-fitted odd-quintic direct iteration. Schedules are
// pinned (a + b + c = 1) and fitted over Chebyshev nodes.

#pragma once

#include <array>
#include <optional>

#include <skit/dense.hpp>
#include <skit/svd.hpp>

#include <json.hpp>

namespace skit {

enum class FractionalMethod { svd, taylor, remez };

struct FractionalMapPlan {
    FractionalMethod method = FractionalMethod::taylor;
    double p = 2.0;
    int ns_budget = 5;  // Newton-Schulz iterations (also the remez-route iteration count)
    AlphaVariant alpha_variant = AlphaVariant::schatten4;
    int fixed_order = -1;     // >= 0 pins the Taylor truncation order
    double tol = 1e-3;        // adaptive-order tolerance
    double eps_lower = 0.02;  // assumed smallest normalized singular value
    int max_order = 64;
    double remez_eps0 = 0.02;
    double p_max = 50.0;

    void validate() const;
};

struct PolarResult {
    DenseMatrix polar;     // P ~ U V^T, same shape as the input
    double alpha = 0.0;    // spectral norm upper bound used for normalization
    double residual = 0.0; // ||P^T P - I||_F on the small side
};

struct CoefficientSchedule {
    double p = 0.0;  // exponent target; infinity means the polar target x^0 = 1
    int iters = 0;
    double eps0 = 0.0;
    std::vector<std::array<double, 3>> coeffs;    // (a_t, b_t, c_t)
    std::vector<std::array<double, 2>> domains;   // [lo_t, hi_t]
    std::vector<double> residuals;                // per-iteration minimax residual

    nlohmann::json to_json() const;
    static CoefficientSchedule from_json(const nlohmann::json& j);
};

// per-iteration degree-5 minimax fit of x^q, q = p^{-1/T}, pinned at x = 1
CoefficientSchedule fit_remez_schedule(double p, int iters, double eps0);

// one pinned minimax fit: min over (a,b,c), a+b+c=1, of
// max_{x in [lo,hi]} |a x + b x^3 + c x^5 - x^q|; returns {a,b,c,residual}
std::array<double, 4> fit_pinned_quintic(double q, double lo, double hi);

// default polar schedule for a given budget (fitted once and cached)
const CoefficientSchedule& default_polar_schedule(int budget);

PolarResult polar_newton_schulz(const DenseMatrix& g, int budget, AlphaVariant alpha_variant);

struct AdaptiveOrder {
    int order = 0;
    bool truncated = false;  // tolerance not reachable within max_order
};

AdaptiveOrder adaptive_order(double p, double eps, double tol, int max_order);

// alpha^{1/p} * sum_{i<=order} C(1/p,i) (G P^T / alpha - I)^i P, Horner nested
DenseMatrix taylor_fractional(const DenseMatrix& g, const PolarResult& polar, double p, int order);

DenseMatrix remez_fractional(const DenseMatrix& g, const CoefficientSchedule& schedule,
                             AlphaVariant alpha_variant);

DenseMatrix fractional_map(const DenseMatrix& g, const FractionalMapPlan& plan);

// exact-SVD LMO direction with unit Schatten-(p+1) norm:
// -U Sigma^{1/p} V^T / (sum sigma^{(p+1)/p})^{1/(p+1)}
DenseMatrix schatten_lmo_direction(const DenseMatrix& g, double p);

// binomial coefficients C(e, i) for i = 0..order by the stable recurrence
std::vector<double> binomial_coefficients(double e, int order);

// scalar model of the composite schedule applied to x
double schedule_compose_scalar(const CoefficientSchedule& s, double x);

// scalar model of the taylor route: g_K(x h(x)) h(x) with the default polar
// schedule at the given budget
double taylor_route_scalar(double x, double p, int order, int budget);

// worst-case |composite - target| over a log grid, used by benchmarks/tests
double schedule_worst_error(const CoefficientSchedule& s, double lo, double hi, int grid = 4001);

}  // namespace skit
