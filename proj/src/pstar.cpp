// SPDX-License-Identifier: Apache-2.0

#include <skit/pstar.hpp>

#include <skit/brent.hpp>
#include <skit/kernels.hpp>

#include <algorithm>
#include <cmath>

namespace skit {

namespace {

constexpr double kTieRelTol = 1e-9;

struct NDPair {
    double n = 0.0;
    double d = 0.0;
};

NDPair eval_nd(const SpectralStats& s, double p) {
    NDPair nd;
    const bool inf_p = std::isinf(p);
    for (std::size_t i = 0; i < s.sigma.size(); ++i) {
        const double sig = s.sigma[i];
        double w1, w2;
        if (sig <= 0.0) {
            w1 = w2 = 0.0;
        } else if (inf_p) {
            w1 = w2 = 1.0;
        } else {
            w1 = std::pow(sig, 1.0 / p);
            w2 = w1 * w1;
        }
        nd.n += w1 * s.c_diag[i];
        nd.d += w2 * s.b_diag[i];
    }
    return nd;
}

// log(sum_i sigma_i^q) evaluated stably for large q
double log_sum_pow(const std::vector<double>& sigma, double q) {
    double lmax = -std::numeric_limits<double>::infinity();
    for (double s : sigma)
        if (s > 0.0) lmax = std::max(lmax, q * std::log(s));
    if (!std::isfinite(lmax)) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (double s : sigma)
        if (s > 0.0) acc += std::exp(q * std::log(s) - lmax);
    return lmax + std::log(acc);
}

double log_tail_mass(const TailBound& tb, double q) {
    if (tb.energy <= 0.0 || tb.d == 0) return -std::numeric_limits<double>::infinity();
    if (tb.radius == 0.0) throw std::invalid_argument("tail_mass: R = 0 with positive energy");
    const double dd = static_cast<double>(tb.d);
    if (tb.energy / (tb.radius * tb.radius) > dd)
        return std::log(dd) + 0.5 * q * (std::log(tb.energy) - std::log(dd));
    return std::log(tb.energy) + (q - 2.0) * std::log(tb.radius);
}

double log_add(double a, double b) {
    if (!std::isfinite(a)) return b;
    if (!std::isfinite(b)) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double log_norm_ratio(double log_num_sum, double log_den_sum, double p) {
    return (p / (p + 1.0)) * log_num_sum - ((p - 1.0) / (2.0 * (p + 1.0))) * log_den_sum;
}

void check_stats(const SpectralStats& s) {
    if (s.sigma.size() != s.c_diag.size() || s.sigma.size() != s.b_diag.size())
        throw std::invalid_argument("stats: vector length mismatch");
}

}  // namespace

void PStarConfig::validate() const {
    if (!(p_min > 1.0) || !(p_min < p_max) || !(p_max <= 50.0))
        throw std::invalid_argument("pstar config: need 1 < p_min < p_max <= 50");
    if (update_interval < 1) throw std::invalid_argument("pstar config: update_interval < 1");
    if (beta_p < 0.0 || beta_p >= 1.0) throw std::invalid_argument("pstar config: beta_p outside [0, 1)");
    if (!(search_tol > 0.0)) throw std::invalid_argument("pstar config: search_tol <= 0");
}

SpectralStats compute_stats(const DenseMatrix& m, const DenseMatrix& g, const DenseMatrix& a) {
    if (!m.same_shape(g)) throw std::invalid_argument("compute_stats: M and G shape mismatch");
    if (a.rows() != m.cols()) throw std::invalid_argument("compute_stats: A row count must equal parameter cols");
    if (frobenius_norm(m) == 0.0) throw std::invalid_argument("compute_stats: zero momentum, SVD basis undefined");

    auto r = svd(m);
    const std::size_t k = r.sigma.size();
    DenseMatrix v = r.v();                 // n x k
    DenseMatrix gv = matmul(g, v);         // m x k
    DenseMatrix atv = matmul_tn(a, v);     // k_samples x k

    SpectralStats s;
    s.sigma = r.sigma;
    s.c_diag.resize(k);
    s.b_diag.resize(k);
    s.k_samples = a.cols();
    for (std::size_t j = 0; j < k; ++j) {
        double c = 0.0;
        for (std::size_t i = 0; i < r.u.rows(); ++i) c += r.u(i, j) * gv(i, j);
        s.c_diag[j] = c;
        double b = 0.0;
        for (std::size_t i = 0; i < atv.rows(); ++i) b += atv(i, j) * atv(i, j);
        s.b_diag[j] = b;
    }
    return s;
}

double objective(const SpectralStats& stats, double p) {
    check_stats(stats);
    if (!(p >= 1.0) && !std::isinf(p)) throw std::invalid_argument("objective: p < 1");
    const NDPair nd = eval_nd(stats, p);
    if (nd.d <= 0.0) throw std::runtime_error("objective: degenerate curvature D(p) = 0");
    return nd.n * nd.n / nd.d;
}

double eta_star(const SpectralStats& stats, double p) {
    check_stats(stats);
    const NDPair nd = eval_nd(stats, p);
    if (nd.d <= 0.0) throw std::runtime_error("eta_star: degenerate curvature D(p) = 0");
    return static_cast<double>(stats.k_samples) * nd.n / nd.d;
}

SelectResult select_pstar(const SpectralStats& stats, const PStarConfig& cfg, double previous) {
    cfg.validate();
    check_stats(stats);

    double sig_mass = 0.0, b_mass = 0.0;
    for (std::size_t i = 0; i < stats.sigma.size(); ++i) {
        if (stats.sigma[i] > 0.0) {
            sig_mass += stats.sigma[i];
            b_mass += stats.b_diag[i];
        }
    }
    if (sig_mass <= 0.0 || b_mass <= 0.0) return {previous, 0.0, 0.0, true};

    const double xlo = std::log(cfg.p_min - 1.0);
    const double xhi = std::log(cfg.p_max - 1.0);
    auto j_of_x = [&](double x) { return objective(stats, 1.0 + std::exp(x)); };
    BrentResult br = maximize_scalar(j_of_x, xlo, xhi, cfg.search_tol, 100);

    double pstar = 1.0 + std::exp(br.x);
    double jbest = br.f;

    // flat objective within tolerance: tie-break toward p_max
    const double j_at_max = objective(stats, cfg.p_max);
    if (jbest - j_at_max <= kTieRelTol * std::max(jbest, 0.0)) {
        pstar = cfg.p_max;
        jbest = j_at_max;
    }

    const NDPair nd = eval_nd(stats, pstar);
    if (nd.n <= 0.0) return {previous, jbest, 0.0, true};
    return {pstar, jbest, static_cast<double>(stats.k_samples) * nd.n / nd.d, false};
}

EmaStats ema_update(EmaStats state, const SpectralStats& fresh) {
    check_stats(fresh);
    if (!state.initialized) {
        state.smoothed = fresh;
        state.initialized = true;
        return state;
    }
    if (state.smoothed.sigma.size() != fresh.sigma.size())
        throw std::invalid_argument("ema_update: vector length mismatch");
    const double b = state.beta_p;
    auto blend = [b](std::vector<double>& old, const std::vector<double>& upd) {
        for (std::size_t i = 0; i < old.size(); ++i) old[i] = b * old[i] + (1.0 - b) * upd[i];
    };
    blend(state.smoothed.sigma, fresh.sigma);
    blend(state.smoothed.c_diag, fresh.c_diag);
    blend(state.smoothed.b_diag, fresh.b_diag);
    state.smoothed.k_samples = fresh.k_samples;
    return state;
}

double preconditioned_objective(const DenseMatrix& mt, const DenseMatrix& gt,
                                const DenseMatrix& d_inv, const DenseMatrix& a, double p) {
    if (!mt.same_shape(gt) || !mt.same_shape(d_inv))
        throw std::invalid_argument("preconditioned_objective: shape mismatch");
    if (a.rows() != mt.cols())
        throw std::invalid_argument("preconditioned_objective: A row count must equal parameter cols");

    auto r = svd(mt);
    const std::size_t k = r.sigma.size();
    DenseMatrix v = r.v();
    DenseMatrix gv = matmul(gt, v);
    double num = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double c = 0.0;
        for (std::size_t i = 0; i < r.u.rows(); ++i) c += r.u(i, j) * gv(i, j);
        num += std::pow(std::max(r.sigma[j], 0.0), 1.0 / p) * c;
    }

    // reform Y_p at this candidate p
    DenseMatrix us = r.u;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < k; ++j) us(i, j) *= std::pow(std::max(r.sigma[j], 0.0), 1.0 / p);
    DenseMatrix yp = matmul(us, r.vt);
    DenseMatrix masked = hadamard(d_inv, yp);
    const double den = std::pow(frobenius_norm(matmul(masked, a)), 2.0);
    if (den <= 0.0) throw std::runtime_error("preconditioned_objective: zero denominator");
    return num * num / den;
}

double tail_mass(const TailBound& tb, double q) {
    if (!(q > 0.0)) throw std::invalid_argument("tail_mass: q <= 0");
    if (tb.energy <= 0.0 || tb.d == 0) return 0.0;
    const double lt = log_tail_mass(tb, q);
    return std::exp(lt);
}

double norm_ratio_objective(const std::vector<double>& sigma_g,
                            const std::vector<double>& sigma_a, double p) {
    if (!(p > 1.0)) throw std::invalid_argument("norm_ratio_objective: p must exceed 1");
    const double qg = 1.0 + 1.0 / p;
    const double qa = 2.0 * (p + 1.0) / (p - 1.0);
    const double ln = log_sum_pow(sigma_g, qg);
    const double ld = log_sum_pow(sigma_a, qa);
    return std::exp(log_norm_ratio(ln, ld, p));
}

double surrogate_objective(const TailSummary& g, const TailSummary& a, double p) {
    if (!(p > 1.0)) throw std::invalid_argument("surrogate_objective: p must exceed 1");
    const double qg = 1.0 + 1.0 / p;
    const double qa = 2.0 * (p + 1.0) / (p - 1.0);
    const double ln = log_add(log_sum_pow(g.head, qg), log_tail_mass(g.tail, qg));
    const double ld = log_add(log_sum_pow(a.head, qa), log_tail_mass(a.tail, qa));
    return std::exp(log_norm_ratio(ln, ld, p));
}

TailSummary randomized_tail_summary(const DenseMatrix& m, int k, int power_iters, int probes,
                                    int oversample, RngState& rng) {
    const std::size_t rows = m.rows(), cols = m.cols();
    const std::size_t mind = std::min(rows, cols);
    if (k < 1 || static_cast<std::size_t>(k) >= mind)
        throw std::invalid_argument("randomized_tail_summary: rank must be in [1, min_dim)");

    const std::size_t test_cols = std::min(static_cast<std::size_t>(k + oversample), cols);
    DenseMatrix omega = gaussian_matrix(cols, test_cols, rng);
    DenseMatrix y = matmul(m, omega);  // rows x test_cols
    for (int it = 0; it < power_iters; ++it) {
        y = orthonormalize(y).q;
        y = matmul(m, matmul_tn(m, y));
    }
    DenseMatrix q = orthonormalize(y).q;   // rows x test_cols
    DenseMatrix b = matmul_tn(q, m);       // test_cols x cols
    auto bs = svd(b);

    TailSummary out;
    out.head.assign(bs.sigma.begin(), bs.sigma.begin() + std::min<std::size_t>(k, bs.sigma.size()));

    // residual radius from Gaussian probes: max ||(I - QQ^T) M w||_2 / sqrt(cols)
    DenseMatrix probes_m = gaussian_matrix(cols, static_cast<std::size_t>(probes), rng);
    DenseMatrix mw = matmul(m, probes_m);             // rows x probes
    DenseMatrix qtm = matmul_tn(q, mw);               // test_cols x probes
    DenseMatrix back = matmul(q, qtm);                // rows x probes
    double rmax = 0.0;
    for (std::size_t j = 0; j < mw.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < mw.rows(); ++i) {
            const double d = mw(i, j) - back(i, j);
            s += d * d;
        }
        rmax = std::max(rmax, std::sqrt(s));
    }
    out.tail.radius = rmax / std::sqrt(static_cast<double>(cols));

    double head_energy = 0.0;
    for (double s : out.head) head_energy += s * s;
    const double total = std::pow(frobenius_norm(m), 2.0);
    out.tail.energy = std::max(0.0, total - head_energy);
    out.tail.d = mind - static_cast<std::size_t>(k);
    if (out.tail.d > 0 && out.tail.energy > 0.0 && out.tail.radius == 0.0)
        out.tail.radius = std::sqrt(out.tail.energy / static_cast<double>(out.tail.d));
    return out;
}

double randomized_pstar(const DenseMatrix& a, const DenseMatrix& g, const PStarConfig& cfg,
                        RngState& rng) {
    cfg.validate();
    const std::size_t mind_a = std::min(a.rows(), a.cols());
    const std::size_t mind_g = std::min(g.rows(), g.cols());
    const double xlo = std::log(0.01);
    const double xhi = std::log(cfg.p_max - 1.0);

    if (static_cast<std::size_t>(cfg.rand_rank) >= std::min(mind_a, mind_g)) {
        // no truncation possible: exact norm-ratio objective on full spectra
        const auto sg = svd(g).sigma;
        const auto sa = svd(a).sigma;
        auto f = [&](double x) {
            return std::log(std::max(norm_ratio_objective(sg, sa, 1.0 + std::exp(x)), 1e-300));
        };
        BrentResult br = maximize_scalar(f, xlo, xhi, cfg.search_tol, 100);
        return 1.0 + std::exp(br.x);
    }

    TailSummary tg = randomized_tail_summary(g, cfg.rand_rank, cfg.rand_power_iters,
                                             cfg.rand_probes, cfg.rand_oversample, rng);
    TailSummary ta = randomized_tail_summary(a, cfg.rand_rank, cfg.rand_power_iters,
                                             cfg.rand_probes, cfg.rand_oversample, rng);
    auto f = [&](double x) {
        return std::log(std::max(surrogate_objective(tg, ta, 1.0 + std::exp(x)), 1e-300));
    };
    BrentResult br = maximize_scalar(f, xlo, xhi, cfg.search_tol, 100);

    // saturating objectives maximize at the boundary; snap if the boundary wins
    const double j_best = f(br.x);
    if (f(xhi) >= j_best - 1e-12) return cfg.p_max;
    if (f(xlo) >= j_best - 1e-12) return 1.0 + std::exp(xlo);
    return 1.0 + std::exp(br.x);
}

std::vector<double> spectral_momentum_update(const std::vector<double>& bar_sigma,
                                             const std::vector<double>& fresh_sigma, double beta) {
    if (bar_sigma.size() != fresh_sigma.size())
        throw std::invalid_argument("spectral_momentum_update: length mismatch");
    std::vector<double> out(bar_sigma.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = beta * bar_sigma[i] + (1.0 - beta) * fresh_sigma[i];
    return out;
}

}  // namespace skit
