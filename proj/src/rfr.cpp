// SPDX-License-Identifier: Apache-2.0

#include <skit/rfr.hpp>

#include <skit/kernels.hpp>

#include <algorithm>
#include <cmath>

namespace skit {

void RfrProblem::validate() const {
    if (w.cols() != a.rows()) throw std::invalid_argument("rfr: W cols must equal A rows");
    if (y.rows() != w.rows() || y.cols() != a.cols())
        throw std::invalid_argument("rfr: Y shape must be W rows x A cols");
    if (a.cols() < 1) throw std::invalid_argument("rfr: k must be >= 1");
}

double rfr_loss(const RfrProblem& p) {
    p.validate();
    DenseMatrix r = sub(matmul(p.w, p.a), p.y);
    const double f = frobenius_norm(r);
    return 0.5 * f * f / static_cast<double>(p.k());
}

DenseMatrix rfr_gradient(const RfrProblem& p) {
    p.validate();
    DenseMatrix r = sub(matmul(p.w, p.a), p.y);
    DenseMatrix g = matmul_nt(r, p.a);
    scale_in_place(g, 1.0 / static_cast<double>(p.k()));
    return g;
}

double exact_decrease(const RfrProblem& p, const DenseMatrix& dw) {
    p.validate();
    if (!dw.same_shape(p.w)) throw std::invalid_argument("exact_decrease: dW shape mismatch");
    DenseMatrix g = rfr_gradient(p);
    DenseMatrix da = matmul(dw, p.a);
    const double quad = frobenius_norm(da);
    return frobenius_inner(g, dw) + 0.5 * quad * quad / static_cast<double>(p.k());
}

BruteForceResult brute_force_pstar(const RfrProblem& prob, const DenseMatrix& momentum,
                                   std::size_t grid_size, double p_min, double p_max,
                                   std::size_t eta_grid) {
    prob.validate();
    if (grid_size < 64) throw std::invalid_argument("brute_force_pstar: grid_size < 64");
    if (frobenius_norm(momentum) == 0.0) throw std::invalid_argument("brute_force_pstar: zero momentum");

    auto r = svd(momentum);
    const std::size_t kmin = r.sigma.size();
    const double base = rfr_loss(prob);
    DenseMatrix g = rfr_gradient(prob);
    const double k = static_cast<double>(prob.k());

    // closed-form pieces, used only to anchor the eta grid span
    DenseMatrix v = r.v();
    DenseMatrix gv = matmul(g, v);
    DenseMatrix atv = matmul_tn(prob.a, v);
    std::vector<double> cdiag(kmin), bdiag(kmin);
    for (std::size_t j = 0; j < kmin; ++j) {
        double c = 0.0;
        for (std::size_t i = 0; i < r.u.rows(); ++i) c += r.u(i, j) * gv(i, j);
        cdiag[j] = c;
        double b = 0.0;
        for (std::size_t i = 0; i < atv.rows(); ++i) b += atv(i, j) * atv(i, j);
        bdiag[j] = b;
    }

    BruteForceResult out;
    out.table.resize(grid_size);

    const double lp0 = std::log(p_min), lp1 = std::log(p_max);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(worker_threads())
#endif
    for (long long gi = 0; gi < static_cast<long long>(grid_size); ++gi) {
        const double p = std::exp(lp0 + (lp1 - lp0) * static_cast<double>(gi) /
                                            static_cast<double>(grid_size - 1));
        double n = 0.0, d = 0.0;
        for (std::size_t j = 0; j < kmin; ++j) {
            if (r.sigma[j] <= 0.0) continue;
            const double w1 = std::pow(r.sigma[j], 1.0 / p);
            n += w1 * cdiag[j];
            d += w1 * w1 * bdiag[j];
        }
        PstarTableRow row;
        row.p = p;
        row.eta_star_closed = (d > 0.0) ? k * n / d : 0.0;
        if (row.eta_star_closed > 0.0) {
            DenseMatrix us = r.u;
            for (std::size_t i = 0; i < us.rows(); ++i)
                for (std::size_t j = 0; j < kmin; ++j)
                    us(i, j) *= (r.sigma[j] > 0.0) ? std::pow(r.sigma[j], 1.0 / p) : 0.0;
            DenseMatrix dir = matmul(us, r.vt);
            double best_dec = -1e300, best_eta = 0.0;
            for (std::size_t ei = 0; ei < eta_grid; ++ei) {
                const double eta = row.eta_star_closed *
                                   std::pow(10.0, -4.0 + 6.0 * static_cast<double>(ei) /
                                                             static_cast<double>(eta_grid - 1));
                RfrProblem trial = prob;
                add_in_place(trial.w, dir, -eta);
                const double dec = base - rfr_loss(trial);
                if (dec > best_dec) {
                    best_dec = dec;
                    best_eta = eta;
                }
            }
            row.eta_star_grid = best_eta;
            row.decrease = best_dec;
        }
        out.table[static_cast<std::size_t>(gi)] = row;
    }

    double best = -1e300;
    for (const auto& row : out.table) {
        if (row.eta_star_closed > 0.0 && row.decrease > best) {
            best = row.decrease;
            out.pstar = row.p;
        }
    }
    if (best == -1e300) out.pstar = p_max;  // no descent direction anywhere: degenerate
    return out;
}

SpectralCriterion spectral_vs_euclidean_criterion(const DenseMatrix& g, const DenseMatrix& a) {
    if (frobenius_norm(g) == 0.0 || frobenius_norm(a) == 0.0)
        throw std::invalid_argument("spectral_vs_euclidean_criterion: zero input");
    const double gn = nuclear_norm(g);
    const double gf = frobenius_norm(g);
    const double a2 = schatten_norm(a, std::numeric_limits<double>::infinity());
    const double af = frobenius_norm(a);
    SpectralCriterion c;
    c.lhs = gn * gn / (gf * gf);
    c.rhs = af * af / (a2 * a2);
    c.favor_spectral = c.lhs > c.rhs;
    return c;
}

DenseMatrix matrix_with_spectrum(std::size_t rows, std::size_t cols,
                                 const std::vector<double>& sigma, RngState& rng) {
    const std::size_t k = std::min(rows, cols);
    if (sigma.size() != k) throw std::invalid_argument("matrix_with_spectrum: need min(rows, cols) values");
    DenseMatrix u = orthonormalize(gaussian_matrix(rows, k, rng)).q;
    DenseMatrix v = orthonormalize(gaussian_matrix(cols, k, rng)).q;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < k; ++j) u(i, j) *= sigma[j];
    return matmul_nt(u, v);
}

RfrProblem make_rfr_instance(std::size_t m, std::size_t n, std::size_t k, double decay,
                             double noise, RngState& rng) {
    const std::size_t r = std::min(n, k);
    std::vector<double> sig(r);
    for (std::size_t i = 0; i < r; ++i) sig[i] = std::pow(static_cast<double>(i + 1), -decay);
    RfrProblem p;
    p.a = matrix_with_spectrum(n, k, sig, rng);
    DenseMatrix teacher = gaussian_matrix(m, n, rng);
    scale_in_place(teacher, 1.0 / std::sqrt(static_cast<double>(n)));
    p.y = matmul(teacher, p.a);
    if (noise > 0.0) {
        DenseMatrix e = gaussian_matrix(m, k, rng);
        add_in_place(p.y, e, noise);
    }
    p.w = gaussian_matrix(m, n, rng);
    scale_in_place(p.w, 1.0 / std::sqrt(static_cast<double>(n)));
    return p;
}

std::vector<double> heavy_tailed_spectrum(std::size_t k, double cond, RngState& rng) {
    if (k < 4) throw std::invalid_argument("heavy_tailed_spectrum: k too small");
    const std::size_t n_out = 2;
    const std::size_t nb = k - n_out;
    std::vector<double> sig;
    sig.reserve(k);
    // quarter-circle quantiles: F(s) ~ int_0^s sqrt(4 - t^2) dt on [0, 2]
    constexpr int kTab = 4001;
    std::vector<double> ss(kTab), cdf(kTab);
    double acc = 0.0;
    for (int i = 0; i < kTab; ++i) {
        ss[i] = 2.0 * i / (kTab - 1);
        acc += std::sqrt(std::max(0.0, 4.0 - ss[i] * ss[i]));
        cdf[i] = acc;
    }
    for (double& c : cdf) c /= acc;
    for (std::size_t i = 0; i < nb; ++i) {
        const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(nb);
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), q);
        const std::size_t j = std::min<std::size_t>(it - cdf.begin(), kTab - 1);
        sig.push_back(ss[j]);
    }
    // heavy top outliers: |t_3| draws via normal ratios
    for (std::size_t i = 0; i < n_out; ++i) {
        const double z = rng.next_normal();
        double chi2 = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double x = rng.next_normal();
            chi2 += x * x;
        }
        const double t = z / std::sqrt(chi2 / 3.0);
        sig.push_back(2.0 * 1.5 * (1.0 + std::abs(t)));
    }
    std::sort(sig.rbegin(), sig.rend());
    // rescale in log space so sigma_1 = 1 and sigma_k = 1/cond
    const double l0 = std::log(sig.front());
    const double lk = std::log(std::max(sig.back(), 1e-300));
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i)
        out[i] = std::exp((std::log(sig[i]) - l0) * (std::log(cond) / (l0 - lk)));
    return out;
}

}  // namespace skit
