// SPDX-License-Identifier: Apache-2.0

#include <skit/svd.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace skit {

namespace {

constexpr int kMaxSweeps = 60;
constexpr double kRotTol = 1e-13;      // relative off-diagonal threshold
constexpr double kRankClamp = 1e-14;   // sigma below this * sigma1 treated as zero

// column-major working copy: col(j) is contiguous
struct ColMat {
    std::size_t m = 0, n = 0;
    std::vector<double> d;
    ColMat(std::size_t m_, std::size_t n_) : m(m_), n(n_), d(m_ * n_, 0.0) {}
    double* col(std::size_t j) { return d.data() + j * m; }
    const double* col(std::size_t j) const { return d.data() + j * m; }
};

double dot(const double* a, const double* b, std::size_t m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += a[i] * b[i];
    return s;
}

void rotate(double* x, double* y, std::size_t m, double cs, double sn) {
    for (std::size_t i = 0; i < m; ++i) {
        const double xi = x[i], yi = y[i];
        x[i] = cs * xi - sn * yi;
        y[i] = sn * xi + cs * yi;
    }
}

// round-robin tournament pairing: n slots (n even), n-1 rounds of n/2
// disjoint pairs. Deterministic schedule shared by serial and parallel runs.
std::vector<std::pair<int, int>> round_pairs(int n_slots, int round) {
    const int n = n_slots;
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(n / 2);
    // player 0 fixed, others rotate
    auto slot = [&](int pos) {
        if (pos == 0) return 0;
        return 1 + (pos - 1 + round) % (n - 1);
    };
    for (int i = 0; i < n / 2; ++i) {
        int a = slot(i);
        int b = slot(n - 1 - i);
        pairs.emplace_back(std::min(a, b), std::max(a, b));
    }
    return pairs;
}

}  // namespace

DenseMatrix SvdResult::reconstruct() const {
    DenseMatrix us = u;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= sigma[j];
    return matmul(us, vt);
}

SvdResult svd(const DenseMatrix& input) {
    if (input.rows() < 1 || input.cols() < 1) throw std::invalid_argument("svd: empty matrix");
    input.require_finite("svd");

    const bool transposed = input.rows() < input.cols();
    DenseMatrix work = transposed ? transpose(input) : input;
    const std::size_t m = work.rows(), n = work.cols();

    ColMat a(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) a.col(j)[i] = work(i, j);
    ColMat v(n, n);
    for (std::size_t j = 0; j < n; ++j) v.col(j)[j] = 1.0;

    std::vector<double> colsq(n);
    for (std::size_t j = 0; j < n; ++j) colsq[j] = dot(a.col(j), a.col(j), m);

    const int slots = static_cast<int>(n % 2 ? n + 1 : n);  // pad with a bye
    int sweeps = 0;
    for (; sweeps < kMaxSweeps; ++sweeps) {
        bool any_rotation = false;
        for (int round = 0; round < slots - 1; ++round) {
            auto pairs = round_pairs(slots, round);
            std::vector<char> rotated(pairs.size(), 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_threads())
#endif
            for (long long t = 0; t < static_cast<long long>(pairs.size()); ++t) {
                const int p = pairs[t].first, q = pairs[t].second;
                if (q >= static_cast<int>(n)) continue;  // bye slot
                const double app = colsq[p], aqq = colsq[q];
                if (app == 0.0 && aqq == 0.0) continue;
                const double apq = dot(a.col(p), a.col(q), m);
                if (std::abs(apq) <= kRotTol * std::sqrt(app * aqq)) continue;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double tan_t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                     (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + tan_t * tan_t);
                const double sn = cs * tan_t;
                rotate(a.col(p), a.col(q), m, cs, sn);
                rotate(v.col(p), v.col(q), n, cs, sn);
                colsq[p] = app - tan_t * apq;
                colsq[q] = aqq + tan_t * apq;
                rotated[t] = 1;
            }
            for (char r : rotated) any_rotation |= (r != 0);
        }
        if (!any_rotation) break;
    }
    if (sweeps == kMaxSweeps) {
        throw std::runtime_error("svd: no convergence after 60 sweeps on " +
                                 std::to_string(input.rows()) + "x" + std::to_string(input.cols()));
    }

    // singular values and ordering
    std::vector<double> sig(n);
    for (std::size_t j = 0; j < n; ++j) sig[j] = std::sqrt(dot(a.col(j), a.col(j), m));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sig[x] > sig[y]; });

    const double smax = sig.empty() ? 0.0 : sig[order[0]];
    const double clamp = kRankClamp * smax;

    DenseMatrix u(m, n);
    DenseMatrix vmat(n, n);
    std::vector<double> sigma(n);
    bool deficient = false;
    std::vector<std::size_t> dead;
    for (std::size_t jj = 0; jj < n; ++jj) {
        const std::size_t j = order[jj];
        double s = sig[j];
        if (s <= clamp || s == 0.0) {
            sigma[jj] = 0.0;
            deficient = true;
            dead.push_back(jj);
        } else {
            sigma[jj] = s;
            for (std::size_t i = 0; i < m; ++i) u(i, jj) = a.col(j)[i] / s;
        }
        for (std::size_t i = 0; i < n; ++i) vmat(i, jj) = v.col(j)[i];
    }

    // complete dead left-singular columns orthonormally (arbitrary span)
    for (std::size_t jj : dead) {
        for (std::size_t cand = 0; cand < m + dead.size(); ++cand) {
            std::vector<double> w(m, 0.0);
            w[cand % m] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t c = 0; c < n; ++c) {
                    if (c == jj) continue;
                    if (sigma[c] == 0.0 && c > jj) continue;  // later dead cols not yet built
                    double proj = 0.0;
                    for (std::size_t i = 0; i < m; ++i) proj += w[i] * u(i, c);
                    for (std::size_t i = 0; i < m; ++i) w[i] -= proj * u(i, c);
                }
            }
            double nw = std::sqrt(dot(w.data(), w.data(), m));
            if (nw > 1e-6) {
                for (std::size_t i = 0; i < m; ++i) u(i, jj) = w[i] / nw;
                break;
            }
        }
    }

    SvdResult out;
    out.sweeps = sweeps + 1;
    out.rank_deficient = deficient;
    if (!transposed) {
        out.u = std::move(u);
        out.vt = transpose(vmat);
    } else {
        out.u = std::move(vmat);
        out.vt = transpose(u);
    }
    out.sigma = std::move(sigma);
    return out;
}

OrthonormalizeResult orthonormalize(const DenseMatrix& input) {
    if (input.rows() < input.cols()) throw std::invalid_argument("orthonormalize: rows < cols");
    input.require_finite("orthonormalize");
    const std::size_t m = input.rows(), n = input.cols();

    OrthonormalizeResult out;
    out.q = input;
    DenseMatrix& q = out.q;

    // column norms before reduction, for the rank test
    std::vector<double> innorm(n, 0.0);
    double maxnorm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += q(i, j) * q(i, j);
        innorm[j] = std::sqrt(s);
        maxnorm = std::max(maxnorm, innorm[j]);
    }

    auto project_out = [&](std::vector<double>& w, std::size_t upto) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t c = 0; c < upto; ++c) {
                double proj = 0.0;
                for (std::size_t i = 0; i < m; ++i) proj += w[i] * q(i, c);
                for (std::size_t i = 0; i < m; ++i) w[i] -= proj * q(i, c);
            }
        }
    };

    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> w(m);
        for (std::size_t i = 0; i < m; ++i) w[i] = q(i, j);
        project_out(w, j);
        double nw = 0.0;
        for (double x : w) nw += x * x;
        nw = std::sqrt(nw);
        if (nw <= 1e-12 * std::max(maxnorm, 1e-300)) {
            out.rank_deficient = true;
            bool placed = false;
            for (std::size_t cand = 0; cand < m && !placed; ++cand) {
                std::fill(w.begin(), w.end(), 0.0);
                w[cand] = 1.0;
                project_out(w, j);
                double nn = 0.0;
                for (double x : w) nn += x * x;
                nn = std::sqrt(nn);
                if (nn > 1e-6) {
                    for (std::size_t i = 0; i < m; ++i) q(i, j) = w[i] / nn;
                    placed = true;
                }
            }
            if (!placed) throw std::runtime_error("orthonormalize: completion failed");
        } else {
            for (std::size_t i = 0; i < m; ++i) q(i, j) = w[i] / nw;
        }
    }
    return out;
}

double spectral_norm_upper_bound(const DenseMatrix& m, AlphaVariant variant) {
    m.require_finite("spectral_norm_upper_bound");
    if (variant == AlphaVariant::schatten2) return frobenius_norm(m);
    // ||M^T M||_F^{1/2} on the smaller Gram side
    DenseMatrix gram = (m.rows() <= m.cols()) ? matmul_nt(m, m) : matmul_tn(m, m);
    return std::sqrt(frobenius_norm(gram));
}

double power_iteration_norm(const DenseMatrix& m, int iters, RngState& rng) {
    if (iters < 1) throw std::invalid_argument("power_iteration_norm: iters < 1");
    if (frobenius_norm(m) == 0.0) return 0.0;
    DenseMatrix v = gaussian_matrix(m.cols(), 1, rng);
    double est = 0.0;
    for (int it = 0; it < iters; ++it) {
        DenseMatrix w = matmul(m, v);         // m x 1
        const double wn = frobenius_norm(w);
        const double vn = frobenius_norm(v);
        if (wn == 0.0 || vn == 0.0) return 0.0;
        est = wn / vn;
        v = matmul_tn(m, w);                  // n x 1
        const double nn = frobenius_norm(v);
        if (nn == 0.0) return est;
        scale_in_place(v, 1.0 / nn);
    }
    return est;
}

double nuclear_norm(const DenseMatrix& m) {
    auto r = svd(m);
    double s = 0.0;
    for (double x : r.sigma) s += x;
    return s;
}

double schatten_norm(const DenseMatrix& m, double p) {
    auto r = svd(m);
    if (std::isinf(p)) return r.sigma.empty() ? 0.0 : r.sigma[0];
    double s = 0.0;
    for (double x : r.sigma) s += std::pow(x, p);
    return std::pow(s, 1.0 / p);
}

}  // namespace skit
