// SPDX-License-Identifier: Apache-2.0

#include <skit/fractional.hpp>
#include <skit/kernels.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace skit {

namespace {

constexpr int kFitNodes = 257;
constexpr double kInfeasibleResidual = 0.5;

double pow_target(double x, double q) {
    if (q == 0.0) return 1.0;
    return std::pow(x, q);
}

// ascending Chebyshev extrema on [lo, hi]
std::vector<double> cheb_nodes(double lo, double hi, int n) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i)
        x[n - 1 - i] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * std::cos(M_PI * i / (n - 1));
    return x;
}

struct FitGrid {
    std::vector<double> x, u, v, w;
};

FitGrid make_grid(double q, double lo, double hi) {
    FitGrid g;
    g.x = cheb_nodes(lo, hi, kFitNodes);
    g.u.resize(g.x.size());
    g.v.resize(g.x.size());
    g.w.resize(g.x.size());
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double x = g.x[i];
        const double x3 = x * x * x, x5 = x3 * x * x;
        g.u[i] = x - x5;
        g.v[i] = x3 - x5;
        g.w[i] = x5 - pow_target(x, q);
    }
    return g;
}

double residual_at(const FitGrid& g, double a, double b, std::size_t i) {
    return a * g.u[i] + b * g.v[i] + g.w[i];
}

double max_residual(const FitGrid& g, double a, double b, std::size_t* where = nullptr) {
    double best = -1.0;
    std::size_t bi = 0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double r = std::abs(residual_at(g, a, b, i));
        if (r > best) {
            best = r;
            bi = i;
        }
    }
    if (where) *where = bi;
    return best;
}

// Lawson iteratively reweighted least squares on the discretized problem
std::pair<double, double> lawson_fit(const FitGrid& g, int iters) {
    const std::size_t n = g.x.size();
    std::vector<double> lam(n, 1.0 / static_cast<double>(n));
    double a = 0.0, b = 0.0;
    for (int it = 0; it < iters; ++it) {
        double suu = 0, suv = 0, svv = 0, suw = 0, svw = 0;
        for (std::size_t i = 0; i < n; ++i) {
            suu += lam[i] * g.u[i] * g.u[i];
            suv += lam[i] * g.u[i] * g.v[i];
            svv += lam[i] * g.v[i] * g.v[i];
            suw += lam[i] * g.u[i] * g.w[i];
            svw += lam[i] * g.v[i] * g.w[i];
        }
        const double det = suu * svv - suv * suv;
        if (std::abs(det) < 1e-300) break;
        a = (-suw * svv + svw * suv) / det;
        b = (-svw * suu + suw * suv) / det;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            lam[i] *= std::abs(residual_at(g, a, b, i));
            total += lam[i];
        }
        if (total <= 0.0) break;  // exact fit
        for (double& l : lam) l /= total;
    }
    return {a, b};
}

// 3-point exchange polish; the minimax solution of the 2-parameter linear
// problem equioscillates on 3 nodes
std::pair<double, double> exchange_fit(const FitGrid& g, double a0, double b0) {
    const std::size_t n = g.x.size();
    // start from the three largest-|r| local extrema of the seed residual
    std::vector<std::size_t> ref = {0, n / 2, n - 2};
    {
        std::vector<std::pair<double, std::size_t>> ext;
        for (std::size_t i = 0; i + 1 < n; ++i) {  // exclude x = 1 (residual pinned to 0)
            const double r = residual_at(g, a0, b0, i);
            const double rl = (i > 0) ? residual_at(g, a0, b0, i - 1) : r;
            const double rr = residual_at(g, a0, b0, i + 1);
            if ((std::abs(r) >= std::abs(rl) && std::abs(r) >= std::abs(rr)))
                ext.emplace_back(std::abs(r), i);
        }
        std::sort(ext.rbegin(), ext.rend());
        if (ext.size() >= 3) {
            ref = {ext[0].second, ext[1].second, ext[2].second};
            std::sort(ref.begin(), ref.end());
            if (ref[0] == ref[1] || ref[1] == ref[2]) ref = {0, n / 2, n - 2};
        }
    }
    double a = a0, b = b0;
    for (int it = 0; it < 80; ++it) {
        // solve a u_i + b v_i + s_i h = -w_i with alternating s_i
        double m[3][4];
        for (int k = 0; k < 3; ++k) {
            const std::size_t i = ref[k];
            m[k][0] = g.u[i];
            m[k][1] = g.v[i];
            m[k][2] = (k % 2 == 0) ? 1.0 : -1.0;
            m[k][3] = -g.w[i];
        }
        // gaussian elimination, 3x3
        for (int col = 0; col < 3; ++col) {
            int piv = col;
            for (int r = col + 1; r < 3; ++r)
                if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
            if (std::abs(m[piv][col]) < 1e-300) return {a, b};
            if (piv != col) std::swap(m[piv], m[col]);
            for (int r = 0; r < 3; ++r) {
                if (r == col) continue;
                const double f = m[r][col] / m[col][col];
                for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
            }
        }
        const double na = m[0][3] / m[0][0];
        const double nb = m[1][3] / m[1][1];
        const double h = m[2][3] / m[2][2];
        std::size_t worst = 0;
        const double mr = max_residual(g, na, nb, &worst);
        a = na;
        b = nb;
        if (mr <= std::abs(h) * (1.0 + 1e-12) + 1e-300) break;
        // insert worst node keeping sign alternation
        const double rs = residual_at(g, na, nb, worst);
        auto sign_at = [&](std::size_t i) { return residual_at(g, na, nb, i) >= 0 ? 1 : -1; };
        const int s = rs >= 0 ? 1 : -1;
        if (worst < ref[0]) {
            if (s == sign_at(ref[0])) ref[0] = worst;
            else ref = {worst, ref[0], ref[1]};
        } else if (worst > ref[2]) {
            if (s == sign_at(ref[2])) ref[2] = worst;
            else ref = {ref[1], ref[2], worst};
        } else {
            for (int k = 0; k < 3; ++k) {
                if (worst == ref[k]) break;
                if (k < 2 && worst > ref[k] && worst < ref[k + 1]) {
                    if (s == sign_at(ref[k])) ref[k] = worst;
                    else ref[k + 1] = worst;
                    break;
                }
            }
        }
    }
    return {a, b};
}

struct ScheduleKey {
    double p;
    int iters;
    double eps0;
    bool operator<(const ScheduleKey& o) const {
        return std::tie(p, iters, eps0) < std::tie(o.p, o.iters, o.eps0);
    }
};

std::map<ScheduleKey, CoefficientSchedule>& schedule_cache() {
    static std::map<ScheduleKey, CoefficientSchedule> cache;
    return cache;
}

std::mutex& schedule_mutex() {
    static std::mutex mu;
    return mu;
}

double eval_quintic(double a, double b, double c, double x) {
    const double x2 = x * x;
    return x * (a + x2 * (b + x2 * c));
}

// image of the fitted polynomial over [lo, hi] by dense scan
std::pair<double, double> poly_image(double a, double b, double c, double lo, double hi) {
    double mn = 1e300, mx = -1e300;
    const int n = 8001;
    for (int i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * i / (n - 1);
        const double y = eval_quintic(a, b, c, x);
        mn = std::min(mn, y);
        mx = std::max(mx, y);
    }
    return {mn, mx};
}

}  // namespace

void FractionalMapPlan::validate() const {
    if (!(p >= 1.0) || p > p_max) throw std::invalid_argument("plan: p outside [1, p_max]");
    if (ns_budget < 1 || ns_budget > 10) throw std::invalid_argument("plan: ns_budget outside [1, 10]");
    if (!(tol > 0.0) || tol >= 1.0) throw std::invalid_argument("plan: tol outside (0, 1)");
    if (!(eps_lower > 0.0) || eps_lower >= 1.0) throw std::invalid_argument("plan: eps outside (0, 1)");
    if (max_order < 0) throw std::invalid_argument("plan: negative max_order");
}

std::array<double, 4> fit_pinned_quintic(double q, double lo, double hi) {
    if (std::abs(q - 1.0) < 1e-14) return {1.0, 0.0, 0.0, 0.0};
    FitGrid g = make_grid(q, lo, hi);
    auto [a0, b0] = lawson_fit(g, 400);
    auto [a, b] = exchange_fit(g, a0, b0);
    // keep whichever is better on the grid
    if (max_residual(g, a0, b0) < max_residual(g, a, b)) {
        a = a0;
        b = b0;
    }
    return {a, b, 1.0 - a - b, max_residual(g, a, b)};
}

CoefficientSchedule fit_remez_schedule(double p, int iters, double eps0) {
    if (iters < 1) throw std::invalid_argument("fit_remez_schedule: iters < 1");
    if (!(eps0 > 0.0) || eps0 >= 1.0) throw std::invalid_argument("fit_remez_schedule: eps0 outside (0, 1)");
    if (!std::isinf(p) && p < 1.0) throw std::invalid_argument("fit_remez_schedule: p < 1");

    const double q = std::isinf(p) ? 0.0 : std::pow(p, -1.0 / iters);
    CoefficientSchedule s;
    s.p = p;
    s.iters = iters;
    s.eps0 = eps0;
    double lo = eps0, hi = 1.0;
    for (int t = 0; t < iters; ++t) {
        auto [a, b, c, res] = fit_pinned_quintic(q, lo, hi);
        if (res > kInfeasibleResidual && q > 0.0) {
            throw std::runtime_error(
                "fit_remez_schedule: minimax residual " + std::to_string(res) +
                " exceeds 0.5; increase the iteration count T");
        }
        s.coeffs.push_back({a, b, c});
        s.domains.push_back({lo, hi});
        s.residuals.push_back(res);
        auto [mn, mx] = poly_image(a, b, c, lo, hi);
        lo = std::max(mn, 1e-12);
        hi = std::max(mx, 1.0);
    }
    return s;
}

const CoefficientSchedule& default_polar_schedule(int budget) {
    // greedy pinned minimax toward the constant-1 target, fitted once per budget
    static std::map<int, CoefficientSchedule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(budget);
    if (it == cache.end()) {
        constexpr double kPolarEps0 = 0.008;
        it = cache.emplace(budget, fit_remez_schedule(
                                       std::numeric_limits<double>::infinity(), budget, kPolarEps0))
                 .first;
    }
    return it->second;
}

PolarResult polar_newton_schulz(const DenseMatrix& g, int budget, AlphaVariant alpha_variant) {
    if (budget < 1) throw std::invalid_argument("polar_newton_schulz: budget < 1");
    g.require_finite("polar_newton_schulz");
    const double alpha = spectral_norm_upper_bound(g, alpha_variant);
    if (alpha == 0.0) throw std::invalid_argument("polar_newton_schulz: zero matrix");

    const bool transposed = g.rows() > g.cols();
    DenseMatrix x = transposed ? transpose(g) : g;  // rows <= cols
    scale_in_place(x, 1.0 / alpha);

    const CoefficientSchedule& sched = default_polar_schedule(budget);
    for (int t = 0; t < budget; ++t) {
        const auto [a, b, c] = sched.coeffs[static_cast<std::size_t>(t)];
        DenseMatrix g1 = matmul_nt(x, x);   // X X^T, small side
        DenseMatrix g2 = matmul(g1, x);     // (X X^T) X
        DenseMatrix g3 = matmul(g1, g2);    // (X X^T)^2 X
        DenseMatrix next = scale(x, a);
        add_in_place(next, g2, b);
        add_in_place(next, g3, c);
        x = std::move(next);
    }

    PolarResult out;
    out.alpha = alpha;
    DenseMatrix gram = matmul_nt(x, x);  // small side
    for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) -= 1.0;
    out.residual = frobenius_norm(gram);
    out.polar = transposed ? transpose(x) : std::move(x);
    return out;
}

std::vector<double> binomial_coefficients(double e, int order) {
    std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
    c[0] = 1.0;
    for (int i = 1; i <= order; ++i) {
        c[static_cast<std::size_t>(i)] =
            c[static_cast<std::size_t>(i) - 1] * (e - i + 1) / static_cast<double>(i);
        if (std::abs(c[static_cast<std::size_t>(i)]) < 1e-300) {
            c.resize(static_cast<std::size_t>(i));  // drop underflowing tail silently
            break;
        }
    }
    return c;
}

AdaptiveOrder adaptive_order(double p, double eps, double tol, int max_order) {
    if (!(eps > 0.0) || eps >= 1.0) throw std::invalid_argument("adaptive_order: eps outside (0, 1)");
    if (!(tol > 0.0)) throw std::invalid_argument("adaptive_order: tol <= 0");
    constexpr int kGrid = 128;
    std::vector<double> x(kGrid), tgt(kGrid), term(kGrid, 1.0), sum(kGrid, 0.0);
    for (int i = 0; i < kGrid; ++i) {
        x[i] = std::exp(std::log(eps) + (0.0 - std::log(eps)) * i / (kGrid - 1));
        tgt[i] = std::pow(x[i], 1.0 / p);
    }
    const auto coef = binomial_coefficients(1.0 / p, max_order);
    for (int k = 0; k <= max_order; ++k) {
        if (k < static_cast<int>(coef.size())) {
            for (int i = 0; i < kGrid; ++i) sum[i] += coef[static_cast<std::size_t>(k)] * term[i];
        }
        double worst = 0.0;
        for (int i = 0; i < kGrid; ++i) worst = std::max(worst, std::abs(sum[i] - tgt[i]));
        if (worst <= tol) return {k, false};
        for (int i = 0; i < kGrid; ++i) term[i] *= (x[i] - 1.0);
    }
    return {max_order, true};
}

DenseMatrix taylor_fractional(const DenseMatrix& g, const PolarResult& polar, double p, int order) {
    if (p < 1.0) throw std::invalid_argument("taylor_fractional: p < 1");
    if (order < 0) throw std::invalid_argument("taylor_fractional: negative order");
    if (!g.same_shape(polar.polar)) throw std::invalid_argument("taylor_fractional: polar shape mismatch");

    const double alpha = polar.alpha;
    const auto coef = binomial_coefficients(1.0 / p, order);
    const int kk = static_cast<int>(coef.size()) - 1;

    // E on the small Gram side: rows<=cols uses G P^T - I, else P^T G - I
    const bool left = g.rows() <= g.cols();
    DenseMatrix e = left ? matmul_nt(g, polar.polar) : matmul_tn(polar.polar, g);
    scale_in_place(e, 1.0 / alpha);
    for (std::size_t i = 0; i < e.rows(); ++i) e(i, i) -= 1.0;

    const std::size_t d = e.rows();
    DenseMatrix s(d, d);
    for (std::size_t i = 0; i < d; ++i) s(i, i) = coef[static_cast<std::size_t>(kk)];
    for (int i = kk - 1; i >= 0; --i) {
        s = matmul(s, e);
        const double ci = coef[static_cast<std::size_t>(i)];
        for (std::size_t r = 0; r < d; ++r) s(r, r) += ci;
    }

    DenseMatrix out = left ? matmul(s, polar.polar) : matmul(polar.polar, s);
    scale_in_place(out, std::pow(alpha, 1.0 / p));
    return out;
}

double schedule_compose_scalar(const CoefficientSchedule& s, double x) {
    double y = x;
    for (const auto& t : s.coeffs) y = eval_quintic(t[0], t[1], t[2], y);
    return y;
}

double schedule_worst_error(const CoefficientSchedule& s, double lo, double hi, int grid) {
    const double q = std::isinf(s.p) ? 0.0 : 1.0 / s.p;
    double worst = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double x = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (grid - 1));
        worst = std::max(worst, std::abs(schedule_compose_scalar(s, x) - pow_target(x, q)));
    }
    return worst;
}

double taylor_route_scalar(double x, double p, int order, int budget) {
    const double h = schedule_compose_scalar(default_polar_schedule(budget), x);
    const auto coef = binomial_coefficients(1.0 / p, order);
    const double e = x * h - 1.0;
    double s = coef.back();
    for (int i = static_cast<int>(coef.size()) - 2; i >= 0; --i) s = s * e + coef[static_cast<std::size_t>(i)];
    return s * h;
}

DenseMatrix remez_fractional(const DenseMatrix& g, const CoefficientSchedule& schedule,
                             AlphaVariant alpha_variant) {
    g.require_finite("remez_fractional");
    const double alpha = spectral_norm_upper_bound(g, alpha_variant);
    if (alpha == 0.0) throw std::invalid_argument("remez_fractional: zero matrix");

    const bool transposed = g.rows() > g.cols();
    DenseMatrix x = transposed ? transpose(g) : g;
    scale_in_place(x, 1.0 / alpha);
    for (const auto& t : schedule.coeffs) {
        DenseMatrix g1 = matmul_nt(x, x);
        DenseMatrix g2 = matmul(g1, x);
        DenseMatrix g3 = matmul(g1, g2);
        DenseMatrix next = scale(x, t[0]);
        add_in_place(next, g2, t[1]);
        add_in_place(next, g3, t[2]);
        x = std::move(next);
    }
    if (transposed) x = transpose(x);
    const double q = std::isinf(schedule.p) ? 0.0 : 1.0 / schedule.p;
    scale_in_place(x, std::pow(alpha, q));
    return x;
}

namespace {

CoefficientSchedule cached_schedule(double p, int iters, double eps0) {
    std::lock_guard<std::mutex> lock(schedule_mutex());
    auto& cache = schedule_cache();
    const ScheduleKey key{p, iters, eps0};
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, fit_remez_schedule(p, iters, eps0)).first;
    return it->second;
}

}  // namespace

DenseMatrix fractional_map(const DenseMatrix& g, const FractionalMapPlan& plan) {
    plan.validate();
    g.require_finite("fractional_map");
    if (plan.p == 1.0) return g;  // Sigma^{1} reconstruction is the input itself

    switch (plan.method) {
        case FractionalMethod::svd: {
            auto r = svd(g);
            DenseMatrix us = r.u;
            for (std::size_t i = 0; i < us.rows(); ++i)
                for (std::size_t j = 0; j < us.cols(); ++j)
                    us(i, j) *= std::pow(r.sigma[j], 1.0 / plan.p);
            return matmul(us, r.vt);
        }
        case FractionalMethod::taylor: {
            PolarResult pr = polar_newton_schulz(g, plan.ns_budget, plan.alpha_variant);
            if (plan.p >= plan.p_max) {
                // numerically a Muon update: shortcut to the polar factor
                DenseMatrix out = pr.polar;
                scale_in_place(out, std::pow(pr.alpha, 1.0 / plan.p));
                return out;
            }
            int order = plan.fixed_order;
            if (order < 0) order = adaptive_order(plan.p, plan.eps_lower, plan.tol, plan.max_order).order;
            return taylor_fractional(g, pr, plan.p, order);
        }
        case FractionalMethod::remez: {
            CoefficientSchedule s = cached_schedule(plan.p, plan.ns_budget, plan.remez_eps0);
            return remez_fractional(g, s, plan.alpha_variant);
        }
    }
    throw std::logic_error("fractional_map: unknown method");
}

DenseMatrix schatten_lmo_direction(const DenseMatrix& g, double p) {
    if (p < 1.0) throw std::invalid_argument("schatten_lmo_direction: p < 1");
    auto r = svd(g);
    double norm_pow = 0.0;
    const bool inf_p = std::isinf(p);
    for (double s : r.sigma) {
        if (s <= 0.0) continue;
        norm_pow += inf_p ? 1.0 : std::pow(s, (p + 1.0) / p);
    }
    if (norm_pow <= 0.0) throw std::invalid_argument("schatten_lmo_direction: zero matrix");
    const double denom = std::pow(norm_pow, 1.0 / (p + 1.0));
    DenseMatrix us = r.u;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < us.cols(); ++j) {
            const double s = r.sigma[j];
            const double d = (s > 0.0) ? (inf_p ? 1.0 : std::pow(s, 1.0 / p)) : 0.0;
            us(i, j) *= -d / denom;
        }
    return matmul(us, r.vt);
}

nlohmann::json CoefficientSchedule::to_json() const {
    nlohmann::json j;
    if (std::isinf(p)) j["p"] = nullptr;
    else j["p"] = p;
    j["T"] = iters;
    j["eps0"] = eps0;
    j["coeffs"] = nlohmann::json::array();
    for (const auto& c : coeffs) j["coeffs"].push_back({c[0], c[1], c[2]});
    j["domains"] = nlohmann::json::array();
    for (const auto& d : domains) j["domains"].push_back({d[0], d[1]});
    return j;
}

CoefficientSchedule CoefficientSchedule::from_json(const nlohmann::json& j) {
    CoefficientSchedule s;
    s.p = j["p"].is_null() ? std::numeric_limits<double>::infinity() : j["p"].get<double>();
    s.iters = j["T"].get<int>();
    s.eps0 = j["eps0"].get<double>();
    for (const auto& c : j["coeffs"]) s.coeffs.push_back({c[0].get<double>(), c[1].get<double>(), c[2].get<double>()});
    for (const auto& d : j["domains"]) s.domains.push_back({d[0].get<double>(), d[1].get<double>()});
    s.residuals.assign(s.coeffs.size(), 0.0);
    return s;
}

}  // namespace skit
