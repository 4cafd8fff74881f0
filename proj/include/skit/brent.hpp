// SPDX-License-Identifier: Apache-2.0
//
// Bounded scalar minimization: golden-section with parabolic interpolation
// steps, Brent style. Total: hard iteration cap, converges when the bracket
// width falls below xtol.

#pragma once

#include <cmath>
#include <utility>

namespace skit {

struct BrentResult {
    double x = 0.0;
    double f = 0.0;
    int iterations = 0;
};

template <class F>
BrentResult minimize_scalar(F&& f, double lo, double hi, double xtol, int max_iter = 100) {
    constexpr double golden = 0.3819660112501051;
    double a = lo, b = hi;
    double x = a + golden * (b - a);
    double w = x, v = x;
    double fx = f(x), fw = fx, fv = fx;
    double delta = 0.0, delta2 = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
        const double mid = 0.5 * (a + b);
        const double tol1 = xtol * 0.5;
        if (b - a < xtol || std::abs(x - mid) <= 2.0 * tol1 - 0.5 * (b - a)) break;
        double d = 0.0;
        bool parabolic_ok = false;
        if (std::abs(delta2) > tol1) {
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double td = delta2;
            delta2 = delta;
            if (std::abs(p) < std::abs(0.5 * q * td) && p > q * (a - x) && p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < 2.0 * tol1 || b - u < 2.0 * tol1) d = (x < mid) ? tol1 : -tol1;
                parabolic_ok = true;
            }
        }
        if (!parabolic_ok) {
            delta2 = (x < mid) ? b - x : a - x;
            d = golden * delta2;
        }
        delta = d;
        const double u = (std::abs(d) >= tol1) ? x + d : x + (d > 0 ? tol1 : -tol1);
        const double fu = f(u);
        if (fu <= fx) {
            if (u < x) b = x; else a = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return {x, fx, it};
}

template <class F>
BrentResult maximize_scalar(F&& f, double lo, double hi, double xtol, int max_iter = 100) {
    auto neg = [&](double t) { return -f(t); };
    BrentResult r = minimize_scalar(neg, lo, hi, xtol, max_iter);
    r.f = -r.f;
    return r;
}

}  // namespace skit
