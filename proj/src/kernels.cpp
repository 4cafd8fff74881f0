// SPDX-License-Identifier: Apache-2.0

#include <skit/kernels.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace skit {

namespace {

// below this many output elements the parallel dispatch is not worth it
constexpr std::size_t kParallelThreshold = 64 * 64;

std::atomic<int> g_worker_threads{0};

int detect_threads() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
#else
    int n = 1;
#endif
    if (const char* env = std::getenv("SKIT_THREADS")) {
        int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return std::max(n, 1);
}

void check_mul(std::size_t inner_a, std::size_t inner_b, const char* who) {
    if (inner_a != inner_b) throw std::invalid_argument(std::string(who) + ": inner dimension mismatch");
}

}  // namespace

int worker_threads() {
    int n = g_worker_threads.load();
    if (n == 0) {
        n = detect_threads();
        g_worker_threads.store(n);
    }
    return n;
}

void set_worker_threads(int n) { g_worker_threads.store(std::max(n, 1)); }

DenseMatrix matmul_serial(const DenseMatrix& a, const DenseMatrix& b) {
    check_mul(a.cols(), b.rows(), "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    DenseMatrix c(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c.data() + i * n;
        const double* ai = a.data() + i * k;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = ai[l];
            if (av == 0.0) continue;
            const double* bl = b.data() + l * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
    return c;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    check_mul(a.cols(), b.rows(), "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (m * n < kParallelThreshold) return matmul_serial(a, b);
    DenseMatrix c(m, n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_threads())
#endif
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* ci = c.data() + i * n;
        const double* ai = a.data() + i * k;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = ai[l];
            if (av == 0.0) continue;
            const double* bl = b.data() + l * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
    return c;
}

DenseMatrix matmul_tn_serial(const DenseMatrix& a, const DenseMatrix& b) {
    check_mul(a.rows(), b.rows(), "matmul_tn");
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    DenseMatrix c(m, n);
    for (std::size_t l = 0; l < k; ++l) {
        const double* al = a.data() + l * m;
        const double* bl = b.data() + l * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = al[i];
            if (av == 0.0) continue;
            double* ci = c.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    check_mul(a.rows(), b.rows(), "matmul_tn");
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    if (m * n < kParallelThreshold) return matmul_tn_serial(a, b);
    DenseMatrix c(m, n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_threads())
#endif
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* ci = c.data() + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = a.data()[l * m + i];
            if (av == 0.0) continue;
            const double* bl = b.data() + l * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
    return c;
}

DenseMatrix matmul_nt_serial(const DenseMatrix& a, const DenseMatrix& b) {
    check_mul(a.cols(), b.cols(), "matmul_nt");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    DenseMatrix c(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a.data() + i * k;
        double* ci = c.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b.data() + j * k;
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
            ci[j] = s;
        }
    }
    return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    check_mul(a.cols(), b.cols(), "matmul_nt");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    if (m * n < kParallelThreshold) return matmul_nt_serial(a, b);
    DenseMatrix c(m, n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_threads())
#endif
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double* ai = a.data() + i * k;
        double* ci = c.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b.data() + j * k;
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
            ci[j] = s;
        }
    }
    return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

static void check_shape(const DenseMatrix& a, const DenseMatrix& b, const char* who) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a, b, "add");
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.storage()[i] += b.storage()[i];
    return c;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a, b, "sub");
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.storage()[i] -= b.storage()[i];
    return c;
}

DenseMatrix scale(const DenseMatrix& a, double c) {
    DenseMatrix r = a;
    for (double& v : r.storage()) v *= c;
    return r;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a, b, "hadamard");
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.storage()[i] *= b.storage()[i];
    return c;
}

DenseMatrix elementwise_pow(const DenseMatrix& a, double e, double shift) {
    DenseMatrix c = a;
    for (double& v : c.storage()) v = std::pow(v + shift, e);
    return c;
}

void add_in_place(DenseMatrix& a, const DenseMatrix& b, double c) {
    check_shape(a, b, "add_in_place");
    for (std::size_t i = 0; i < a.size(); ++i) a.storage()[i] += c * b.storage()[i];
}

void scale_in_place(DenseMatrix& a, double c) {
    for (double& v : a.storage()) v *= c;
}

double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.storage()) s += v * v;
    return std::sqrt(s);
}

double frobenius_inner(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a, b, "frobenius_inner");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.storage()[i] * b.storage()[i];
    return s;
}

double max_abs(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.storage()) s = std::max(s, std::abs(v));
    return s;
}

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, RngState& rng) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("gaussian_matrix: empty shape");
    DenseMatrix m(rows, cols);
    for (double& v : m.storage()) v = rng.next_normal();
    return m;
}

}  // namespace skit
