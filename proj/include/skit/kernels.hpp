// SPDX-License-Identifier: Apache-2.0
//
// Dense kernels. The hot matmul-family loops come in two flavours: a plain
// serial reference and an OpenMP row-parallel version. Both produce
// bit-identical results (each output element is computed by exactly one
// thread with the same serial inner loop), so the parallel path is the
// default and the serial one is kept for testing and benchmarking.

#pragma once

#include <skit/dense.hpp>

namespace skit {

// C = A * B
DenseMatrix matmul_serial(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// C = A^T * B
DenseMatrix matmul_tn_serial(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);

// C = A * B^T
DenseMatrix matmul_nt_serial(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double c);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
// elementwise (a + shift)^e
DenseMatrix elementwise_pow(const DenseMatrix& a, double e, double shift = 0.0);

void add_in_place(DenseMatrix& a, const DenseMatrix& b, double c = 1.0);  // a += c*b
void scale_in_place(DenseMatrix& a, double c);

double frobenius_norm(const DenseMatrix& a);
double frobenius_inner(const DenseMatrix& a, const DenseMatrix& b);
double max_abs(const DenseMatrix& a);

// number of threads the worker pool may use (honours SKIT_THREADS)
int worker_threads();
void set_worker_threads(int n);

}  // namespace skit
