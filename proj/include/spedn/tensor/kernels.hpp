#pragma once

#include <cstddef>

// Dense row-major kernels. Every output element is accumulated by one thread
// in ascending k order, so the serial and OpenMP versions agree bit for bit.

namespace spedn::tensor::kernels {

namespace serial {

/// C(m x n) += A(m x k) * B(k x n)
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
/// C(m x n) += A(m x k) * B(n x k)^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
/// C(m x n) += A(k x m)^T * B(k x n)
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
/// y += alpha * x
void axpy(std::size_t n, double alpha, const double* x, double* y);

}  // namespace serial

namespace parallel {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
void axpy(std::size_t n, double alpha, const double* x, double* y);

}  // namespace parallel

// The versions the autodiff ops call.
using parallel::axpy;
using parallel::gemm_nn;
using parallel::gemm_nt;
using parallel::gemm_tn;

/// Below this many multiply-adds the OpenMP kernels stay on one thread.
inline constexpr std::size_t kParallelWork = 1 << 16;

}  // namespace spedn::tensor::kernels
