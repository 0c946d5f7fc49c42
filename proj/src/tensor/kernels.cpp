#include "spedn/tensor/kernels.hpp"

namespace spedn::tensor::kernels {

namespace serial {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] += s;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a[p * m + i];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace serial

namespace parallel {

// Rows of C are independent, so splitting them keeps each element's
// summation order identical to the serial kernel.

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  const bool big = m * n * k >= kParallelWork;
  if (m == 1 && big) {
    constexpr std::size_t kChunk = 64;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t sb = 0; sb < static_cast<std::ptrdiff_t>((n + kChunk - 1) / kChunk); ++sb) {
      const std::size_t lo = static_cast<std::size_t>(sb) * kChunk, hi = lo + kChunk < n ? lo + kChunk : n;
      for (std::size_t p = 0; p < k; ++p) {
        const double ap = a[p];
        const double* bp = b + p * n;
        for (std::size_t j = lo; j < hi; ++j) c[j] += ap * bp[j];
      }
    }
    return;
  }
#pragma omp parallel for schedule(static) if (big && m > 1)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(m); ++si) {
    const auto i = static_cast<std::size_t>(si);
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  const bool big = m * n * k >= kParallelWork;
  if (m == 1) {
    // single row: split the columns instead
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t sj = 0; sj < static_cast<std::ptrdiff_t>(n); ++sj) {
      const auto j = static_cast<std::size_t>(sj);
      const double* bj = b + j * k;
      double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += a[p] * bj[p];
      c[j] += s;
    }
    return;
  }
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(m); ++si) {
    const auto i = static_cast<std::size_t>(si);
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] += s;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  const bool big = m > 1 && m * n * k >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(m); ++si) {
    const auto i = static_cast<std::size_t>(si);
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a[p * m + i];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
#pragma omp parallel for schedule(static) if (n >= kParallelWork)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    y[i] += alpha * x[i];
  }
}

}  // namespace parallel

}  // namespace spedn::tensor::kernels
