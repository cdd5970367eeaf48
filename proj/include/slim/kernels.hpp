#pragma once

#include <cstddef>

namespace slim::kernels {

enum class Transpose { no, yes };

/// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C, with op(A) [m x k],
/// op(B) [k x n], C [m x n]. lda/ldb/ldc are row strides of the stored arrays.
///
/// Two implementations share one contract: `gemm_serial` is the reference,
/// `gemm_parallel` splits rows of C across OpenMP threads. Both accumulate
/// each C element in ascending-p order, so their results are bitwise
/// identical and the dispatching `gemm` can pick either freely.
void gemm_serial(Transpose ta, Transpose tb, std::size_t m, std::size_t n, std::size_t k,
                 double alpha, const double* a, std::size_t lda, const double* b, std::size_t ldb,
                 double beta, double* c, std::size_t ldc);

void gemm_parallel(Transpose ta, Transpose tb, std::size_t m, std::size_t n, std::size_t k,
                   double alpha, const double* a, std::size_t lda, const double* b, std::size_t ldb,
                   double beta, double* c, std::size_t ldc);

void gemm(Transpose ta, Transpose tb, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double beta, double* c, std::size_t ldc);

/// Runtime switch for the dispatching gemm(). Defaults to on; with one OpenMP
/// thread (or below the work threshold) gemm() falls back to the serial path.
void set_parallel(bool enabled);
bool parallel_enabled();

/// Number of OpenMP threads gemm_parallel would use (1 without OpenMP).
int max_threads();

} // namespace slim::kernels
