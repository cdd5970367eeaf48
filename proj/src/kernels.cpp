#include "slim/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slim::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// Below this many multiply-adds the parallel fork costs more than it saves.
constexpr std::size_t kParallelMinWork = 64 * 1024;

// One output row of C: c_row[j] = alpha * sum_p op(A)[i,p] * op(B)[p,j] + beta * c_row[j].
// Accumulation runs in ascending p for every variant; see header.
inline void gemm_row(Transpose ta, Transpose tb, std::size_t i, std::size_t n, std::size_t k,
                     double alpha, const double* a, std::size_t lda, const double* b,
                     std::size_t ldb, double beta, double* c_row) {
    for (std::size_t j = 0; j < n; ++j) c_row[j] = (beta == 0.0) ? 0.0 : beta * c_row[j];
    if (ta == Transpose::no && tb == Transpose::no) {
        for (std::size_t p = 0; p < k; ++p) {
            double av = alpha * a[i * lda + p];
            const double* brow = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) c_row[j] += av * brow[j];
        }
    } else if (ta == Transpose::no && tb == Transpose::yes) {
        const double* arow = a + i * lda;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * ldb;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            c_row[j] += alpha * s;
        }
    } else if (ta == Transpose::yes && tb == Transpose::no) {
        for (std::size_t p = 0; p < k; ++p) {
            double av = alpha * a[p * lda + i];
            const double* brow = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) c_row[j] += av * brow[j];
        }
    } else {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a[p * lda + i] * b[j * ldb + p];
            c_row[j] += alpha * s;
        }
    }
}

} // namespace

void gemm_serial(Transpose ta, Transpose tb, std::size_t m, std::size_t n, std::size_t k,
                 double alpha, const double* a, std::size_t lda, const double* b, std::size_t ldb,
                 double beta, double* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i)
        gemm_row(ta, tb, i, n, k, alpha, a, lda, b, ldb, beta, c + i * ldc);
}

void gemm_parallel(Transpose ta, Transpose tb, std::size_t m, std::size_t n, std::size_t k,
                   double alpha, const double* a, std::size_t lda, const double* b, std::size_t ldb,
                   double beta, double* c, std::size_t ldc) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        std::size_t i = static_cast<std::size_t>(ii);
        gemm_row(ta, tb, i, n, k, alpha, a, lda, b, ldb, beta, c + i * ldc);
    }
}

void gemm(Transpose ta, Transpose tb, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double beta, double* c, std::size_t ldc) {
    if (g_parallel.load(std::memory_order_relaxed) && max_threads() > 1 &&
        m * n * k >= kParallelMinWork) {
        gemm_parallel(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    } else {
        gemm_serial(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    }
}

void set_parallel(bool enabled) { g_parallel.store(enabled, std::memory_order_relaxed); }

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace slim::kernels
