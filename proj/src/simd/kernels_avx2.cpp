// Compiled with -mavx2 -mfma; only reached after a CPUID check.
#include <immintrin.h>

#include "invbo/simd.hpp"

namespace invbo::simd {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double scaled_sq_dist_avx2(const double* a, const double* b, const double* inv_scale, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)),
                                        _mm256_loadu_pd(inv_scale + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double t = (a[i] - b[i]) * inv_scale[i];
        s += t * t;
    }
    return s;
}

void matvec_bias_avx2(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
                      std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = bias[r] + dot_avx2(w + r * cols, x, cols);
}

void matvec_t_accum_avx2(const double* w, const double* g, double* x_grad, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy_avx2(g[r], w + r * cols, x_grad, cols);
}

void outer_accum_avx2(const double* g, const double* x, double* w_grad, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy_avx2(g[r], x, w_grad + r * cols, cols);
}

}  // namespace

const KernelTable* avx2_kernels() {
    static const KernelTable table{Isa::Avx2,        dot_avx2,
                                   axpy_avx2,        scaled_sq_dist_avx2,
                                   matvec_bias_avx2, matvec_t_accum_avx2,
                                   outer_accum_avx2};
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &table : nullptr;
}

}  // namespace invbo::simd
