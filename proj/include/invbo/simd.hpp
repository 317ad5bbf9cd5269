#pragma once
// Data-parallel inner loops used by the GP kernel and the dense layers of the
// toy VAE. Every kernel has a scalar reference and, on x86-64, an AVX2/FMA
// variant. The variant is picked once at startup from CPUID; INVBO_SIMD=scalar
// in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace invbo::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;
    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // sum_i ((a[i] - b[i]) * inv_scale[i])^2
    double (*scaled_sq_dist)(const double* a, const double* b, const double* inv_scale, std::size_t n);
    // y = W x + bias, W row-major rows x cols
    void (*matvec_bias)(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
                        std::size_t cols);
    // x_grad += W^T g, W row-major rows x cols
    void (*matvec_t_accum)(const double* w, const double* g, double* x_grad, std::size_t rows, std::size_t cols);
    // W_grad += g x^T, W row-major rows x cols
    void (*outer_accum)(const double* g, const double* x, double* w_grad, std::size_t rows, std::size_t cols);
};

const KernelTable& scalar_kernels();
// nullptr when the build or the host lacks AVX2+FMA.
const KernelTable* avx2_kernels();

const KernelTable& active();
Isa active_isa();
bool isa_available(Isa isa);
// Tests use this to pin a variant; throws std::invalid_argument when unavailable.
void select(Isa isa);
std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double scaled_sq_dist(std::span<const double> a, std::span<const double> b,
                             std::span<const double> inv_scale) {
    return active().scaled_sq_dist(a.data(), b.data(), inv_scale.data(), a.size());
}

}  // namespace invbo::simd
