#include "invbo/simd.hpp"

namespace invbo::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double scaled_sq_dist_scalar(const double* a, const double* b, const double* inv_scale, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (a[i] - b[i]) * inv_scale[i];
        s += t * t;
    }
    return s;
}

void matvec_bias_scalar(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
                        std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = bias[r] + dot_scalar(w + r * cols, x, cols);
}

void matvec_t_accum_scalar(const double* w, const double* g, double* x_grad, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy_scalar(g[r], w + r * cols, x_grad, cols);
}

void outer_accum_scalar(const double* g, const double* x, double* w_grad, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy_scalar(g[r], x, w_grad + r * cols, cols);
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{Isa::Scalar,         dot_scalar,
                                   axpy_scalar,         scaled_sq_dist_scalar,
                                   matvec_bias_scalar,  matvec_t_accum_scalar,
                                   outer_accum_scalar};
    return table;
}

}  // namespace invbo::simd
