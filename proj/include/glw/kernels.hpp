#pragma once

#include <cstddef>
#include <string>

namespace glw::kern {

// Dense f64 kernels behind a runtime-dispatched table. Every SIMD variant is
// required to produce bit-identical results to the scalar reference: matmuls
// vectorize across output columns so each output element keeps its sequential
// left-to-right reduction order, and elementwise ops are one rounding per
// element in every lane. True reductions (sum, sq_diff_sum) and libm
// transcendentals stay scalar in all lanes.
struct Ops {
    // C[n x m] += A[n x k] * B[k x m]
    void (*mm_acc)(double* c, const double* a, const double* b,
                   std::size_t n, std::size_t k, std::size_t m);
    // C[k x m] += A^T[k x n] * B[n x m]   (A stored n x k)
    void (*mm_ta_acc)(double* c, const double* a, const double* b,
                      std::size_t n, std::size_t k, std::size_t m);
    void (*add)(double* out, const double* a, const double* b, std::size_t n);
    void (*sub)(double* out, const double* a, const double* b, std::size_t n);
    void (*mul)(double* out, const double* a, const double* b, std::size_t n);
    // y[i] += s * x[i]
    void (*axpy)(double* y, double s, const double* x, std::size_t n);
    void (*scale)(double* out, const double* a, double s, std::size_t n);
    void (*relu)(double* out, const double* x, std::size_t n);
    // dx[i] += dy[i] where x[i] > 0
    void (*relu_bwd)(double* dx, const double* x, const double* dy, std::size_t n);
    // dx[i] += (1 - y[i]^2) * dy[i]  (y = tanh(x))
    void (*tanh_bwd)(double* dx, const double* y, const double* dy, std::size_t n);
    // dx[i] += y[i] * (1 - y[i]) * dy[i]  (y = logistic(x))
    void (*logistic_bwd)(double* dx, const double* y, const double* dy, std::size_t n);
    // Fused Adam update with precomputed bias corrections bc1 = 1-b1^t, bc2 = 1-b2^t.
    void (*adam_step)(double* p, double* m, double* v, const double* g, std::size_t n,
                      double lr, double b1, double b2, double eps, double bc1, double bc2);
    const char* name;
};

// Scalar lane is always available.
const Ops& scalar_ops();
// Returns nullptr when the CPU (or build) lacks the lane.
const Ops* avx2_ops();
const Ops* neon_ops();

// Active table; first call resolves GLW_KERNEL (auto|scalar|avx2|neon) and CPU
// support, later calls are a load.
const Ops& active();

// Test hook: force a lane by name. Throws ConfigError for unknown/unsupported.
void force(const std::string& name);

// Scalar helpers shared by all lanes.
double sum_seq(const double* x, std::size_t n);                       // strict left-to-right
double sq_diff_sum_seq(const double* a, const double* b, std::size_t n);
bool all_finite(const double* x, std::size_t n);

}  // namespace glw::kern
