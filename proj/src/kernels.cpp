#include "glw/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>

#include "glw/common.hpp"

namespace glw::kern {

namespace {

// ---------------------------------------------------------------------------
// Scalar reference lane. Loop orders are part of the contract: per output
// element the reduction index ascends, which every SIMD lane replicates.
// ---------------------------------------------------------------------------

void mm_acc_scalar(double* c, const double* a, const double* b,
                   std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        double* ci = c + i * m;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * m;
            for (std::size_t j = 0; j < m; ++j) {
                ci[j] += av * bp[j];
            }
        }
    }
}

void mm_ta_acc_scalar(double* c, const double* a, const double* b,
                      std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a + i * k;
        const double* bi = b + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            double* cp = c + p * m;
            for (std::size_t j = 0; j < m; ++j) {
                cp[j] += av * bi[j];
            }
        }
    }
}

void add_scalar(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_scalar(double* y, double s, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

void scale_scalar(double* out, const double* a, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void relu_scalar(double* out, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_scalar(double* dx, const double* x, const double* dy, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > 0.0) dx[i] += dy[i];
    }
}

void tanh_bwd_scalar(double* dx, const double* y, const double* dy, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dx[i] += (1.0 - y[i] * y[i]) * dy[i];
}

void logistic_bwd_scalar(double* dx, const double* y, const double* dy, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dx[i] += y[i] * (1.0 - y[i]) * dy[i];
}

void adam_step_scalar(double* p, double* m, double* v, const double* g, std::size_t n,
                      double lr, double b1, double b2, double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps));
    }
}

constexpr Ops kScalarOps = {
    mm_acc_scalar, mm_ta_acc_scalar,
    add_scalar,    sub_scalar,    mul_scalar,      axpy_scalar, scale_scalar,
    relu_scalar,   relu_bwd_scalar, tanh_bwd_scalar, logistic_bwd_scalar,
    adam_step_scalar,
    "scalar",
};

const Ops* resolve() {
    const char* env = std::getenv("GLW_KERNEL");
    std::string want = env ? env : "auto";
    if (want == "scalar") return &kScalarOps;
    if (want == "avx2") {
        const Ops* lane = avx2_ops();
        if (!lane) throw ConfigError("GLW_KERNEL=avx2 but AVX2 lane unavailable");
        return lane;
    }
    if (want == "neon") {
        const Ops* lane = neon_ops();
        if (!lane) throw ConfigError("GLW_KERNEL=neon but NEON lane unavailable");
        return lane;
    }
    if (want != "auto") throw ConfigError("unknown GLW_KERNEL value: " + want);
    if (const Ops* lane = avx2_ops()) return lane;
    if (const Ops* lane = neon_ops()) return lane;
    return &kScalarOps;
}

const Ops* g_active = nullptr;
std::mutex g_mutex;

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

const Ops& active() {
    std::lock_guard<std::mutex> lock(g_mutex);
    if (!g_active) g_active = resolve();
    return *g_active;
}

void force(const std::string& name) {
    std::lock_guard<std::mutex> lock(g_mutex);
    if (name == "scalar") {
        g_active = &kScalarOps;
    } else if (name == "avx2") {
        const Ops* lane = avx2_ops();
        if (!lane) throw ConfigError("AVX2 lane unavailable on this CPU/build");
        g_active = lane;
    } else if (name == "neon") {
        const Ops* lane = neon_ops();
        if (!lane) throw ConfigError("NEON lane unavailable on this CPU/build");
        g_active = lane;
    } else if (name == "auto") {
        g_active = resolve();
    } else {
        throw ConfigError("unknown kernel lane: " + name);
    }
}

double sum_seq(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double sq_diff_sum_seq(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

bool all_finite(const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i])) return false;
    }
    return true;
}

}  // namespace glw::kern
