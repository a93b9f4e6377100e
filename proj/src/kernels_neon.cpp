// NEON lane (aarch64). Mirrors the AVX2 lane with 2-wide f64 vectors; same
// bit-exactness contract, so vmul+vadd instead of fused vfma.

#include "glw/kernels.hpp"

#include <cmath>

#if defined(__aarch64__)
#define GLW_HAVE_NEON_BUILD 1
#include <arm_neon.h>
#else
#define GLW_HAVE_NEON_BUILD 0
#endif

namespace glw::kern {

#if GLW_HAVE_NEON_BUILD

namespace {

void mm_acc_neon(double* c, const double* a, const double* b,
                 std::size_t n, std::size_t k, std::size_t m) {
    const std::size_t m2 = m & ~std::size_t(1);
    for (std::size_t i = 0; i < n; ++i) {
        double* ci = c + i * m;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * m;
            const float64x2_t av2 = vdupq_n_f64(av);
            std::size_t j = 0;
            for (; j < m2; j += 2) {
                float64x2_t cj = vld1q_f64(ci + j);
                cj = vaddq_f64(cj, vmulq_f64(av2, vld1q_f64(bp + j)));
                vst1q_f64(ci + j, cj);
            }
            for (; j < m; ++j) ci[j] += av * bp[j];
        }
    }
}

void mm_ta_acc_neon(double* c, const double* a, const double* b,
                    std::size_t n, std::size_t k, std::size_t m) {
    const std::size_t m2 = m & ~std::size_t(1);
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a + i * k;
        const double* bi = b + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            double* cp = c + p * m;
            const float64x2_t av2 = vdupq_n_f64(av);
            std::size_t j = 0;
            for (; j < m2; j += 2) {
                float64x2_t cj = vld1q_f64(cp + j);
                cj = vaddq_f64(cj, vmulq_f64(av2, vld1q_f64(bi + j)));
                vst1q_f64(cp + j, cj);
            }
            for (; j < m; ++j) cp[j] += av * bi[j];
        }
    }
}

void add_neon(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_neon(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_neon(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_neon(double* y, double s, const double* x, std::size_t n) {
    const float64x2_t s2 = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t yi = vld1q_f64(y + i);
        yi = vaddq_f64(yi, vmulq_f64(s2, vld1q_f64(x + i)));
        vst1q_f64(y + i, yi);
    }
    for (; i < n; ++i) y[i] += s * x[i];
}

void scale_neon(double* out, const double* a, double s, std::size_t n) {
    const float64x2_t s2 = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), s2));
    for (; i < n; ++i) out[i] = a[i] * s;
}

void relu_neon(double* out, const double* x, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmaxq_f64(vld1q_f64(x + i), zero));
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_neon(double* dx, const double* x, const double* dy, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint64x2_t mask = vcgtq_f64(vld1q_f64(x + i), zero);
        const float64x2_t gated =
            vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(vld1q_f64(dy + i))));
        vst1q_f64(dx + i, vaddq_f64(vld1q_f64(dx + i), gated));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0) dx[i] += dy[i];
    }
}

void tanh_bwd_neon(double* dx, const double* y, const double* dy, std::size_t n) {
    const float64x2_t one = vdupq_n_f64(1.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t yi = vld1q_f64(y + i);
        const float64x2_t g = vsubq_f64(one, vmulq_f64(yi, yi));
        const float64x2_t upd = vmulq_f64(g, vld1q_f64(dy + i));
        vst1q_f64(dx + i, vaddq_f64(vld1q_f64(dx + i), upd));
    }
    for (; i < n; ++i) dx[i] += (1.0 - y[i] * y[i]) * dy[i];
}

void logistic_bwd_neon(double* dx, const double* y, const double* dy, std::size_t n) {
    const float64x2_t one = vdupq_n_f64(1.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t yi = vld1q_f64(y + i);
        const float64x2_t g = vmulq_f64(yi, vsubq_f64(one, yi));
        const float64x2_t upd = vmulq_f64(g, vld1q_f64(dy + i));
        vst1q_f64(dx + i, vaddq_f64(vld1q_f64(dx + i), upd));
    }
    for (; i < n; ++i) dx[i] += y[i] * (1.0 - y[i]) * dy[i];
}

void adam_step_neon(double* p, double* m, double* v, const double* g, std::size_t n,
                    double lr, double b1, double b2, double eps, double bc1, double bc2) {
    const float64x2_t b1v = vdupq_n_f64(b1);
    const float64x2_t b1c = vdupq_n_f64(1.0 - b1);
    const float64x2_t b2v = vdupq_n_f64(b2);
    const float64x2_t b2c = vdupq_n_f64(1.0 - b2);
    const float64x2_t bc1v = vdupq_n_f64(bc1);
    const float64x2_t bc2v = vdupq_n_f64(bc2);
    const float64x2_t lrv = vdupq_n_f64(lr);
    const float64x2_t epsv = vdupq_n_f64(eps);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t gi = vld1q_f64(g + i);
        float64x2_t mi = vld1q_f64(m + i);
        float64x2_t vi = vld1q_f64(v + i);
        mi = vaddq_f64(vmulq_f64(b1v, mi), vmulq_f64(b1c, gi));
        vi = vaddq_f64(vmulq_f64(b2v, vi), vmulq_f64(b2c, vmulq_f64(gi, gi)));
        vst1q_f64(m + i, mi);
        vst1q_f64(v + i, vi);
        const float64x2_t mhat = vdivq_f64(mi, bc1v);
        const float64x2_t vhat = vdivq_f64(vi, bc2v);
        const float64x2_t denom = vaddq_f64(vsqrtq_f64(vhat), epsv);
        const float64x2_t step = vmulq_f64(lrv, vdivq_f64(mhat, denom));
        vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), step));
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps));
    }
}

constexpr Ops kNeonOps = {
    mm_acc_neon, mm_ta_acc_neon,
    add_neon,    sub_neon,    mul_neon,      axpy_neon, scale_neon,
    relu_neon,   relu_bwd_neon, tanh_bwd_neon, logistic_bwd_neon,
    adam_step_neon,
    "neon",
};

}  // namespace

const Ops* neon_ops() { return &kNeonOps; }

#else

const Ops* neon_ops() { return nullptr; }

#endif  // GLW_HAVE_NEON_BUILD

}  // namespace glw::kern
