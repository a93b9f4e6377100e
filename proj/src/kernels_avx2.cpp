// AVX2 lane. Compiled with -mavx2 (no FMA: scalar code rounds mul and add
// separately, so fused ops would break bit-equality between lanes).

#include "glw/kernels.hpp"

#include <cmath>

#if defined(__x86_64__) || defined(__i386__)
#define GLW_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#else
#define GLW_HAVE_AVX2_BUILD 0
#endif

namespace glw::kern {

#if GLW_HAVE_AVX2_BUILD

namespace {

void mm_acc_avx2(double* c, const double* a, const double* b,
                 std::size_t n, std::size_t k, std::size_t m) {
    const std::size_t m4 = m & ~std::size_t(3);
    for (std::size_t i = 0; i < n; ++i) {
        double* ci = c + i * m;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * m;
            const __m256d av4 = _mm256_set1_pd(av);
            std::size_t j = 0;
            for (; j < m4; j += 4) {
                __m256d cj = _mm256_loadu_pd(ci + j);
                cj = _mm256_add_pd(cj, _mm256_mul_pd(av4, _mm256_loadu_pd(bp + j)));
                _mm256_storeu_pd(ci + j, cj);
            }
            for (; j < m; ++j) ci[j] += av * bp[j];
        }
    }
}

void mm_ta_acc_avx2(double* c, const double* a, const double* b,
                    std::size_t n, std::size_t k, std::size_t m) {
    const std::size_t m4 = m & ~std::size_t(3);
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a + i * k;
        const double* bi = b + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            double* cp = c + p * m;
            const __m256d av4 = _mm256_set1_pd(av);
            std::size_t j = 0;
            for (; j < m4; j += 4) {
                __m256d cj = _mm256_loadu_pd(cp + j);
                cj = _mm256_add_pd(cj, _mm256_mul_pd(av4, _mm256_loadu_pd(bi + j)));
                _mm256_storeu_pd(cp + j, cj);
            }
            for (; j < m; ++j) cp[j] += av * bi[j];
        }
    }
}

void add_avx2(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_avx2(double* y, double s, const double* x, std::size_t n) {
    const __m256d s4 = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yi = _mm256_loadu_pd(y + i);
        yi = _mm256_add_pd(yi, _mm256_mul_pd(s4, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, yi);
    }
    for (; i < n; ++i) y[i] += s * x[i];
}

void scale_avx2(double* out, const double* a, double s, std::size_t n) {
    const __m256d s4 = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), s4));
    }
    for (; i < n; ++i) out[i] = a[i] * s;
}

void relu_avx2(double* out, const double* x, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_avx2(double* dx, const double* x, const double* dy, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        const __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
        _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), gated));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0) dx[i] += dy[i];
    }
}

void tanh_bwd_avx2(double* dx, const double* y, const double* dy, std::size_t n) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d yi = _mm256_loadu_pd(y + i);
        const __m256d g = _mm256_sub_pd(one, _mm256_mul_pd(yi, yi));
        const __m256d upd = _mm256_mul_pd(g, _mm256_loadu_pd(dy + i));
        _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), upd));
    }
    for (; i < n; ++i) dx[i] += (1.0 - y[i] * y[i]) * dy[i];
}

void logistic_bwd_avx2(double* dx, const double* y, const double* dy, std::size_t n) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d yi = _mm256_loadu_pd(y + i);
        const __m256d g = _mm256_mul_pd(yi, _mm256_sub_pd(one, yi));
        const __m256d upd = _mm256_mul_pd(g, _mm256_loadu_pd(dy + i));
        _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), upd));
    }
    for (; i < n; ++i) dx[i] += y[i] * (1.0 - y[i]) * dy[i];
}

void adam_step_avx2(double* p, double* m, double* v, const double* g, std::size_t n,
                    double lr, double b1, double b2, double eps, double bc1, double bc2) {
    const __m256d b1v = _mm256_set1_pd(b1);
    const __m256d b1c = _mm256_set1_pd(1.0 - b1);
    const __m256d b2v = _mm256_set1_pd(b2);
    const __m256d b2c = _mm256_set1_pd(1.0 - b2);
    const __m256d bc1v = _mm256_set1_pd(bc1);
    const __m256d bc2v = _mm256_set1_pd(bc2);
    const __m256d lrv = _mm256_set1_pd(lr);
    const __m256d epsv = _mm256_set1_pd(eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g + i);
        __m256d mi = _mm256_loadu_pd(m + i);
        __m256d vi = _mm256_loadu_pd(v + i);
        mi = _mm256_add_pd(_mm256_mul_pd(b1v, mi), _mm256_mul_pd(b1c, gi));
        vi = _mm256_add_pd(_mm256_mul_pd(b2v, vi), _mm256_mul_pd(b2c, _mm256_mul_pd(gi, gi)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d mhat = _mm256_div_pd(mi, bc1v);
        const __m256d vhat = _mm256_div_pd(vi, bc2v);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
        const __m256d step = _mm256_mul_pd(lrv, _mm256_div_pd(mhat, denom));
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps));
    }
}

constexpr Ops kAvx2Ops = {
    mm_acc_avx2, mm_ta_acc_avx2,
    add_avx2,    sub_avx2,    mul_avx2,      axpy_avx2, scale_avx2,
    relu_avx2,   relu_bwd_avx2, tanh_bwd_avx2, logistic_bwd_avx2,
    adam_step_avx2,
    "avx2",
};

}  // namespace

const Ops* avx2_ops() {
    return __builtin_cpu_supports("avx2") ? &kAvx2Ops : nullptr;
}

#else

const Ops* avx2_ops() { return nullptr; }

#endif  // GLW_HAVE_AVX2_BUILD

}  // namespace glw::kern
