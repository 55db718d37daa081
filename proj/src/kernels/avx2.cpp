// Compiled with -mavx2 -ffp-contract=off. Only reached after a runtime CPU check.
#include "plcg/kernels.hpp"

#include <immintrin.h>

namespace plcg::kernels {
namespace {

inline double hsum(__m256d v) {
    // (v0 + v2) + (v1 + v3), fixed order
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void xpby_avx2(const double* x, double b, double* y, std::size_t n) {
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(vb, _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] = x[i] + b * y[i];
}

void axpby_avx2(double a, const double* x, double b, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_add_pd(_mm256_mul_pd(va, _mm256_loadu_pd(x + i)),
                                  _mm256_mul_pd(vb, _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void scale_into_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] = a * x[i];
}

void spmv_avx2(const CsrView& a, const double* x, double* y) {
    for (std::size_t r = 0; r < a.n; ++r) {
        auto k = a.row_ptr[r];
        const auto end = a.row_ptr[r + 1];
        double s = 0.0;
        if (end - k >= 4) {
            __m256d acc = _mm256_setzero_pd();
            for (; k + 4 <= end; k += 4) {
                __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a.col_idx + k));
                __m256d xv = _mm256_i32gather_pd(x, idx, 8);
                acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a.values + k), xv));
            }
            s = hsum(acc);
        }
        for (; k < end; ++k) s += a.values[k] * x[a.col_idx[k]];
        y[r] = s;
    }
}

}  // namespace

const KernelTable* avx2_table() {
    static const KernelTable table{Isa::avx2, dot_avx2,        axpy_avx2, xpby_avx2,
                                   axpby_avx2, scale_into_avx2, spmv_avx2};
    return &table;
}

}  // namespace plcg::kernels
