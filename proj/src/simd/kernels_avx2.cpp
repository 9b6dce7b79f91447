// AVX2/FMA kernels.  Compiled with -mavx2 -mfma (see CMakeLists); only
// reached after the runtime CPU check.  Lane discipline matches the
// scalar reference exactly: element i lives in lane i%4, tails continue
// the same pattern, and the final combine is (l0+l1)+(l2+l3).

#include "lace/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace lace::simd::detail {

void fmadd_arrays_avx2(double* acc, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        __m256d vb = _mm256_loadu_pd(b + i);
        __m256d vc = _mm256_loadu_pd(acc + i);
        _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(va, vb, vc));
    }
    for (; i < n; ++i) acc[i] = std::fma(a[i], b[i], acc[i]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d vacc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        __m256d vb = _mm256_loadu_pd(b + i);
        vacc = _mm256_fmadd_pd(va, vb, vacc);
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, vacc);
    for (; i < n; ++i) lane[i & 3] = std::fma(a[i], b[i], lane[i & 3]);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double weighted_abs_dot_avx2(const double* w, const double* v, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d vacc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vw = _mm256_loadu_pd(w + i);
        __m256d vv = _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(v + i));
        vacc = _mm256_fmadd_pd(vw, vv, vacc);
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, vacc);
    for (; i < n; ++i) lane[i & 3] = std::fma(w[i], std::fabs(v[i]), lane[i & 3]);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace lace::simd::detail

#endif  // x86_64
