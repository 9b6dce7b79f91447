// Scalar reference kernels.  These define the arithmetic contract: the
// AVX2 variants must match them bit for bit (same fma use, same 4-lane
// reduction order).

#include "lace/simd.hpp"

#include <cmath>

namespace lace::simd::detail {

void fmadd_arrays_scalar(double* acc, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] = std::fma(a[i], b[i], acc[i]);
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) lane[i & 3] = std::fma(a[i], b[i], lane[i & 3]);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double weighted_abs_dot_scalar(const double* w, const double* v, std::size_t n) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) lane[i & 3] = std::fma(w[i], std::fabs(v[i]), lane[i & 3]);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace lace::simd::detail
