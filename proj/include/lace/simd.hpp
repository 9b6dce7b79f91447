#pragma once

// Data-parallel kernels for the arithmetic inner loops (recursion rows,
// quadrature reductions).  Two implementations exist: a scalar reference
// and an AVX2/FMA variant, selected once at runtime.  Both produce
// bitwise-identical results:
//
//  * element-wise accumulation uses fused multiply-add in both paths, so
//    each array slot sees the same rounding sequence;
//  * reductions are defined with a fixed 4-lane accumulation order
//    (element i feeds lane i%4, lanes combined as (l0+l1)+(l2+l3)),
//    which the scalar path reproduces exactly.
//
// This makes outputs independent of the dispatch decision, and lets the
// equivalence tests assert exact equality instead of tolerances.

#include <cstddef>

namespace lace::simd {

enum class Mode { Auto, Scalar, Avx2 };

// Select the implementation.  Auto picks AVX2 when the CPU supports
// AVX2+FMA.  Returns the mode actually activated.
Mode set_mode(Mode m);
Mode active_mode();
const char* active_name();
bool cpu_has_avx2_fma();

// acc[i] = fma(a[i], b[i], acc[i]) for i in [0, n)
void fmadd_arrays(double* acc, const double* a, const double* b, std::size_t n);

// Fixed-order reductions (4-lane pattern, see header comment).
double dot(const double* a, const double* b, std::size_t n);           // sum a[i]*b[i]
double weighted_abs_dot(const double* w, const double* v, std::size_t n);  // sum w[i]*|v[i]|

namespace detail {
// Direct entry points for the equivalence tests.
void fmadd_arrays_scalar(double* acc, const double* a, const double* b, std::size_t n);
double dot_scalar(const double* a, const double* b, std::size_t n);
double weighted_abs_dot_scalar(const double* w, const double* v, std::size_t n);
#if defined(__x86_64__) || defined(_M_X64)
void fmadd_arrays_avx2(double* acc, const double* a, const double* b, std::size_t n);
double dot_avx2(const double* a, const double* b, std::size_t n);
double weighted_abs_dot_avx2(const double* w, const double* v, std::size_t n);
#endif
}  // namespace detail

}  // namespace lace::simd
