#include "lace/simd.hpp"

#include <atomic>

namespace lace::simd {

namespace {

using FmaddFn = void (*)(double*, const double*, const double*, std::size_t);
using DotFn = double (*)(const double*, const double*, std::size_t);

struct Table {
    FmaddFn fmadd;
    DotFn dot;
    DotFn wabs;
    Mode mode;
    const char* name;
};

constexpr Table kScalar{detail::fmadd_arrays_scalar, detail::dot_scalar,
                        detail::weighted_abs_dot_scalar, Mode::Scalar, "scalar"};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Table kAvx2{detail::fmadd_arrays_avx2, detail::dot_avx2,
                      detail::weighted_abs_dot_avx2, Mode::Avx2, "avx2"};
#endif

std::atomic<const Table*> g_table{nullptr};

const Table* pick(Mode m) {
#if defined(__x86_64__) || defined(_M_X64)
    if (m == Mode::Avx2) return &kAvx2;
    if (m == Mode::Auto && cpu_has_avx2_fma()) return &kAvx2;
#endif
    return &kScalar;
}

const Table* table() {
    const Table* t = g_table.load(std::memory_order_acquire);
    if (!t) {
        t = pick(Mode::Auto);
        g_table.store(t, std::memory_order_release);
    }
    return t;
}

}  // namespace

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Mode set_mode(Mode m) {
    const Table* t = pick(m);
    g_table.store(t, std::memory_order_release);
    return t->mode;
}

Mode active_mode() { return table()->mode; }

const char* active_name() { return table()->name; }

void fmadd_arrays(double* acc, const double* a, const double* b, std::size_t n) {
    table()->fmadd(acc, a, b, n);
}

double dot(const double* a, const double* b, std::size_t n) { return table()->dot(a, b, n); }

double weighted_abs_dot(const double* w, const double* v, std::size_t n) {
    return table()->wabs(w, v, n);
}

}  // namespace lace::simd
