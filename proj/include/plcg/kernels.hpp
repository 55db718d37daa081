#pragma once

// Data-parallel vector kernels shared by all solvers.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active set is chosen once at startup from the CPU features
// and can be forced with PLCG_SIMD=scalar|avx2. Elementwise kernels are
// bit-identical across variants (no FMA contraction); reductions (dot, spmv
// rows) differ only in summation order, which is fixed per variant.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace plcg::kernels {

enum class Isa { scalar, avx2 };

struct CsrView {
    std::size_t n = 0;
    const std::int64_t* row_ptr = nullptr;
    const std::int32_t* col_idx = nullptr;
    const double* values = nullptr;
};

/// Table of kernel entry points for one instruction set.
struct KernelTable {
    Isa isa;
    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // y = x + b * y
    void (*xpby)(const double* x, double b, double* y, std::size_t n);
    // y = a * x + b * y
    void (*axpby)(double a, const double* x, double b, double* y, std::size_t n);
    // y = a * x
    void (*scale_into)(double a, const double* x, double* y, std::size_t n);
    // y = A x
    void (*spmv)(const CsrView& a, const double* x, double* y);
};

const KernelTable& scalar_table();
/// Returns nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_table();
bool cpu_has_avx2();

/// The table used by the solvers. Selected on first use.
const KernelTable& active();
/// Force a specific kernel set; throws ArgumentError if unavailable.
void select(Isa isa);
Isa parse_isa(std::string_view name);
std::string_view isa_name(Isa isa);

// Convenience wrappers over the active table.
inline double dot(std::span<const double> x, std::span<const double> y) {
    return active().dot(x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active().axpy(a, x.data(), y.data(), x.size());
}
inline void xpby(std::span<const double> x, double b, std::span<double> y) {
    active().xpby(x.data(), b, y.data(), x.size());
}
inline void axpby(double a, std::span<const double> x, double b, std::span<double> y) {
    active().axpby(a, x.data(), b, y.data(), x.size());
}
inline void scale_into(double a, std::span<const double> x, std::span<double> y) {
    active().scale_into(a, x.data(), y.data(), x.size());
}

}  // namespace plcg::kernels
