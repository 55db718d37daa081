#include "plcg/errors.hpp"
#include "plcg/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace plcg::kernels {

#if !defined(PLCG_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

namespace {

const KernelTable* detect() {
    if (const char* env = std::getenv("PLCG_SIMD"); env != nullptr && *env != '\0') {
        if (parse_isa(env) == Isa::scalar) return &scalar_table();
    }
    if (const KernelTable* t = avx2_table(); t != nullptr && cpu_has_avx2()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> current{detect()};
    return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void select(Isa isa) {
    if (isa == Isa::scalar) {
        slot().store(&scalar_table(), std::memory_order_release);
        return;
    }
    const KernelTable* t = avx2_table();
    if (t == nullptr || !cpu_has_avx2()) throw ArgumentError("AVX2 kernels are not available on this machine");
    slot().store(t, std::memory_order_release);
}

Isa parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::scalar;
    if (name == "avx2") return Isa::avx2;
    throw ArgumentError("unknown kernel set '" + std::string(name) + "' (expected scalar or avx2)");
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace plcg::kernels
