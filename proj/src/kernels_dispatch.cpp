#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "kmeq/kernels.hpp"

namespace kmeq::kernels {
namespace {

bool cpu_has(Backend b) {
    switch (b) {
        case Backend::scalar:
            return true;
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2:
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
        case Backend::avx512:
            return __builtin_cpu_supports("avx512f");
#else
        case Backend::avx2:
        case Backend::avx512:
            return false;
#endif
    }
    return false;
}

const Ops* table_for(Backend b) {
    switch (b) {
        case Backend::scalar:
            return &scalar_ops;
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2:
            return &avx2_ops;
        case Backend::avx512:
            return &avx512_ops;
#else
        case Backend::avx2:
        case Backend::avx512:
            return nullptr;
#endif
    }
    return nullptr;
}

Backend pick_default() {
    if (const char* env = std::getenv("KMEQ_KERNELS")) {
        std::string want(env);
        Backend b;
        if (want == "scalar")
            b = Backend::scalar;
        else if (want == "avx2")
            b = Backend::avx2;
        else if (want == "avx512")
            b = Backend::avx512;
        else
            throw std::invalid_argument("KMEQ_KERNELS must be scalar, avx2 or avx512, got \"" + want + "\"");
        if (!cpu_has(b))
            throw std::invalid_argument("KMEQ_KERNELS requests \"" + want + "\" but the CPU does not support it");
        return b;
    }
    if (cpu_has(Backend::avx512)) return Backend::avx512;
    if (cpu_has(Backend::avx2)) return Backend::avx2;
    return Backend::scalar;
}

std::atomic<const Ops*> g_active{nullptr};
std::atomic<Backend> g_backend{Backend::scalar};

const Ops* ensure_selected() {
    const Ops* cur = g_active.load(std::memory_order_acquire);
    if (cur) return cur;
    Backend b = pick_default();
    const Ops* tab = table_for(b);
    g_backend.store(b, std::memory_order_relaxed);
    g_active.store(tab, std::memory_order_release);
    return tab;
}

}  // namespace

bool backend_supported(Backend b) { return cpu_has(b) && table_for(b) != nullptr; }

const Ops& active() { return *ensure_selected(); }

Backend active_backend() {
    ensure_selected();
    return g_backend.load(std::memory_order_relaxed);
}

void force_backend(Backend b) {
    if (!backend_supported(b))
        throw std::invalid_argument("requested kernel backend is not supported on this CPU");
    g_backend.store(b, std::memory_order_relaxed);
    g_active.store(table_for(b), std::memory_order_release);
}

}  // namespace kmeq::kernels
