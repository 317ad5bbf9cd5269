#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "invbo/simd.hpp"

namespace invbo::simd {

#ifndef INVBO_HAVE_AVX2_KERNELS
const KernelTable* avx2_kernels() { return nullptr; }
#endif

namespace {

const KernelTable* initial_table() {
    if (const char* env = std::getenv("INVBO_SIMD"); env != nullptr && std::string(env) == "scalar") {
        return &scalar_kernels();
    }
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

Isa active_isa() { return &active() == &scalar_kernels() ? Isa::Scalar : Isa::Avx2; }

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::Scalar:
            return true;
        case Isa::Avx2:
            return avx2_kernels() != nullptr;
    }
    return false;
}

void select(Isa isa) {
    if (!isa_available(isa)) throw std::invalid_argument("SIMD variant not available: " + std::string(isa_name(isa)));
    current().store(isa == Isa::Avx2 ? avx2_kernels() : &scalar_kernels(), std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar:
            return "scalar";
        case Isa::Avx2:
            return "avx2";
    }
    return "unknown";
}

}  // namespace invbo::simd
