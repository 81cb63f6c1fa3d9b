// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#include "paro/kernels.hpp"

#include <cstdlib>

#include "paro/error.hpp"

namespace paro::kernels {

// defined in kernels_avx2.cpp (nullptr when the TU was built without AVX2)
const Kernels* avx2_table();

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const Kernels* resolve(Impl impl) {
    switch (impl) {
    case Impl::Scalar:
        return &scalar();
    case Impl::Avx2:
        if (const Kernels* k = avx2())
            return k;
        throw ConfigError("AVX2 kernels requested but unavailable on this machine/build");
    case Impl::Auto:
    default:
        if (const Kernels* k = avx2())
            return k;
        return &scalar();
    }
}

const Kernels*& active_slot() {
    static const Kernels* slot = [] {
        Impl impl = Impl::Auto;
        if (const char* env = std::getenv("PARO_KERNELS"))
            impl = parse_impl(env);
        return resolve(impl);
    }();
    return slot;
}

} // namespace

const Kernels* avx2() {
    return cpu_has_avx2() ? avx2_table() : nullptr;
}

const Kernels& active() {
    return *active_slot();
}

void select(Impl impl) {
    active_slot() = resolve(impl);
}

Impl parse_impl(std::string_view name) {
    if (name == "scalar")
        return Impl::Scalar;
    if (name == "avx2")
        return Impl::Avx2;
    if (name == "auto" || name.empty())
        return Impl::Auto;
    throw ConfigError("unknown kernel implementation '" + std::string(name) + "' (expected scalar|avx2|auto)");
}

} // namespace paro::kernels
