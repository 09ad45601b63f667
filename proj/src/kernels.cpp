#include "mixdg/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace mixdg::kernels {
namespace {

const KernelTable* g_active = nullptr;

const KernelTable* resolve() {
    if (const char* env = std::getenv("MIXDG_KERNELS")) {
        const std::string want(env);
        if (want == "scalar") return &scalar_table();
        if (want == "avx2") {
            if (const KernelTable* t = avx2_table_if_available()) return t;
            throw std::runtime_error("MIXDG_KERNELS=avx2 but AVX2 is not available on this CPU");
        }
        throw std::runtime_error("unknown MIXDG_KERNELS value: " + want);
    }
    if (const KernelTable* t = avx2_table_if_available()) return t;
    return &scalar_table();
}

}  // namespace

const KernelTable& active() {
    if (!g_active) g_active = resolve();
    return *g_active;
}

void set_backend(Backend b) {
    switch (b) {
        case Backend::Scalar:
            g_active = &scalar_table();
            return;
        case Backend::Avx2:
            if (const KernelTable* t = avx2_table_if_available()) {
                g_active = t;
                return;
            }
            throw std::runtime_error("AVX2 backend not available on this CPU");
    }
    throw std::runtime_error("unknown kernel backend");
}

std::string active_name() { return active().name; }

}  // namespace mixdg::kernels
