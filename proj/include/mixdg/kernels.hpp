#pragma once

#include <cstddef>
#include <string>

namespace mixdg::kernels {

// Data-parallel inner loops used by the tensor/network layer. Every kernel
// has a scalar reference implementation and, on x86-64, an AVX2+FMA variant.
// The active table is chosen once at startup from CPUID and can be forced
// with set_backend() or the MIXDG_KERNELS environment variable
// ("scalar" | "avx2").
//
// Reduction kernels (dot, matmul) may reorder additions between backends;
// within one process the selected backend never changes, so results are
// deterministic for a fixed binary + machine.
struct KernelTable {
    const char* name;

    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x *= alpha
    void (*scale)(double alpha, double* x, std::size_t n);
    // C[m x n] = A[m x k] * B[k x n], row-major, C overwritten
    void (*matmul_nn)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
    // C[m x n] = A^T * B with A[k x m], B[k x n]
    void (*matmul_tn)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
    // C[m x n] = A * B^T with A[m x k], B[n x k]
    void (*matmul_nt)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
    void (*relu_fwd)(const double* in, double* out, std::size_t n);
    // din = pre > 0 ? dout : 0
    void (*relu_bwd)(const double* pre, const double* dout, double* din, std::size_t n);
};

enum class Backend { Scalar, Avx2 };

const KernelTable& scalar_table();
bool avx2_supported();
// Null when AVX2 kernels were not compiled in or the CPU lacks support.
const KernelTable* avx2_table_if_available();

// The table all callers go through. Resolved on first use.
const KernelTable& active();
// Force a backend (throws std::runtime_error if unavailable). Test hook.
void set_backend(Backend b);
std::string active_name();

}  // namespace mixdg::kernels
