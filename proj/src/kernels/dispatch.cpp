#include "popctl/kernels/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace popctl::kernels {

#if defined(POPCTL_HAVE_AVX2)
const KernelTable& avx2_table_unchecked();
#endif

const KernelTable* avx2_table() {
#if defined(POPCTL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    return supported ? &avx2_table_unchecked() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& table = []() -> const KernelTable& {
        if (const char* env = std::getenv("POPCTL_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
            return scalar_table();
        }
        if (const KernelTable* t = avx2_table()) {
            return *t;
        }
        return scalar_table();
    }();
    return table;
}

void apply_along_axis(std::span<const double> a, std::size_t m, std::size_t outer,
                      std::size_t inner, std::span<const double> in, std::span<double> out,
                      const KernelTable& table) {
    if (inner == 1) {
        for (std::size_t o = 0; o < outer; ++o) {
            const double* src = in.data() + o * m;
            double* dst = out.data() + o * m;
            for (std::size_t i = 0; i < m; ++i) {
                dst[i] = table.dot(a.data() + i * m, src, m);
            }
        }
        return;
    }
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = in.data() + o * m * inner;
        double* dst = out.data() + o * m * inner;
        for (std::size_t i = 0; i < m; ++i) {
            double* row = dst + i * inner;
            for (std::size_t k = 0; k < inner; ++k) {
                row[k] = 0.0;
            }
            for (std::size_t j = 0; j < m; ++j) {
                table.axpy(a[i * m + j], src + j * inner, row, inner);
            }
        }
    }
}

}  // namespace popctl::kernels
