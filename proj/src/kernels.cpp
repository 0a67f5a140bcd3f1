#include "cpg/kernels.hpp"

#include <string>

namespace cpg {

GradKernel generate_kernel(int size) {
    if (size < 3 || size % 2 == 0) {
        throw ArgumentError("kernel size must be odd and >= 3, got " + std::to_string(size));
    }
    GradKernel k;
    k.size = size;
    k.half = (size - 1) / 2;
    k.kx.resize(static_cast<std::size_t>(size) * size);
    k.ky.resize(static_cast<std::size_t>(size) * size);

    const int m = k.half;
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            double v = 0.0;
            if (j != m) {
                const double di = i - m;
                const double dj = j - m;
                v = dj / (di * di + dj * dj);
            }
            k.kx[static_cast<std::size_t>(i) * size + j] = static_cast<float>(v);
        }
    }
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            k.ky[static_cast<std::size_t>(i) * size + j] = k.kx_at(j, i);
        }
    }
    return k;
}

std::vector<float> kernel_row_sums(const GradKernel& k) {
    std::vector<float> sums(static_cast<std::size_t>(k.size), 0.0f);
    for (int i = 0; i < k.size; ++i) {
        double acc = 0.0;
        for (int j = 0; j < k.size; ++j) acc += k.kx_at(i, j);
        sums[static_cast<std::size_t>(i)] = static_cast<float>(acc);
    }
    return sums;
}

}  // namespace cpg
