#ifndef CPG_KERNELS_HPP
#define CPG_KERNELS_HPP

#include <vector>

#include "cpg/errors.hpp"

namespace cpg {

/// Matched pair of M x M differentiation kernels. kx responds to
/// horizontal intensity change, ky = kx transposed to vertical. The center
/// column of kx is zero, columns mirror with opposite sign, and the
/// largest element is exactly 1.
struct GradKernel {
    int size = 0;                // M, odd, >= 3
    int half = 0;                // (M - 1) / 2
    std::vector<float> kx;       // M x M, row-major
    std::vector<float> ky;

    float kx_at(int r, int c) const { return kx[static_cast<std::size_t>(r) * size + c]; }
    float ky_at(int r, int c) const { return ky[static_cast<std::size_t>(r) * size + c]; }
};

// kx(i,j) = 0 on the center column, else (j-m) / ((i-m)^2 + (j-m)^2) with
// m = (M-1)/2. For M = 3 this is the Sobel matrix scaled by 0.5.
GradKernel generate_kernel(int size);

// Per-row sums of kx; zero for every row by column antisymmetry.
std::vector<float> kernel_row_sums(const GradKernel& k);

}  // namespace cpg

#endif
