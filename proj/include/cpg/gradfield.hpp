#ifndef CPG_GRADFIELD_HPP
#define CPG_GRADFIELD_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "cpg/kernels.hpp"
#include "cpg/probmaps.hpp"
#include "cpg/tensor.hpp"

namespace cpg {

/// Per-category, per-direction gradient values, [C,2,H,W] f32 with the
/// direction axis ordered (x, y).
struct GradField {
    Tensor data;

    std::uint32_t channels() const { return data.dims()[0]; }
    std::uint32_t height() const { return data.dims()[2]; }
    std::uint32_t width() const { return data.dims()[3]; }

    std::span<const float> plane(std::uint32_t c, std::uint32_t d) const;
    std::span<float> plane(std::uint32_t c, std::uint32_t d);
};

/// 0/1 indicator per gradient-field element, with cached counts. n_plus is
/// the total count of ones; per_class holds per-channel counts summed over
/// both direction planes.
struct BoundaryMask {
    std::uint32_t channels = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<std::uint8_t> mask;  // [C,2,H,W]
    std::int64_t n_plus = 0;
    std::vector<std::int64_t> per_class;
};

// Threshold on |gradient| for the boundary test. Ground-truth values are
// exact zeros away from edges; this only absorbs accumulation noise.
inline constexpr float kBoundaryEps = 1e-6f;

// Correlates every channel with kx (x plane) and ky (y plane). Reads
// outside the image clamp to the nearest edge pixel, so constant regions
// stay gradient-free at the frame.
GradField correlate(const ProbMap& map, const GradKernel& kernel);

// Exact adjoint of correlate under the standard inner product, including
// the clamp-to-edge scatter at borders. Collapses the direction axis:
// result[c] = adjoint_kx(upstream_x[c]) + adjoint_ky(upstream_y[c]).
Tensor correlate_transpose(const GradField& upstream, const GradKernel& kernel);

// mag = sqrt(gx^2 + gy^2), theta = atan2(gy, gx) in (-pi, pi], with
// atan2(0, 0) defined as 0. Both outputs are [C,H,W].
std::pair<Tensor, Tensor> magnitude_direction(const GradField& field);

BoundaryMask extract_boundary(const GradField& gt_field);

// Marks both direction planes wherever either is marked; counts follow.
BoundaryMask collapse_per_pixel(const BoundaryMask& mask);

// 0/1 values as an f32 [C,2,H,W] tensor, for serialization.
Tensor mask_to_tensor(const BoundaryMask& mask);

}  // namespace cpg

#endif
