#include "cpg/gradfield.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cpg/threading.hpp"

namespace cpg {

namespace {

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

void require_field(const Tensor& t) {
    if (t.ndim() != 4 || t.dims()[1] != 2 || t.dtype() != DType::F32) {
        throw ShapeError("gradient field needs f32 dims [C,2,H,W], got " +
                         dims_to_string(t.dims()));
    }
}

// Correlation of one H x W plane with an M x M kernel, clamp-to-edge reads.
// Accumulates each output in double with a fixed tap order.
void correlate_plane(const float* img, int h, int w, const float* k, int msize,
                     float* out) {
    const int m = (msize - 1) / 2;
    const int fast_begin = std::min(m, w);
    const int fast_end = std::max(fast_begin, w - m);
    std::vector<const float*> rows(static_cast<std::size_t>(msize));
    for (int i = 0; i < h; ++i) {
        for (int r = 0; r < msize; ++r) {
            rows[static_cast<std::size_t>(r)] = img + static_cast<std::ptrdiff_t>(clampi(i + r - m, 0, h - 1)) * w;
        }
        float* orow = out + static_cast<std::ptrdiff_t>(i) * w;
        for (int j = 0; j < fast_begin; ++j) {
            double acc = 0.0;
            for (int r = 0; r < msize; ++r) {
                const float* row = rows[static_cast<std::size_t>(r)];
                const float* kr = k + static_cast<std::ptrdiff_t>(r) * msize;
                for (int s = 0; s < msize; ++s) acc += kr[s] * row[clampi(j + s - m, 0, w - 1)];
            }
            orow[j] = static_cast<float>(acc);
        }
        for (int j = fast_begin; j < fast_end; ++j) {
            double acc = 0.0;
            for (int r = 0; r < msize; ++r) {
                const float* p = rows[static_cast<std::size_t>(r)] + (j - m);
                const float* kr = k + static_cast<std::ptrdiff_t>(r) * msize;
                for (int s = 0; s < msize; ++s) acc += kr[s] * p[s];
            }
            orow[j] = static_cast<float>(acc);
        }
        for (int j = fast_end; j < w; ++j) {
            double acc = 0.0;
            for (int r = 0; r < msize; ++r) {
                const float* row = rows[static_cast<std::size_t>(r)];
                const float* kr = k + static_cast<std::ptrdiff_t>(r) * msize;
                for (int s = 0; s < msize; ++s) acc += kr[s] * row[clampi(j + s - m, 0, w - 1)];
            }
            orow[j] = static_cast<float>(acc);
        }
    }
}

}  // namespace

std::span<const float> GradField::plane(std::uint32_t c, std::uint32_t d) const {
    const std::size_t hw = static_cast<std::size_t>(height()) * width();
    return data.f32().subspan((static_cast<std::size_t>(c) * 2 + d) * hw, hw);
}

std::span<float> GradField::plane(std::uint32_t c, std::uint32_t d) {
    const std::size_t hw = static_cast<std::size_t>(height()) * width();
    return data.f32().subspan((static_cast<std::size_t>(c) * 2 + d) * hw, hw);
}

GradField correlate(const ProbMap& map, const GradKernel& kernel) {
    const Tensor& src = map.data;
    if (src.ndim() != 3 || src.dtype() != DType::F32) {
        throw ShapeError("correlate needs f32 dims [C,H,W], got " + dims_to_string(src.dims()));
    }
    const int h = static_cast<int>(src.dims()[1]);
    const int w = static_cast<int>(src.dims()[2]);
    if (kernel.size > 2 * std::min(h, w) + 1) {
        throw ShapeError("kernel size " + std::to_string(kernel.size) +
                         " too large for image " + std::to_string(h) + "x" + std::to_string(w));
    }
    const std::uint32_t c = src.dims()[0];
    GradField out{Tensor::zeros(DType::F32, {c, 2, src.dims()[1], src.dims()[2]})};
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    auto img = src.f32();
    parallel_for(static_cast<std::size_t>(c) * 2, [&](std::size_t item) {
        const std::uint32_t ch = static_cast<std::uint32_t>(item / 2);
        const std::uint32_t dir = static_cast<std::uint32_t>(item % 2);
        const float* k = dir == 0 ? kernel.kx.data() : kernel.ky.data();
        correlate_plane(img.data() + ch * hw, h, w, k, kernel.size, out.plane(ch, dir).data());
    });
    return out;
}

Tensor correlate_transpose(const GradField& upstream, const GradKernel& kernel) {
    require_field(upstream.data);
    const int h = static_cast<int>(upstream.height());
    const int w = static_cast<int>(upstream.width());
    if (kernel.size > 2 * std::min(h, w) + 1) {
        throw ShapeError("kernel size " + std::to_string(kernel.size) +
                         " too large for image " + std::to_string(h) + "x" + std::to_string(w));
    }
    const std::uint32_t c = upstream.channels();
    const int m = kernel.half;
    Tensor out = Tensor::zeros(DType::F32, {c, upstream.data.dims()[2], upstream.data.dims()[3]});
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    auto dst = out.f32();
    parallel_for(c, [&](std::size_t ch) {
        std::vector<double> acc(hw, 0.0);
        for (std::uint32_t dir = 0; dir < 2; ++dir) {
            const float* k = dir == 0 ? kernel.kx.data() : kernel.ky.data();
            auto up = upstream.plane(static_cast<std::uint32_t>(ch), dir);
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const float u = up[static_cast<std::size_t>(i) * w + j];
                    if (u == 0.0f) continue;
                    for (int r = 0; r < kernel.size; ++r) {
                        const int ti = clampi(i + r - m, 0, h - 1);
                        double* arow = acc.data() + static_cast<std::ptrdiff_t>(ti) * w;
                        const float* kr = k + static_cast<std::ptrdiff_t>(r) * kernel.size;
                        for (int s = 0; s < kernel.size; ++s) {
                            arow[clampi(j + s - m, 0, w - 1)] += static_cast<double>(kr[s]) * u;
                        }
                    }
                }
            }
        }
        float* orow = dst.data() + ch * hw;
        for (std::size_t i = 0; i < hw; ++i) orow[i] = static_cast<float>(acc[i]);
    });
    return out;
}

std::pair<Tensor, Tensor> magnitude_direction(const GradField& field) {
    require_field(field.data);
    const std::uint32_t c = field.channels();
    const std::size_t hw = static_cast<std::size_t>(field.height()) * field.width();
    Tensor mag = Tensor::zeros(DType::F32, {c, field.data.dims()[2], field.data.dims()[3]});
    Tensor theta = Tensor::zeros(DType::F32, {c, field.data.dims()[2], field.data.dims()[3]});
    auto mg = mag.f32();
    auto th = theta.f32();
    parallel_for(c, [&](std::size_t ch) {
        auto gx = field.plane(static_cast<std::uint32_t>(ch), 0);
        auto gy = field.plane(static_cast<std::uint32_t>(ch), 1);
        for (std::size_t i = 0; i < hw; ++i) {
            const double x = gx[i];
            const double y = gy[i];
            mg[ch * hw + i] = static_cast<float>(std::sqrt(x * x + y * y));
            th[ch * hw + i] =
                (x == 0.0 && y == 0.0) ? 0.0f : static_cast<float>(std::atan2(y, x));
        }
    });
    return {std::move(mag), std::move(theta)};
}

BoundaryMask extract_boundary(const GradField& gt_field) {
    require_field(gt_field.data);
    BoundaryMask bm;
    bm.channels = gt_field.channels();
    bm.height = gt_field.height();
    bm.width = gt_field.width();
    const std::size_t hw = static_cast<std::size_t>(bm.height) * bm.width;
    bm.mask.assign(static_cast<std::size_t>(bm.channels) * 2 * hw, 0);
    bm.per_class.assign(bm.channels, 0);
    auto vals = gt_field.data.f32();
    parallel_for(bm.channels, [&](std::size_t ch) {
        std::int64_t count = 0;
        const std::size_t base = ch * 2 * hw;
        for (std::size_t i = 0; i < 2 * hw; ++i) {
            if (std::abs(vals[base + i]) > kBoundaryEps) {
                bm.mask[base + i] = 1;
                ++count;
            }
        }
        bm.per_class[ch] = count;
    });
    for (std::int64_t n : bm.per_class) bm.n_plus += n;
    return bm;
}

BoundaryMask collapse_per_pixel(const BoundaryMask& mask) {
    BoundaryMask bm;
    bm.channels = mask.channels;
    bm.height = mask.height;
    bm.width = mask.width;
    const std::size_t hw = static_cast<std::size_t>(bm.height) * bm.width;
    bm.mask.assign(mask.mask.size(), 0);
    bm.per_class.assign(bm.channels, 0);
    parallel_for(bm.channels, [&](std::size_t ch) {
        std::int64_t count = 0;
        const std::size_t base = ch * 2 * hw;
        for (std::size_t i = 0; i < hw; ++i) {
            if (mask.mask[base + i] | mask.mask[base + hw + i]) {
                bm.mask[base + i] = 1;
                bm.mask[base + hw + i] = 1;
                count += 2;
            }
        }
        bm.per_class[ch] = count;
    });
    for (std::int64_t n : bm.per_class) bm.n_plus += n;
    return bm;
}

Tensor mask_to_tensor(const BoundaryMask& mask) {
    Tensor t = Tensor::zeros(DType::F32, {mask.channels, 2, mask.height, mask.width});
    auto dst = t.f32();
    for (std::size_t i = 0; i < mask.mask.size(); ++i) dst[i] = mask.mask[i] ? 1.0f : 0.0f;
    return t;
}

}  // namespace cpg
