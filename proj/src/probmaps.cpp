#include "cpg/probmaps.hpp"

#include <cmath>
#include <string>

#include "cpg/threading.hpp"

namespace cpg {

namespace {

void require_chw(const Tensor& t, const char* what) {
    if (t.ndim() != 3 || t.dtype() != DType::F32) {
        throw ShapeError(std::string(what) + " needs f32 dims [C,H,W], got " +
                         dims_to_string(t.dims()));
    }
}

double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

void validate_labels(const LabelMap& m) {
    if (m.labels.ndim() != 2 || m.labels.dtype() != DType::I32) {
        throw ShapeError("label map needs i32 dims [H,W], got " +
                         dims_to_string(m.labels.dims()));
    }
    if (m.num_classes <= 0) throw DataError("label map needs num_classes > 0");
    for (std::int32_t v : m.labels.i32()) {
        if (m.is_ignored(v)) continue;
        if (v < 0 || v >= m.num_classes) {
            throw DataError("label " + std::to_string(v) + " outside [0," +
                            std::to_string(m.num_classes) + ") and not the ignore index");
        }
    }
}

void validate_probmap(const ProbMap& m) {
    require_chw(m.data, "probability map");
    const std::size_t c = m.channels();
    const std::size_t hw = static_cast<std::size_t>(m.height()) * m.width();
    auto vals = m.data.f32();
    for (float v : vals) {
        if (!(v >= 0.0f && v <= 1.0f)) {
            throw DataError("probability outside [0,1]: " + std::to_string(v));
        }
    }
    for (std::size_t px = 0; px < hw; ++px) {
        double sum = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) sum += vals[ch * hw + px];
        if (m.kind == ProbMap::Kind::Predicted) {
            if (std::abs(sum - 1.0) > 1e-5) {
                throw DataError("predicted map pixel sums to " + std::to_string(sum));
            }
        } else if (sum != 0.0 && sum != 1.0) {
            throw DataError("ground-truth map pixel sums to " + std::to_string(sum));
        }
    }
}

LogitMap make_logit_map(Tensor t) {
    require_chw(t, "logit map");
    for (float v : t.f32()) {
        if (!std::isfinite(v)) throw DataError("logit map contains a non-finite value");
    }
    return LogitMap{std::move(t)};
}

ProbMap one_hot(const LabelMap& labels) {
    validate_labels(labels);
    const std::uint32_t c = static_cast<std::uint32_t>(labels.num_classes);
    const std::uint32_t h = labels.height();
    const std::uint32_t w = labels.width();
    Tensor out = Tensor::zeros(DType::F32, {c, h, w});
    auto dst = out.f32();
    auto src = labels.labels.i32();
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    parallel_for((hw + kSumChunk - 1) / kSumChunk, [&](std::size_t chunk) {
        const std::size_t b = chunk * kSumChunk;
        const std::size_t e = b + std::min(kSumChunk, hw - b);
        for (std::size_t px = b; px < e; ++px) {
            const std::int32_t v = src[px];
            if (labels.is_ignored(v)) continue;
            dst[static_cast<std::size_t>(v) * hw + px] = 1.0f;
        }
    });
    return ProbMap{std::move(out), ProbMap::Kind::GroundTruth};
}

ProbMap softmax(const LogitMap& logits) {
    const std::size_t c = logits.channels();
    const std::size_t hw = static_cast<std::size_t>(logits.height()) * logits.width();
    Tensor out = Tensor::zeros(DType::F32, logits.data.dims());
    auto dst = out.f32();
    auto src = logits.data.f32();
    parallel_for((hw + kSumChunk - 1) / kSumChunk, [&](std::size_t chunk) {
        const std::size_t b = chunk * kSumChunk;
        const std::size_t e = b + std::min(kSumChunk, hw - b);
        for (std::size_t px = b; px < e; ++px) {
            double mx = src[px];
            for (std::size_t ch = 1; ch < c; ++ch) {
                mx = std::max(mx, static_cast<double>(src[ch * hw + px]));
            }
            double denom = 0.0;
            for (std::size_t ch = 0; ch < c; ++ch) {
                denom += std::exp(src[ch * hw + px] - mx);
            }
            for (std::size_t ch = 0; ch < c; ++ch) {
                dst[ch * hw + px] =
                    static_cast<float>(std::exp(src[ch * hw + px] - mx) / denom);
            }
        }
    });
    return ProbMap{std::move(out), ProbMap::Kind::Predicted};
}

CeResult ce_loss(const LogitMap& logits, const ProbMap& gt, CeVariant variant) {
    if (gt.kind != ProbMap::Kind::GroundTruth) {
        throw ArgumentError("ce_loss needs a ground-truth probability map");
    }
    if (!logits.data.same_dims(gt.data)) {
        throw ShapeError("logit dims " + dims_to_string(logits.data.dims()) +
                         " do not match ground-truth dims " + dims_to_string(gt.data.dims()));
    }
    const std::size_t c = logits.channels();
    const std::size_t hw = static_cast<std::size_t>(logits.height()) * logits.width();
    auto z = logits.data.f32();
    auto y = gt.data.f32();

    // A pixel is ignored exactly when its ground-truth column is all zero.
    const double n_valid = deterministic_sum(hw, [&](std::size_t px) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            if (y[ch * hw + px] != 0.0f) return 1.0;
        }
        return 0.0;
    });

    Tensor grad = Tensor::zeros(DType::F32, logits.data.dims());
    if (n_valid == 0.0) {
        return CeResult{0.0f, LogitMap{std::move(grad)}};
    }
    auto g = grad.f32();

    double total = 0.0;
    if (variant == CeVariant::SoftmaxCe) {
        const double inv_n = 1.0 / n_valid;
        total = deterministic_chunked_sum(hw, [&](std::size_t b, std::size_t e) {
            double acc = 0.0;
            for (std::size_t px = b; px < e; ++px) {
                double ysum = 0.0;
                for (std::size_t ch = 0; ch < c; ++ch) ysum += y[ch * hw + px];
                if (ysum == 0.0) continue;
                double mx = z[px];
                for (std::size_t ch = 1; ch < c; ++ch) {
                    mx = std::max(mx, static_cast<double>(z[ch * hw + px]));
                }
                double denom = 0.0;
                for (std::size_t ch = 0; ch < c; ++ch) {
                    denom += std::exp(z[ch * hw + px] - mx);
                }
                const double logden = std::log(denom);
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const std::size_t at = ch * hw + px;
                    const double zs = z[at] - mx;
                    const double p = std::exp(zs) / denom;
                    if (y[at] != 0.0f) acc -= y[at] * (zs - logden);
                    g[at] = static_cast<float>((ysum * p - y[at]) * inv_n);
                }
            }
            return acc;
        });
        total /= n_valid;
    } else {
        const double inv_n = 1.0 / (n_valid * static_cast<double>(c));
        total = deterministic_chunked_sum(hw, [&](std::size_t b, std::size_t e) {
            double acc = 0.0;
            for (std::size_t px = b; px < e; ++px) {
                double ysum = 0.0;
                for (std::size_t ch = 0; ch < c; ++ch) ysum += y[ch * hw + px];
                if (ysum == 0.0) continue;
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const std::size_t at = ch * hw + px;
                    const double zv = z[at];
                    const double yv = y[at];
                    acc += std::max(zv, 0.0) - zv * yv + std::log1p(std::exp(-std::abs(zv)));
                    g[at] = static_cast<float>((stable_sigmoid(zv) - yv) * inv_n);
                }
            }
            return acc;
        });
        total /= n_valid * static_cast<double>(c);
    }

    return CeResult{static_cast<float>(total), LogitMap{std::move(grad)}};
}

}  // namespace cpg
