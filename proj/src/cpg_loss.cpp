#include "cpg/cpg_loss.hpp"

#include <cmath>

#include "cpg/errors.hpp"
#include "cpg/threading.hpp"

namespace cpg {

CpgForward cpg_forward(const ProbMap& gt, const ProbMap& pred, const CpgConfig& cfg) {
    if (gt.kind != ProbMap::Kind::GroundTruth) {
        throw ArgumentError("cpg_forward: first map must be ground truth");
    }
    if (pred.kind != ProbMap::Kind::Predicted) {
        throw ArgumentError("cpg_forward: second map must be predicted");
    }
    if (!gt.data.same_dims(pred.data)) {
        throw ShapeError("probability map mismatch: " + dims_to_string(gt.data.dims()) +
                         " vs " + dims_to_string(pred.data.dims()));
    }
    const GradKernel kernel = generate_kernel(cfg.kernel_size);
    GradField gt_field = correlate(gt, kernel);
    GradField pred_field = correlate(pred, kernel);

    CpgForward fwd;
    fwd.mask = extract_boundary(gt_field);
    if (cfg.collapse == MaskCollapse::PerPixel) fwd.mask = collapse_per_pixel(fwd.mask);

    const std::size_t n = gt_field.data.element_count();
    fwd.residual = GradField{Tensor::zeros(DType::F32, gt_field.data.dims())};
    auto res = fwd.residual.data.f32();
    auto gv = gt_field.data.f32();
    auto pv = pred_field.data.f32();
    const auto& m = fwd.mask.mask;
    parallel_for((n + kSumChunk - 1) / kSumChunk, [&](std::size_t chunk) {
        const std::size_t begin = chunk * kSumChunk;
        const std::size_t end = begin + std::min(kSumChunk, n - begin);
        for (std::size_t i = begin; i < end; ++i) {
            if (m[i]) res[i] = gv[i] - pv[i];
        }
    });
    if (fwd.mask.n_plus > 0) {
        const double sq = deterministic_sum(n, [&](std::size_t i) {
            const double r = res[i];
            return r * r;
        });
        fwd.loss = static_cast<float>(sq / static_cast<double>(fwd.mask.n_plus));
    }
    return fwd;
}

Tensor cpg_backward(const CpgForward& fwd, const ProbMap& pred, const CpgConfig& cfg) {
    if (pred.kind != ProbMap::Kind::Predicted) {
        throw ArgumentError("cpg_backward: map must be predicted");
    }
    const std::uint32_t c = pred.channels();
    const std::uint32_t h = pred.height();
    const std::uint32_t w = pred.width();
    if (fwd.mask.channels != c || fwd.mask.height != h || fwd.mask.width != w) {
        throw ShapeError("forward state does not match predicted map " +
                         dims_to_string(pred.data.dims()));
    }
    Tensor grad = Tensor::zeros(DType::F32, {c, h, w});
    if (fwd.mask.n_plus == 0) return grad;

    const GradKernel kernel = generate_kernel(cfg.kernel_size);
    GradField upstream{Tensor::zeros(DType::F32, fwd.residual.data.dims())};
    auto uv = upstream.data.f32();
    auto res = fwd.residual.data.f32();
    const double scale = -2.0 / static_cast<double>(fwd.mask.n_plus);
    const std::size_t n = upstream.data.element_count();
    parallel_for((n + kSumChunk - 1) / kSumChunk, [&](std::size_t chunk) {
        const std::size_t begin = chunk * kSumChunk;
        const std::size_t end = begin + std::min(kSumChunk, n - begin);
        for (std::size_t i = begin; i < end; ++i) {
            if (res[i] != 0.0f) uv[i] = static_cast<float>(scale * res[i]);
        }
    });

    Tensor grad_prob = correlate_transpose(upstream, kernel);

    // Pull back through the softmax: g_c = p_c * (u_c - sum_j p_j u_j).
    auto gp = grad_prob.f32();
    auto pv = pred.data.f32();
    auto gz = grad.f32();
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    parallel_for((hw + kSumChunk - 1) / kSumChunk, [&](std::size_t chunk) {
        const std::size_t begin = chunk * kSumChunk;
        const std::size_t end = begin + std::min(kSumChunk, hw - begin);
        for (std::size_t px = begin; px < end; ++px) {
            double dot = 0.0;
            for (std::uint32_t ch = 0; ch < c; ++ch) {
                const std::size_t at = ch * hw + px;
                dot += static_cast<double>(pv[at]) * gp[at];
            }
            for (std::uint32_t ch = 0; ch < c; ++ch) {
                const std::size_t at = ch * hw + px;
                gz[at] = static_cast<float>(pv[at] * (gp[at] - dot));
            }
        }
    });
    return grad;
}

LossReport combined_loss(const LogitMap& logits, const LabelMap& labels, const CpgConfig& cfg) {
    validate_labels(labels);
    if (logits.channels() != static_cast<std::uint32_t>(labels.num_classes) ||
        logits.height() != labels.height() || logits.width() != labels.width()) {
        throw ShapeError("logits " + dims_to_string(logits.data.dims()) +
                         " do not cover labels " + dims_to_string(labels.labels.dims()) +
                         " with " + std::to_string(labels.num_classes) + " classes");
    }
    const ProbMap gt = one_hot(labels);
    CeResult ce = ce_loss(logits, gt, cfg.ce_variant);
    const ProbMap pred = softmax(logits);
    CpgForward fwd = cpg_forward(gt, pred, cfg);

    LossReport report;
    report.ce = ce.loss;
    report.cpg = fwd.loss;
    report.n_plus = fwd.mask.n_plus;
    report.per_class_boundary_counts = fwd.mask.per_class;

    const double alpha = cfg.alpha;
    report.combined =
        static_cast<float>(static_cast<double>(ce.loss) + alpha * static_cast<double>(fwd.loss));
    if (cfg.alpha == 0.0f) {
        report.grad_logits = std::move(ce.grad);
        return report;
    }
    Tensor gcpg = cpg_backward(fwd, pred, cfg);
    auto gc = ce.grad.data.f32();
    auto gx = gcpg.f32();
    const std::size_t n = gcpg.element_count();
    parallel_for((n + kSumChunk - 1) / kSumChunk, [&](std::size_t chunk) {
        const std::size_t begin = chunk * kSumChunk;
        const std::size_t end = begin + std::min(kSumChunk, n - begin);
        for (std::size_t i = begin; i < end; ++i) {
            gc[i] = static_cast<float>(static_cast<double>(gc[i]) + alpha * gx[i]);
        }
    });
    report.grad_logits = std::move(ce.grad);
    return report;
}

}  // namespace cpg
