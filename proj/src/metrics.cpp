#include "cpg/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cpg/errors.hpp"

namespace cpg {

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (std::int64_t v : counts) t += v;
    return t;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.num_classes != num_classes) {
        throw ShapeError("confusion matrices disagree on class count: " +
                         std::to_string(num_classes) + " vs " +
                         std::to_string(other.num_classes));
    }
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& gt) {
    validate_labels(gt);
    validate_labels(pred);
    if (!pred.labels.same_dims(gt.labels)) {
        throw ShapeError("label maps mismatch: " + dims_to_string(pred.labels.dims()) +
                         " vs " + dims_to_string(gt.labels.dims()));
    }
    if (pred.num_classes != gt.num_classes) {
        throw ShapeError("label maps disagree on class count: " +
                         std::to_string(pred.num_classes) + " vs " +
                         std::to_string(gt.num_classes));
    }
    ConfusionMatrix cm(static_cast<std::uint32_t>(gt.num_classes));
    auto pv = pred.labels.i32();
    auto gv = gt.labels.i32();
    for (std::size_t i = 0; i < gv.size(); ++i) {
        if (gt.is_ignored(gv[i])) continue;
        if (pred.is_ignored(pv[i])) {
            throw DataError("predicted labels use the ignore value at an evaluated pixel");
        }
        ++cm.at(static_cast<std::uint32_t>(gv[i]), static_cast<std::uint32_t>(pv[i]));
    }
    return cm;
}

LabelMap argmax_labels(const ProbMap& pred) {
    validate_probmap(pred);
    const std::uint32_t c = pred.channels();
    const std::uint32_t h = pred.height();
    const std::uint32_t w = pred.width();
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    Tensor out = Tensor::zeros(DType::I32, {h, w});
    auto dst = out.i32();
    auto pv = pred.data.f32();
    for (std::size_t px = 0; px < hw; ++px) {
        std::uint32_t best = 0;
        float best_v = pv[px];
        for (std::uint32_t ch = 1; ch < c; ++ch) {
            const float v = pv[ch * hw + px];
            if (v > best_v) {
                best_v = v;
                best = ch;
            }
        }
        dst[px] = static_cast<std::int32_t>(best);
    }
    LabelMap lm;
    lm.labels = std::move(out);
    lm.num_classes = static_cast<std::int32_t>(c);
    lm.ignore_index.reset();
    return lm;
}

IouReport miou(const ConfusionMatrix& cm) {
    const std::uint32_t c = cm.num_classes;
    IouReport report;
    report.per_class.assign(c, std::numeric_limits<float>::quiet_NaN());
    double sum = 0.0;
    int present = 0;
    for (std::uint32_t k = 0; k < c; ++k) {
        std::int64_t row = 0;
        std::int64_t col = 0;
        for (std::uint32_t j = 0; j < c; ++j) {
            row += cm.at(k, j);
            col += cm.at(j, k);
        }
        const std::int64_t tp = cm.at(k, k);
        const std::int64_t denom = row + col - tp;  // TP + FP + FN
        if (denom == 0) continue;
        const double iou = static_cast<double>(tp) / static_cast<double>(denom);
        report.per_class[k] = static_cast<float>(iou);
        sum += iou;
        ++present;
    }
    report.mean = present > 0 ? static_cast<float>(sum / present) : 0.0f;
    return report;
}

IouReport miou(const LabelMap& pred, const LabelMap& gt) { return miou(confusion(pred, gt)); }

Transect transect(const ProbMap& pred, const ProbMap& gt, std::uint32_t cls,
                  TransectAxis axis, std::uint32_t index) {
    validate_probmap(pred);
    if (gt.kind != ProbMap::Kind::GroundTruth) {
        throw ArgumentError("transect: second map must be ground truth");
    }
    if (!pred.data.same_dims(gt.data)) {
        throw ShapeError("probability map mismatch: " + dims_to_string(pred.data.dims()) +
                         " vs " + dims_to_string(gt.data.dims()));
    }
    const std::uint32_t c = pred.channels();
    const std::uint32_t h = pred.height();
    const std::uint32_t w = pred.width();
    if (cls >= c) {
        throw ArgumentError("class " + std::to_string(cls) + " out of range, have " +
                            std::to_string(c));
    }
    const std::uint32_t limit = axis == TransectAxis::Row ? h : w;
    if (index >= limit) {
        throw ArgumentError("line index " + std::to_string(index) + " out of range, have " +
                            std::to_string(limit));
    }
    Transect t;
    t.axis = axis;
    t.index = index;
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    auto pv = pred.data.f32();
    auto gv = gt.data.f32();
    const std::size_t base = static_cast<std::size_t>(cls) * hw;
    if (axis == TransectAxis::Row) {
        t.probability.resize(w);
        t.gt.resize(w);
        const std::size_t row = base + static_cast<std::size_t>(index) * w;
        for (std::uint32_t j = 0; j < w; ++j) {
            t.probability[j] = pv[row + j];
            t.gt[j] = gv[row + j];
        }
    } else {
        t.probability.resize(h);
        t.gt.resize(h);
        for (std::uint32_t i = 0; i < h; ++i) {
            const std::size_t at = base + static_cast<std::size_t>(i) * w + index;
            t.probability[i] = pv[at];
            t.gt[i] = gv[at];
        }
    }
    return t;
}

float boundary_sharpness(const ProbMap& pred, const LabelMap& gt) {
    validate_probmap(pred);
    validate_labels(gt);
    if (pred.height() != gt.height() || pred.width() != gt.width()) {
        throw ShapeError("probability map " + dims_to_string(pred.data.dims()) +
                         " does not cover labels " + dims_to_string(gt.labels.dims()));
    }
    if (static_cast<std::int32_t>(pred.channels()) != gt.num_classes) {
        throw ShapeError("probability map has " + std::to_string(pred.channels()) +
                         " channels for " + std::to_string(gt.num_classes) + " classes");
    }
    const std::uint32_t h = gt.height();
    const std::uint32_t w = gt.width();
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    auto pv = pred.data.f32();
    auto gv = gt.labels.i32();
    double sum = 0.0;
    std::int64_t pairs = 0;
    auto visit = [&](std::size_t a, std::size_t b) {
        if (gt.is_ignored(gv[a]) || gt.is_ignored(gv[b]) || gv[a] == gv[b]) return;
        const std::size_t plane = static_cast<std::size_t>(gv[a]) * hw;
        sum += std::abs(static_cast<double>(pv[plane + a]) - pv[plane + b]);
        ++pairs;
    };
    for (std::uint32_t i = 0; i < h; ++i) {
        for (std::uint32_t j = 0; j + 1 < w; ++j) {
            const std::size_t at = static_cast<std::size_t>(i) * w + j;
            visit(at, at + 1);
        }
    }
    for (std::uint32_t i = 0; i + 1 < h; ++i) {
        for (std::uint32_t j = 0; j < w; ++j) {
            const std::size_t at = static_cast<std::size_t>(i) * w + j;
            visit(at, at + w);
        }
    }
    return pairs > 0 ? static_cast<float>(sum / static_cast<double>(pairs)) : 0.0f;
}

}  // namespace cpg
