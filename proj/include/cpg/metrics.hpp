#ifndef CPG_METRICS_HPP
#define CPG_METRICS_HPP

#include <cstdint>
#include <vector>

#include "cpg/probmaps.hpp"

namespace cpg {

/// Rows index the ground-truth class, columns the predicted class.
/// Ignored ground-truth pixels are never counted.
struct ConfusionMatrix {
    std::uint32_t num_classes = 0;
    std::vector<std::int64_t> counts;  // C x C, row-major

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::uint32_t c)
        : num_classes(c), counts(static_cast<std::size_t>(c) * c, 0) {}

    std::int64_t& at(std::uint32_t gt, std::uint32_t pred) {
        return counts[static_cast<std::size_t>(gt) * num_classes + pred];
    }
    std::int64_t at(std::uint32_t gt, std::uint32_t pred) const {
        return counts[static_cast<std::size_t>(gt) * num_classes + pred];
    }
    std::int64_t total() const;
    void merge(const ConfusionMatrix& other);
};

ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& gt);

// Per-pixel argmax over channels; ties go to the lowest class index.
LabelMap argmax_labels(const ProbMap& pred);

/// per_class[c] is NaN when class c appears in neither input; such classes
/// do not participate in the mean.
struct IouReport {
    std::vector<float> per_class;
    float mean = 0.0f;
};

IouReport miou(const ConfusionMatrix& cm);
IouReport miou(const LabelMap& pred, const LabelMap& gt);

enum class TransectAxis { Row, Column };

/// Probability trace of one class along a single row or column, paired
/// with the 0/1 ground-truth trace of the same class.
struct Transect {
    TransectAxis axis = TransectAxis::Row;
    std::uint32_t index = 0;
    std::vector<float> probability;
    std::vector<float> gt;
};

Transect transect(const ProbMap& pred, const ProbMap& gt, std::uint32_t cls,
                  TransectAxis axis, std::uint32_t index);

// Mean |p_c(a) - p_c(b)| over 4-adjacent pixel pairs (a, b) whose labels
// differ, where c is the label of a (the left or top pixel). Pairs with an
// ignored pixel are skipped; no qualifying pairs gives 0.
float boundary_sharpness(const ProbMap& pred, const LabelMap& gt);

}  // namespace cpg

#endif
