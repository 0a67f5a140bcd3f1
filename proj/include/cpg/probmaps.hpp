#ifndef CPG_PROBMAPS_HPP
#define CPG_PROBMAPS_HPP

#include <cstdint>
#include <optional>
#include <utility>

#include "cpg/tensor.hpp"

namespace cpg {

/// Per-pixel class indices, [H,W] i32. Values are in [0, num_classes) or
/// equal ignore_index.
struct LabelMap {
    Tensor labels;  // i32 [H,W]
    std::int32_t num_classes = 0;
    std::optional<std::int32_t> ignore_index = 255;

    std::uint32_t height() const { return labels.dims()[0]; }
    std::uint32_t width() const { return labels.dims()[1]; }
    bool is_ignored(std::int32_t v) const { return ignore_index && v == *ignore_index; }
};

// Throws ShapeError / DataError if the invariants do not hold.
void validate_labels(const LabelMap& m);

/// Per-category probabilities, [C,H,W] f32. Ground-truth maps are one-hot
/// with all-zero columns at ignored pixels; predicted maps are softmax
/// outputs summing to 1 per pixel.
struct ProbMap {
    enum class Kind { GroundTruth, Predicted };

    Tensor data;  // f32 [C,H,W]
    Kind kind = Kind::Predicted;

    std::uint32_t channels() const { return data.dims()[0]; }
    std::uint32_t height() const { return data.dims()[1]; }
    std::uint32_t width() const { return data.dims()[2]; }
};

void validate_probmap(const ProbMap& m);

/// Raw network outputs, [C,H,W] f32, finite.
struct LogitMap {
    Tensor data;  // f32 [C,H,W]

    std::uint32_t channels() const { return data.dims()[0]; }
    std::uint32_t height() const { return data.dims()[1]; }
    std::uint32_t width() const { return data.dims()[2]; }
};

// Wraps a [C,H,W] f32 tensor, rejecting NaN/Inf elements.
LogitMap make_logit_map(Tensor t);

ProbMap one_hot(const LabelMap& labels);

// Max-subtracted per-pixel softmax over the channel axis.
ProbMap softmax(const LogitMap& logits);

enum class CeVariant { SoftmaxCe, BceLogits };

struct CeResult {
    float loss = 0.0f;
    LogitMap grad;  // d(loss)/d(logits)
};

// SoftmaxCe: mean over non-ignored pixels of -sum_c y log softmax(z).
// BceLogits: mean over non-ignored pixels and channels of the
// per-element binary cross entropy on sigmoid(z).
// Ignored pixels (all-zero ground-truth columns) contribute no loss and
// no gradient.
CeResult ce_loss(const LogitMap& logits, const ProbMap& gt, CeVariant variant);

}  // namespace cpg

#endif
