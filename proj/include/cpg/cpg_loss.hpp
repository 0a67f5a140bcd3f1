#ifndef CPG_CPG_LOSS_HPP
#define CPG_CPG_LOSS_HPP

#include <cstdint>
#include <vector>

#include "cpg/gradfield.hpp"
#include "cpg/kernels.hpp"
#include "cpg/probmaps.hpp"

namespace cpg {

enum class MaskCollapse { PerDirection, PerPixel };

struct CpgConfig {
    int kernel_size = 3;
    float alpha = 1.0f;
    CeVariant ce_variant = CeVariant::SoftmaxCe;
    MaskCollapse collapse = MaskCollapse::PerDirection;
};

/// Forward state kept for the backward pass. residual holds
/// mask * (gt_field - pred_field); entries outside the mask are zero.
struct CpgForward {
    float loss = 0.0f;
    BoundaryMask mask;
    GradField residual;
};

// Mean squared gradient-field mismatch over the masked entries,
// normalized by the mask count. Empty mask gives loss 0.
CpgForward cpg_forward(const ProbMap& gt, const ProbMap& pred, const CpgConfig& cfg);

// d(loss)/d(logits), [C,H,W]: scales the stored residual by -2/n_plus,
// applies the correlation adjoint, then the softmax Jacobian of pred.
// The mask is a constant of the ground truth, not differentiated.
Tensor cpg_backward(const CpgForward& fwd, const ProbMap& pred, const CpgConfig& cfg);

struct LossReport {
    float ce = 0.0f;
    float cpg = 0.0f;
    float combined = 0.0f;  // ce + alpha * cpg
    LogitMap grad_logits;
    std::int64_t n_plus = 0;
    std::vector<std::int64_t> per_class_boundary_counts;
};

// Full objective on logits against integer labels: cross-entropy plus
// alpha times the gradient-field term, with the total gradient. With
// alpha = 0 the gradient is bit-identical to the plain CE gradient.
LossReport combined_loss(const LogitMap& logits, const LabelMap& labels, const CpgConfig& cfg);

}  // namespace cpg

#endif
