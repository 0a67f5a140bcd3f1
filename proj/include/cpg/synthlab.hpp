#ifndef CPG_SYNTHLAB_HPP
#define CPG_SYNTHLAB_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "cpg/cpg_loss.hpp"
#include "cpg/probmaps.hpp"
#include "cpg/tensor.hpp"

namespace cpg {

struct RectShape {
    std::int32_t cls = 0;
    std::uint32_t x = 0, y = 0, w = 0, h = 0;
};

struct DiskShape {
    std::int32_t cls = 0;
    std::uint32_t cx = 0, cy = 0, r = 0;
};

/// Full-span stripe: every row (vertical) or column (horizontal) of the
/// canvas, thickness 1 to 3 pixels starting at position.
struct BarShape {
    std::int32_t cls = 0;
    bool vertical = true;
    std::uint32_t position = 0;
    std::uint32_t thickness = 1;
};

using Shape = std::variant<RectShape, DiskShape, BarShape>;

/// Later shapes overwrite earlier ones. The class count is one past the
/// largest class index used.
struct SceneSpec {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::int32_t background = 0;
    std::vector<Shape> shapes;
    std::uint64_t seed = 0;
};

LabelMap generate_scene(const SceneSpec& spec);

// Accepts {height, width, background, seed, shapes: [{kind, class, ...}]}
// with kind "rect" (x, y, w, h), "disk" (cx, cy, r), or "bar"
// (orientation, position, thickness).
SceneSpec parse_scene_json(const std::string& text);

// "poles": 128x128, sixteen 1-px vertical class-1 bars, columns 4+8k.
// "step": 64x64, class 1 on columns 32..63.
SceneSpec builtin_scene(const std::string& name);

// Normalized (2r+1)^2 box filter per channel, reads clamped to the edge.
// radius 0 copies.
Tensor box_blur(const Tensor& t, int radius);

// Exact adjoint of box_blur including the edge clamping.
Tensor box_blur_adjoint(const Tensor& t, int radius);

struct TrainerConfig {
    int steps = 100;
    float lr = 0.5f;
    float lr_power = 2.0f;
    int blur_radius = 0;
    CpgConfig cpg;
    std::uint64_t seed = 0;
};

struct HistoryEntry {
    int step = 0;
    float lr = 0.0f;
    float ce = 0.0f;
    float cpg = 0.0f;
    float combined = 0.0f;
    std::int64_t n_plus = 0;
};

struct ToyResult {
    LogitMap logits;
    std::vector<HistoryEntry> history;
};

// Full-batch gradient descent on a free field theta[C,H,W] (zeros at
// start) scoring combined_loss(box_blur(theta, r)), with polynomial lr
// decay lr * (1 - t/steps)^lr_power. History row t is measured before
// update t. Non-finite loss raises TrainingError naming the step.
ToyResult train_toy(const LabelMap& labels, const TrainerConfig& cfg);

}  // namespace cpg

#endif
