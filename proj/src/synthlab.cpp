#include "cpg/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "cpg/errors.hpp"
#include "cpg/threading.hpp"

namespace cpg {

namespace {

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

void check_class(std::int32_t cls) {
    if (cls < 0 || cls >= 255) {
        throw ArgumentError("class index " + std::to_string(cls) + " out of range [0, 255)");
    }
}

struct Rasterizer {
    std::uint32_t h, w;
    std::span<std::int32_t> px;

    void apply(const RectShape& s) {
        check_class(s.cls);
        if (s.w == 0 || s.h == 0 || s.x + s.w > w || s.y + s.h > h) {
            throw ArgumentError("rectangle out of bounds on " + std::to_string(w) + "x" +
                                std::to_string(h) + " canvas");
        }
        for (std::uint32_t i = s.y; i < s.y + s.h; ++i) {
            for (std::uint32_t j = s.x; j < s.x + s.w; ++j) {
                px[static_cast<std::size_t>(i) * w + j] = s.cls;
            }
        }
    }

    void apply(const DiskShape& s) {
        check_class(s.cls);
        if (s.cx < s.r || s.cy < s.r || s.cx + s.r >= w || s.cy + s.r >= h) {
            throw ArgumentError("disk out of bounds on " + std::to_string(w) + "x" +
                                std::to_string(h) + " canvas");
        }
        const std::int64_t r2 = static_cast<std::int64_t>(s.r) * s.r;
        for (std::uint32_t i = s.cy - s.r; i <= s.cy + s.r; ++i) {
            const std::int64_t di = static_cast<std::int64_t>(i) - s.cy;
            for (std::uint32_t j = s.cx - s.r; j <= s.cx + s.r; ++j) {
                const std::int64_t dj = static_cast<std::int64_t>(j) - s.cx;
                if (di * di + dj * dj <= r2) {
                    px[static_cast<std::size_t>(i) * w + j] = s.cls;
                }
            }
        }
    }

    void apply(const BarShape& s) {
        check_class(s.cls);
        if (s.thickness < 1 || s.thickness > 3) {
            throw ArgumentError("bar thickness " + std::to_string(s.thickness) +
                                " outside [1, 3]");
        }
        const std::uint32_t span = s.vertical ? w : h;
        if (s.position + s.thickness > span) {
            throw ArgumentError("bar out of bounds on " + std::to_string(w) + "x" +
                                std::to_string(h) + " canvas");
        }
        if (s.vertical) {
            for (std::uint32_t i = 0; i < h; ++i) {
                for (std::uint32_t j = s.position; j < s.position + s.thickness; ++j) {
                    px[static_cast<std::size_t>(i) * w + j] = s.cls;
                }
            }
        } else {
            for (std::uint32_t i = s.position; i < s.position + s.thickness; ++i) {
                for (std::uint32_t j = 0; j < w; ++j) {
                    px[static_cast<std::size_t>(i) * w + j] = s.cls;
                }
            }
        }
    }
};

std::uint32_t get_u32(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
        throw DataError(std::string("scene json: missing integer field '") + key + "'");
    }
    const std::int64_t v = j[key].get<std::int64_t>();
    if (v < 0 || v > 0xffffffffLL) {
        throw DataError(std::string("scene json: field '") + key + "' out of range");
    }
    return static_cast<std::uint32_t>(v);
}

std::int32_t get_i32(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
        throw DataError(std::string("scene json: missing integer field '") + key + "'");
    }
    return static_cast<std::int32_t>(j[key].get<std::int64_t>());
}

}  // namespace

LabelMap generate_scene(const SceneSpec& spec) {
    if (spec.height == 0 || spec.width == 0) {
        throw ArgumentError("scene canvas must be non-empty");
    }
    check_class(spec.background);
    Tensor labels = Tensor::zeros(DType::I32, {spec.height, spec.width});
    auto px = labels.i32();
    std::fill(px.begin(), px.end(), spec.background);
    Rasterizer raster{spec.height, spec.width, px};
    std::int32_t max_cls = spec.background;
    for (const Shape& s : spec.shapes) {
        std::visit([&](const auto& shape) {
            raster.apply(shape);
            max_cls = std::max(max_cls, shape.cls);
        }, s);
    }
    LabelMap lm;
    lm.labels = std::move(labels);
    lm.num_classes = max_cls + 1;
    return lm;
}

SceneSpec parse_scene_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("scene json: ") + e.what());
    }
    if (!j.is_object()) throw DataError("scene json: top level must be an object");
    SceneSpec spec;
    spec.height = get_u32(j, "height");
    spec.width = get_u32(j, "width");
    spec.background = j.contains("background") ? get_i32(j, "background") : 0;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) throw DataError("scene json: seed must be integer");
        spec.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("shapes")) {
        if (!j["shapes"].is_array()) throw DataError("scene json: shapes must be an array");
        for (const auto& js : j["shapes"]) {
            if (!js.is_object() || !js.contains("kind") || !js["kind"].is_string()) {
                throw DataError("scene json: each shape needs a string 'kind'");
            }
            const std::string kind = js["kind"].get<std::string>();
            const std::int32_t cls = get_i32(js, "class");
            if (kind == "rect") {
                spec.shapes.push_back(RectShape{cls, get_u32(js, "x"), get_u32(js, "y"),
                                                get_u32(js, "w"), get_u32(js, "h")});
            } else if (kind == "disk") {
                spec.shapes.push_back(
                    DiskShape{cls, get_u32(js, "cx"), get_u32(js, "cy"), get_u32(js, "r")});
            } else if (kind == "bar") {
                if (!js.contains("orientation") || !js["orientation"].is_string()) {
                    throw DataError("scene json: bar needs string 'orientation'");
                }
                const std::string o = js["orientation"].get<std::string>();
                if (o != "vertical" && o != "horizontal") {
                    throw DataError("scene json: orientation must be vertical or horizontal");
                }
                spec.shapes.push_back(BarShape{cls, o == "vertical", get_u32(js, "position"),
                                               get_u32(js, "thickness")});
            } else {
                throw DataError("scene json: unknown shape kind '" + kind + "'");
            }
        }
    }
    return spec;
}

SceneSpec builtin_scene(const std::string& name) {
    SceneSpec spec;
    if (name == "poles") {
        spec.height = 128;
        spec.width = 128;
        for (std::uint32_t k = 0; k < 16; ++k) {
            spec.shapes.push_back(BarShape{1, true, 4 + 8 * k, 1});
        }
        return spec;
    }
    if (name == "step") {
        spec.height = 64;
        spec.width = 64;
        spec.shapes.push_back(RectShape{1, 32, 0, 32, 64});
        return spec;
    }
    throw ArgumentError("unknown builtin scene '" + name + "'");
}

Tensor box_blur(const Tensor& t, int radius) {
    if (t.ndim() != 3 || t.dtype() != DType::F32) {
        throw ShapeError("box_blur needs f32 dims [C,H,W], got " + dims_to_string(t.dims()));
    }
    if (radius < 0) throw ArgumentError("blur radius must be >= 0");
    Tensor out = Tensor::zeros(DType::F32, t.dims());
    auto src = t.f32();
    auto dst = out.f32();
    if (radius == 0) {
        std::copy(src.begin(), src.end(), dst.begin());
        return out;
    }
    const int h = static_cast<int>(t.dims()[1]);
    const int w = static_cast<int>(t.dims()[2]);
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    const int k = 2 * radius + 1;
    const double inv = 1.0 / (static_cast<double>(k) * k);
    parallel_for(t.dims()[0], [&](std::size_t ch) {
        const float* in = src.data() + ch * hw;
        float* o = dst.data() + ch * hw;
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                double acc = 0.0;
                for (int di = -radius; di <= radius; ++di) {
                    const float* row = in + static_cast<std::ptrdiff_t>(clampi(i + di, 0, h - 1)) * w;
                    for (int dj = -radius; dj <= radius; ++dj) {
                        acc += row[clampi(j + dj, 0, w - 1)];
                    }
                }
                o[static_cast<std::size_t>(i) * w + j] = static_cast<float>(acc * inv);
            }
        }
    });
    return out;
}

Tensor box_blur_adjoint(const Tensor& t, int radius) {
    if (t.ndim() != 3 || t.dtype() != DType::F32) {
        throw ShapeError("box_blur_adjoint needs f32 dims [C,H,W], got " +
                         dims_to_string(t.dims()));
    }
    if (radius < 0) throw ArgumentError("blur radius must be >= 0");
    Tensor out = Tensor::zeros(DType::F32, t.dims());
    auto src = t.f32();
    auto dst = out.f32();
    if (radius == 0) {
        std::copy(src.begin(), src.end(), dst.begin());
        return out;
    }
    const int h = static_cast<int>(t.dims()[1]);
    const int w = static_cast<int>(t.dims()[2]);
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    const int k = 2 * radius + 1;
    const double inv = 1.0 / (static_cast<double>(k) * k);
    parallel_for(t.dims()[0], [&](std::size_t ch) {
        const float* in = src.data() + ch * hw;
        std::vector<double> acc(hw, 0.0);
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                const double u = static_cast<double>(in[static_cast<std::size_t>(i) * w + j]) * inv;
                if (u == 0.0) continue;
                for (int di = -radius; di <= radius; ++di) {
                    double* row = acc.data() + static_cast<std::ptrdiff_t>(clampi(i + di, 0, h - 1)) * w;
                    for (int dj = -radius; dj <= radius; ++dj) {
                        row[clampi(j + dj, 0, w - 1)] += u;
                    }
                }
            }
        }
        float* o = dst.data() + ch * hw;
        for (std::size_t i = 0; i < hw; ++i) o[i] = static_cast<float>(acc[i]);
    });
    return out;
}

ToyResult train_toy(const LabelMap& labels, const TrainerConfig& cfg) {
    validate_labels(labels);
    if (cfg.steps < 1) throw ArgumentError("steps must be >= 1");
    if (!(cfg.lr > 0.0f)) throw ArgumentError("lr must be > 0");
    if (cfg.blur_radius < 0) throw ArgumentError("blur radius must be >= 0");
    const std::uint32_t c = static_cast<std::uint32_t>(labels.num_classes);
    Tensor theta = Tensor::zeros(DType::F32, {c, labels.height(), labels.width()});
    auto tv = theta.f32();

    ToyResult result;
    result.history.reserve(static_cast<std::size_t>(cfg.steps));
    for (int step = 0; step < cfg.steps; ++step) {
        LogitMap logits = make_logit_map(box_blur(theta, cfg.blur_radius));
        LossReport report = combined_loss(logits, labels, cfg.cpg);
        if (!std::isfinite(report.combined) || !std::isfinite(report.ce) ||
            !std::isfinite(report.cpg)) {
            throw TrainingError("non-finite loss at step " + std::to_string(step));
        }
        const double lr_t =
            static_cast<double>(cfg.lr) *
            std::pow(1.0 - static_cast<double>(step) / cfg.steps, static_cast<double>(cfg.lr_power));
        result.history.push_back({step, static_cast<float>(lr_t), report.ce, report.cpg,
                                  report.combined, report.n_plus});
        Tensor grad_theta = box_blur_adjoint(report.grad_logits.data, cfg.blur_radius);
        auto gv = grad_theta.f32();
        const std::size_t n = theta.element_count();
        parallel_for((n + kSumChunk - 1) / kSumChunk, [&](std::size_t chunk) {
            const std::size_t begin = chunk * kSumChunk;
            const std::size_t end = begin + std::min(kSumChunk, n - begin);
            for (std::size_t i = begin; i < end; ++i) {
                tv[i] = static_cast<float>(tv[i] - lr_t * gv[i]);
            }
        });
    }
    result.logits = make_logit_map(box_blur(theta, cfg.blur_radius));
    return result;
}

}  // namespace cpg
