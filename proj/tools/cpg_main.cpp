#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpg/cpg_loss.hpp"
#include "cpg/errors.hpp"
#include "cpg/gradfield.hpp"
#include "cpg/kernels.hpp"
#include "cpg/metrics.hpp"
#include "cpg/pgm.hpp"
#include "cpg/probmaps.hpp"
#include "cpg/synthlab.hpp"
#include "cpg/tensor.hpp"
#include "cpg/tensor_io.hpp"
#include "cpg/threading.hpp"

namespace {

using json = nlohmann::ordered_json;

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

cpg::LabelMap load_labels(const std::string& path, std::int32_t classes) {
    cpg::Tensor t = cpg::read_tensor_file(path);
    if (t.ndim() != 2 || t.dtype() != cpg::DType::I32) {
        throw cpg::DataError("labels file " + path + " must hold an i32 [H,W] tensor, got " +
                             cpg::dims_to_string(t.dims()));
    }
    cpg::LabelMap lm;
    lm.labels = std::move(t);
    lm.num_classes = classes;
    cpg::validate_labels(lm);
    return lm;
}

cpg::LogitMap load_logits(const std::string& path) {
    cpg::Tensor t = cpg::read_tensor_file(path);
    if (t.ndim() != 3 || t.dtype() != cpg::DType::F32) {
        throw cpg::DataError("logits file " + path + " must hold an f32 [C,H,W] tensor, got " +
                             cpg::dims_to_string(t.dims()));
    }
    return cpg::make_logit_map(std::move(t));
}

cpg::Tensor slice_channel(const cpg::Tensor& t, std::uint32_t c) {
    const std::uint32_t h = t.dims()[1];
    const std::uint32_t w = t.dims()[2];
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    auto src = t.f32().subspan(c * hw, hw);
    return cpg::Tensor::from_f32({h, w}, std::vector<float>(src.begin(), src.end()));
}

cpg::SceneSpec load_scene(const std::string& arg) {
    if (arg.rfind("builtin:", 0) == 0) return cpg::builtin_scene(arg.substr(8));
    std::ifstream in(arg, std::ios::binary);
    if (!in) throw cpg::IoError("cannot open scene file " + arg);
    std::ostringstream ss;
    ss << in.rdbuf();
    return cpg::parse_scene_json(ss.str());
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw cpg::IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw cpg::IoError("failed writing " + path);
}

json iou_to_json(const cpg::IouReport& r) {
    json per = json::array();
    for (float v : r.per_class) per.push_back(v);  // non-finite dumps as null
    return per;
}

struct KernelArgs {
    int size = 3;
    std::string out;
};

struct ProbArgs {
    std::string labels, logits, out;
    std::int32_t classes = 0;
};

struct GradArgs {
    std::string labels, out, pgm_dir;
    std::int32_t classes = 0;
    int kernel = 3;
};

struct BoundaryArgs {
    std::string labels, out;
    std::int32_t classes = 0;
    int kernel = 3;
    bool per_pixel = false;
};

struct LossArgs {
    std::string labels, logits, ce = "softmax", grad_out;
    std::int32_t classes = 0;
    int kernel = 3;
    float alpha = 1.0f;
    bool per_pixel = false;
};

struct EvalArgs {
    std::string pred, labels;
};

struct TransectArgs {
    std::string pred, labels, out;
    std::int32_t cls = 0;
    std::int32_t row = -1;
    std::int32_t col = -1;
};

struct TrainArgs {
    std::string scene, out_dir, ce = "softmax";
    int steps = 500;
    float lr = 0.5f;
    float lr_power = 2.0f;
    float alpha = 1.0f;
    int kernel = 3;
    int blur = 0;
    bool per_pixel = false;
};

cpg::CeVariant parse_ce(const std::string& s) {
    return s == "bce" ? cpg::CeVariant::BceLogits : cpg::CeVariant::SoftmaxCe;
}

void run_kernel(const KernelArgs& a, bool as_json) {
    cpg::GradKernel k = cpg::generate_kernel(a.size);
    if (!a.out.empty()) {
        cpg::write_tensor_file(
            cpg::Tensor::from_f32({static_cast<std::uint32_t>(k.size),
                                   static_cast<std::uint32_t>(k.size)},
                                  k.kx),
            a.out);
        std::cerr << "wrote " << a.out << "\n";
    }
    if (as_json) {
        json jx = json::array();
        json jy = json::array();
        for (int r = 0; r < k.size; ++r) {
            json rx = json::array();
            json ry = json::array();
            for (int c = 0; c < k.size; ++c) {
                rx.push_back(k.kx_at(r, c));
                ry.push_back(k.ky_at(r, c));
            }
            jx.push_back(std::move(rx));
            jy.push_back(std::move(ry));
        }
        std::cout << json{{"size", k.size}, {"kx", jx}, {"ky", jy}}.dump() << "\n";
        return;
    }
    for (int r = 0; r < k.size; ++r) {
        for (int c = 0; c < k.size; ++c) {
            if (c) std::cout << ' ';
            std::cout << fmt9(k.kx_at(r, c));
        }
        std::cout << '\n';
    }
}

void run_prob(const ProbArgs& a, bool as_json) {
    cpg::ProbMap map;
    if (!a.labels.empty()) {
        map = cpg::one_hot(load_labels(a.labels, a.classes));
    } else {
        map = cpg::softmax(load_logits(a.logits));
    }
    cpg::write_tensor_file(map.data, a.out);
    std::cerr << "wrote " << a.out << "\n";
    if (as_json) {
        std::cout << json{{"dims", map.data.dims()}}.dump() << "\n";
    } else {
        std::cout << "map " << cpg::dims_to_string(map.data.dims()) << "\n";
    }
}

void run_grad(const GradArgs& a, bool as_json) {
    cpg::ProbMap gt = cpg::one_hot(load_labels(a.labels, a.classes));
    cpg::GradField field = cpg::correlate(gt, cpg::generate_kernel(a.kernel));
    if (!a.out.empty()) {
        cpg::write_tensor_file(field.data, a.out);
        std::cerr << "wrote " << a.out << "\n";
    }
    auto vals = field.data.f32();
    float max_abs = 0.0f;
    for (float v : vals) max_abs = std::max(max_abs, std::abs(v));
    if (!a.pgm_dir.empty()) {
        std::filesystem::create_directories(a.pgm_dir);
        auto [mag, theta] = cpg::magnitude_direction(field);
        for (std::uint32_t c = 0; c < field.channels(); ++c) {
            cpg::Tensor plane = slice_channel(mag, c);
            float hi = 0.0f;
            for (float v : plane.f32()) hi = std::max(hi, v);
            if (hi <= 0.0f) hi = 1.0f;
            const std::string path =
                (std::filesystem::path(a.pgm_dir) / ("mag_" + std::to_string(c) + ".pgm")).string();
            cpg::export_pgm_file(plane, 0.0f, hi, path);
            std::cerr << "wrote " << path << "\n";
        }
    }
    if (as_json) {
        std::cout << json{{"dims", field.data.dims()}, {"max_abs", max_abs}}.dump() << "\n";
    } else {
        std::cout << "field " << cpg::dims_to_string(field.data.dims()) << "\n"
                  << "max_abs " << fmt9(max_abs) << "\n";
    }
}

void run_boundary(const BoundaryArgs& a, bool as_json) {
    cpg::ProbMap gt = cpg::one_hot(load_labels(a.labels, a.classes));
    cpg::GradField field = cpg::correlate(gt, cpg::generate_kernel(a.kernel));
    cpg::BoundaryMask mask = cpg::extract_boundary(field);
    if (a.per_pixel) mask = cpg::collapse_per_pixel(mask);
    if (!a.out.empty()) {
        cpg::write_tensor_file(cpg::mask_to_tensor(mask), a.out);
        std::cerr << "wrote " << a.out << "\n";
    }
    if (as_json) {
        std::cout << json{{"n_plus", mask.n_plus}, {"per_class", mask.per_class}}.dump() << "\n";
        return;
    }
    std::cout << "n_plus " << mask.n_plus << "\n";
    for (std::size_t c = 0; c < mask.per_class.size(); ++c) {
        std::cout << "class " << c << " " << mask.per_class[c] << "\n";
    }
}

void run_loss(const LossArgs& a, bool as_json) {
    cpg::LabelMap labels = load_labels(a.labels, a.classes);
    cpg::LogitMap logits = load_logits(a.logits);
    cpg::CpgConfig cfg;
    cfg.kernel_size = a.kernel;
    cfg.alpha = a.alpha;
    cfg.ce_variant = parse_ce(a.ce);
    cfg.collapse = a.per_pixel ? cpg::MaskCollapse::PerPixel : cpg::MaskCollapse::PerDirection;
    cpg::LossReport report = cpg::combined_loss(logits, labels, cfg);
    if (!a.grad_out.empty()) {
        cpg::write_tensor_file(report.grad_logits.data, a.grad_out);
        std::cerr << "wrote " << a.grad_out << "\n";
    }
    if (as_json) {
        std::cout << json{{"ce", report.ce},
                          {"cpg", report.cpg},
                          {"combined", report.combined},
                          {"n_plus", report.n_plus},
                          {"per_class", report.per_class_boundary_counts}}
                         .dump()
                  << "\n";
        return;
    }
    std::cout << "ce " << fmt9(report.ce) << "\n"
              << "cpg " << fmt9(report.cpg) << "\n"
              << "combined " << fmt9(report.combined) << "\n"
              << "n_plus " << report.n_plus << "\n";
}

void run_eval(const EvalArgs& a, bool as_json) {
    cpg::Tensor pred_t = cpg::read_tensor_file(a.pred);
    cpg::Tensor gt_t = cpg::read_tensor_file(a.labels);
    if (gt_t.ndim() != 2 || gt_t.dtype() != cpg::DType::I32) {
        throw cpg::DataError("labels file " + a.labels + " must hold an i32 [H,W] tensor, got " +
                             cpg::dims_to_string(gt_t.dims()));
    }
    cpg::LabelMap pred;
    std::int32_t classes = 0;
    if (pred_t.ndim() == 3 && pred_t.dtype() == cpg::DType::F32) {
        cpg::ProbMap pm;
        pm.data = std::move(pred_t);
        pm.kind = cpg::ProbMap::Kind::Predicted;
        pred = cpg::argmax_labels(pm);
        classes = pred.num_classes;
    } else if (pred_t.ndim() == 2 && pred_t.dtype() == cpg::DType::I32) {
        std::int32_t max_v = 0;
        for (std::int32_t v : pred_t.i32()) max_v = std::max(max_v, v);
        for (std::int32_t v : gt_t.i32()) {
            if (v != 255) max_v = std::max(max_v, v);
        }
        classes = max_v + 1;
        pred.labels = std::move(pred_t);
        pred.num_classes = classes;
        pred.ignore_index.reset();
    } else {
        throw cpg::DataError("pred file " + a.pred +
                             " must hold f32 [C,H,W] probabilities or i32 [H,W] labels, got " +
                             cpg::dims_to_string(pred_t.dims()));
    }
    cpg::LabelMap gt;
    gt.labels = std::move(gt_t);
    gt.num_classes = classes;
    cpg::IouReport iou = cpg::miou(pred, gt);
    if (as_json) {
        std::cout << json{{"miou", iou.mean}, {"per_class", iou_to_json(iou)}}.dump() << "\n";
        return;
    }
    std::cout << "miou " << fmt9(iou.mean) << "\n";
    for (std::size_t c = 0; c < iou.per_class.size(); ++c) {
        std::cout << "class " << c << " " << fmt9(iou.per_class[c]) << "\n";
    }
}

void run_transect(const TransectArgs& a, bool) {
    cpg::Tensor pred_t = cpg::read_tensor_file(a.pred);
    if (pred_t.ndim() != 3 || pred_t.dtype() != cpg::DType::F32) {
        throw cpg::DataError("pred file " + a.pred + " must hold an f32 [C,H,W] tensor, got " +
                             cpg::dims_to_string(pred_t.dims()));
    }
    cpg::ProbMap pred;
    pred.data = std::move(pred_t);
    pred.kind = cpg::ProbMap::Kind::Predicted;
    cpg::ProbMap gt =
        cpg::one_hot(load_labels(a.labels, static_cast<std::int32_t>(pred.channels())));
    if ((a.row < 0) == (a.col < 0)) {
        throw cpg::ArgumentError("exactly one of --row / --col is required");
    }
    const cpg::TransectAxis axis =
        a.row >= 0 ? cpg::TransectAxis::Row : cpg::TransectAxis::Column;
    const std::uint32_t index = static_cast<std::uint32_t>(a.row >= 0 ? a.row : a.col);
    if (a.cls < 0) throw cpg::ArgumentError("--class must be >= 0");
    cpg::Transect t =
        cpg::transect(pred, gt, static_cast<std::uint32_t>(a.cls), axis, index);
    std::ostringstream csv;
    csv << "pixel_index,probability,gt\n";
    for (std::size_t i = 0; i < t.probability.size(); ++i) {
        csv << i << ',' << fmt9(t.probability[i]) << ',' << fmt9(t.gt[i]) << '\n';
    }
    if (!a.out.empty()) {
        write_text_file(a.out, csv.str());
        std::cerr << "wrote " << a.out << "\n";
    } else {
        std::cout << csv.str();
    }
}

void run_train(const TrainArgs& a, bool as_json, std::uint64_t seed) {
    cpg::SceneSpec spec = load_scene(a.scene);
    cpg::LabelMap labels = cpg::generate_scene(spec);
    cpg::TrainerConfig cfg;
    cfg.steps = a.steps;
    cfg.lr = a.lr;
    cfg.lr_power = a.lr_power;
    cfg.blur_radius = a.blur;
    cfg.cpg.kernel_size = a.kernel;
    cfg.cpg.alpha = a.alpha;
    cfg.cpg.ce_variant = parse_ce(a.ce);
    cfg.cpg.collapse =
        a.per_pixel ? cpg::MaskCollapse::PerPixel : cpg::MaskCollapse::PerDirection;
    cfg.seed = seed != 0 ? seed : spec.seed;
    cpg::ToyResult result = cpg::train_toy(labels, cfg);

    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir(a.out_dir);
    std::ostringstream csv;
    csv << "step,lr,ce,cpg,combined,n_plus\n";
    for (const cpg::HistoryEntry& e : result.history) {
        csv << e.step << ',' << fmt9(e.lr) << ',' << fmt9(e.ce) << ',' << fmt9(e.cpg) << ','
            << fmt9(e.combined) << ',' << e.n_plus << '\n';
    }
    write_text_file((dir / "history.csv").string(), csv.str());
    cpg::write_tensor_file(result.logits.data, (dir / "logits.cpgt").string());
    cpg::write_tensor_file(labels.labels, (dir / "labels.cpgt").string());

    cpg::ProbMap prob = cpg::softmax(result.logits);
    for (std::uint32_t c = 0; c < prob.channels(); ++c) {
        cpg::export_pgm_file(slice_channel(prob.data, c), 0.0f, 1.0f,
                             (dir / ("prob_" + std::to_string(c) + ".pgm")).string());
    }

    cpg::LossReport final_report = cpg::combined_loss(result.logits, labels, cfg.cpg);
    cpg::IouReport iou = cpg::miou(cpg::argmax_labels(prob), labels);
    const float sharpness = cpg::boundary_sharpness(prob, labels);
    json doc{{"steps", a.steps},
             {"ce", final_report.ce},
             {"cpg", final_report.cpg},
             {"combined", final_report.combined},
             {"n_plus", final_report.n_plus},
             {"miou", iou.mean},
             {"per_class", iou_to_json(iou)},
             {"sharpness", sharpness}};
    write_text_file((dir / "metrics.json").string(), doc.dump(2) + "\n");
    std::cerr << "wrote " << a.out_dir << "\n";
    if (as_json) {
        std::cout << doc.dump() << "\n";
        return;
    }
    std::cout << "ce " << fmt9(final_report.ce) << "\n"
              << "cpg " << fmt9(final_report.cpg) << "\n"
              << "combined " << fmt9(final_report.combined) << "\n"
              << "n_plus " << final_report.n_plus << "\n"
              << "miou " << fmt9(iou.mean) << "\n"
              << "sharpness " << fmt9(sharpness) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradient-field boundary loss toolkit"};
    app.require_subcommand(1);
    bool as_json = false;
    int threads = 0;
    std::uint64_t seed = 0;
    app.add_flag("--json", as_json, "machine-readable output");
    app.add_option("--threads", threads, "worker thread cap, 0 = hardware");
    app.add_option("--seed", seed, "seed for generated data");

    KernelArgs kernel_args;
    auto* sub_kernel = app.add_subcommand("kernel", "print a gradient kernel");
    sub_kernel->add_option("--size", kernel_args.size, "kernel size, odd, >= 3")->required();
    sub_kernel->add_option("--out", kernel_args.out, "write kx as .cpgt");

    ProbArgs prob_args;
    auto* sub_prob = app.add_subcommand("prob", "build a probability map");
    auto* prob_labels = sub_prob->add_option("--labels", prob_args.labels, "i32 [H,W] labels");
    sub_prob->add_option("--logits", prob_args.logits, "f32 [C,H,W] logits")
        ->excludes(prob_labels);
    sub_prob->add_option("--classes", prob_args.classes, "class count for --labels");
    sub_prob->add_option("--out", prob_args.out, "output .cpgt")->required();

    GradArgs grad_args;
    auto* sub_grad = app.add_subcommand("grad", "gradient field of a label map");
    sub_grad->add_option("--labels", grad_args.labels, "i32 [H,W] labels")->required();
    sub_grad->add_option("--classes", grad_args.classes, "class count")->required();
    sub_grad->add_option("--kernel", grad_args.kernel, "kernel size");
    sub_grad->add_option("--out", grad_args.out, "write field .cpgt");
    sub_grad->add_option("--pgm-magnitude", grad_args.pgm_dir, "write per-class magnitude PGMs");

    BoundaryArgs boundary_args;
    auto* sub_boundary = app.add_subcommand("boundary", "boundary mask of a label map");
    sub_boundary->add_option("--labels", boundary_args.labels, "i32 [H,W] labels")->required();
    sub_boundary->add_option("--classes", boundary_args.classes, "class count")->required();
    sub_boundary->add_option("--kernel", boundary_args.kernel, "kernel size");
    sub_boundary->add_option("--out", boundary_args.out, "write mask .cpgt");
    sub_boundary->add_flag("--per-pixel", boundary_args.per_pixel, "collapse directions");

    LossArgs loss_args;
    auto* sub_loss = app.add_subcommand("loss", "combined objective on logits");
    sub_loss->add_option("--labels", loss_args.labels, "i32 [H,W] labels")->required();
    sub_loss->add_option("--logits", loss_args.logits, "f32 [C,H,W] logits")->required();
    sub_loss->add_option("--classes", loss_args.classes, "class count")->required();
    sub_loss->add_option("--kernel", loss_args.kernel, "kernel size");
    sub_loss->add_option("--alpha", loss_args.alpha, "gradient-term weight")->required();
    sub_loss->add_option("--ce", loss_args.ce, "cross-entropy variant")
        ->check(CLI::IsMember({"softmax", "bce"}));
    sub_loss->add_option("--grad-out", loss_args.grad_out, "write d(loss)/d(logits) .cpgt");
    sub_loss->add_flag("--per-pixel", loss_args.per_pixel, "collapse mask directions");

    EvalArgs eval_args;
    auto* sub_eval = app.add_subcommand("eval", "IoU of a prediction");
    sub_eval->add_option("--pred", eval_args.pred, "f32 [C,H,W] or i32 [H,W] .cpgt")->required();
    sub_eval->add_option("--labels", eval_args.labels, "i32 [H,W] labels")->required();

    TransectArgs transect_args;
    auto* sub_transect = app.add_subcommand("transect", "probability trace along a line");
    sub_transect->add_option("--pred", transect_args.pred, "f32 [C,H,W] probabilities")
        ->required();
    sub_transect->add_option("--labels", transect_args.labels, "i32 [H,W] labels")->required();
    sub_transect->add_option("--class", transect_args.cls, "class index")->required();
    auto* row_opt = sub_transect->add_option("--row", transect_args.row, "row index");
    sub_transect->add_option("--col", transect_args.col, "column index")->excludes(row_opt);
    sub_transect->add_option("--out", transect_args.out, "write CSV here instead of stdout");

    TrainArgs train_args;
    auto* sub_train = app.add_subcommand("train-toy", "fit a blurred logit field to a scene");
    sub_train->add_option("--scene", train_args.scene, "builtin:poles, builtin:step, or JSON file")
        ->required();
    sub_train->add_option("--steps", train_args.steps, "descent steps")->required();
    sub_train->add_option("--lr", train_args.lr, "initial learning rate")->required();
    sub_train->add_option("--alpha", train_args.alpha, "gradient-term weight")->required();
    sub_train->add_option("--kernel", train_args.kernel, "kernel size");
    sub_train->add_option("--blur", train_args.blur, "logit box-blur radius");
    sub_train->add_option("--lr-power", train_args.lr_power, "polynomial decay exponent");
    sub_train->add_option("--ce", train_args.ce, "cross-entropy variant")
        ->check(CLI::IsMember({"softmax", "bce"}));
    sub_train->add_flag("--per-pixel", train_args.per_pixel, "collapse mask directions");
    sub_train->add_option("--out-dir", train_args.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        cpg::set_thread_cap(threads);
        if (app.got_subcommand(sub_kernel)) {
            run_kernel(kernel_args, as_json);
        } else if (app.got_subcommand(sub_prob)) {
            if (!prob_args.labels.empty() && prob_args.classes <= 0) {
                throw cpg::ArgumentError("--classes is required with --labels");
            }
            if (prob_args.labels.empty() && prob_args.logits.empty()) {
                throw cpg::ArgumentError("one of --labels / --logits is required");
            }
            run_prob(prob_args, as_json);
        } else if (app.got_subcommand(sub_grad)) {
            run_grad(grad_args, as_json);
        } else if (app.got_subcommand(sub_boundary)) {
            run_boundary(boundary_args, as_json);
        } else if (app.got_subcommand(sub_loss)) {
            run_loss(loss_args, as_json);
        } else if (app.got_subcommand(sub_eval)) {
            run_eval(eval_args, as_json);
        } else if (app.got_subcommand(sub_transect)) {
            run_transect(transect_args, as_json);
        } else if (app.got_subcommand(sub_train)) {
            run_train(train_args, as_json, seed);
        }
        return 0;
    } catch (const cpg::ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
