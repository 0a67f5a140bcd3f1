// End-to-end acceptance gate. Each numbered criterion prints exactly one
// PASS/FAIL line; the exit status is the number of failures. argv[1] must
// be the path of the command-line binary (used by the determinism check).

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cpg/cpg_loss.hpp"
#include "cpg/errors.hpp"
#include "cpg/gradfield.hpp"
#include "cpg/kernels.hpp"
#include "cpg/metrics.hpp"
#include "cpg/probmaps.hpp"
#include "cpg/synthlab.hpp"
#include "cpg/tensor.hpp"
#include "cpg/tensor_io.hpp"
#include "oracle.hpp"
#include "util.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using namespace cpg;

namespace {

std::string g_cli;

double elapsed_s(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmtf(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---- criterion 1: kernel family ----------------------------------------

bool crit_kernel(std::string& detail) {
    const std::array<float, 9> sobel_half{-0.5f, 0.0f, 0.5f, -1.0f, 0.0f, 1.0f,
                                          -0.5f, 0.0f, 0.5f};
    GradKernel k3 = generate_kernel(3);
    for (int i = 0; i < 9; ++i) {
        if (k3.kx[i] != sobel_half[i]) {
            detail = "3x3 x-kernel deviates from the halved Sobel stencil";
            return false;
        }
    }
    for (int m : {3, 5, 7}) {
        GradKernel k = generate_kernel(m);
        const std::vector<double> ox = oracle::kernel_x(m);
        const std::vector<double> oy = oracle::kernel_y(m);
        const int half = (m - 1) / 2;
        float maxabs = 0.0f;
        for (int i = 0; i < m; ++i) {
            double row_sum = 0.0;
            for (int j = 0; j < m; ++j) {
                const float x = k.kx_at(i, j);
                if (x != static_cast<float>(ox[static_cast<std::size_t>(i) * m + j]) ||
                    k.ky_at(i, j) != static_cast<float>(oy[static_cast<std::size_t>(i) * m + j])) {
                    detail = "closed form mismatch at M=" + std::to_string(m);
                    return false;
                }
                if (j == half && x != 0.0f) {
                    detail = "nonzero center column at M=" + std::to_string(m);
                    return false;
                }
                if (x != -k.kx_at(i, m - 1 - j)) {
                    detail = "antisymmetry broken at M=" + std::to_string(m);
                    return false;
                }
                if (k.ky_at(i, j) != k.kx_at(j, i)) {
                    detail = "transpose relation broken at M=" + std::to_string(m);
                    return false;
                }
                maxabs = std::max(maxabs, std::abs(x));
                row_sum += x;
            }
            if (std::abs(row_sum) > 1e-6) {
                detail = "row sum " + fmtf(row_sum) + " at M=" + std::to_string(m);
                return false;
            }
        }
        if (maxabs != 1.0f) {
            detail = "max |element| " + fmtf(maxabs) + " at M=" + std::to_string(m);
            return false;
        }
    }
    detail = "M in {3,5,7}";
    return true;
}

// ---- criterion 2: finite-difference suite ------------------------------

bool crit_fd(std::string& detail) {
    std::mt19937 rng(4242);
    const std::array<float, 4> alphas{0.0f, 0.5f, 1.0f, 5.0f};
    double worst = 0.0;
    int instances = 0;
    for (int trial = 0; trial < 216; ++trial) {
        const int c = 2 + trial % 4;
        const int h = 3 + (trial / 24) % 6;
        const int w = 3 + (trial / 5) % 6;
        const int m = 3 + 2 * (trial % 3);
        const bool bce = (trial / 3) % 2 == 1;
        const float alpha = alphas[(trial / 6) % 4];
        const double ignore_frac = trial % 6 == 0 ? 0.15 : 0.0;

        std::vector<std::int32_t> lab =
            random_labels(rng, static_cast<std::size_t>(h) * w, c, ignore_frac);
        LabelMap lm = make_labels(static_cast<std::uint32_t>(h),
                                  static_cast<std::uint32_t>(w), lab, c);
        LogitMap z = make_logit_map(Tensor::from_f32(
            {static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(h),
             static_cast<std::uint32_t>(w)},
            random_floats(rng, static_cast<std::size_t>(c) * h * w, -3.0f, 3.0f)));

        CpgConfig cfg;
        cfg.kernel_size = m;
        cfg.alpha = alpha;
        cfg.ce_variant = bce ? CeVariant::BceLogits : CeVariant::SoftmaxCe;
        LossReport r = combined_loss(z, lm, cfg);

        oracle::CombinedSpec spec;
        spec.c = c;
        spec.h = h;
        spec.w = w;
        spec.m = m;
        spec.alpha = alpha;
        spec.bce = bce;
        spec.labels = std::vector<int>(lab.begin(), lab.end());
        auto scalar = [&](const std::vector<double>& x) { return oracle::combined(x, spec); };
        const std::vector<double> fd = oracle::fd_grad(widen(z.data.f32()), scalar);
        worst = std::max(worst, oracle::max_rel_err(widen(r.grad_logits.data.f32()), fd));
        ++instances;
    }
    detail = std::to_string(instances) + " instances, worst rel err " + fmtf(worst);
    return instances >= 200 && worst <= 1e-3;
}

// ---- criterion 3: adjointness ------------------------------------------

bool crit_adjoint(std::string& detail) {
    std::mt19937 rng(31337);
    double worst = 0.0;
    int instances = 0;
    for (int trial = 0; trial < 130; ++trial) {
        int c, h, w, m;
        if (trial < 40) {
            c = 1 + trial % 3;
            h = 3;
            w = 3;
            m = 3 + 2 * (trial % 3);  // 7x7 taps on a 3x3 image: border everywhere
        } else {
            c = 1 + trial % 4;
            h = 2 + (trial * 5) % 9;
            w = 2 + (trial * 3) % 9;
            const int cap = 2 * std::min(h, w) + 1;
            const std::array<int, 3> ms{3, 5, 7};
            m = ms[trial % 3];
            if (m > cap) m = 3;
        }
        ProbMap u = make_pred(static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(h),
                              static_cast<std::uint32_t>(w),
                              random_floats(rng, static_cast<std::size_t>(c) * h * w, -1.0f,
                                            1.0f));
        GradField v;
        v.data = Tensor::from_f32(
            {static_cast<std::uint32_t>(c), 2, static_cast<std::uint32_t>(h),
             static_cast<std::uint32_t>(w)},
            random_floats(rng, static_cast<std::size_t>(c) * 2 * h * w, -1.0f, 1.0f));

        GradKernel k = generate_kernel(m);
        GradField au = correlate(u, k);
        Tensor atv = correlate_transpose(v, k);

        double lhs = 0.0, rhs = 0.0;
        auto auv = au.data.f32(), vv = v.data.f32();
        for (std::size_t i = 0; i < auv.size(); ++i) {
            lhs += static_cast<double>(auv[i]) * vv[i];
        }
        auto uv = u.data.f32(), atvv = atv.f32();
        for (std::size_t i = 0; i < uv.size(); ++i) {
            rhs += static_cast<double>(uv[i]) * atvv[i];
        }
        const double rel =
            std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
        worst = std::max(worst, rel);
        ++instances;
    }
    detail = std::to_string(instances) + " instances, worst rel gap " + fmtf(worst);
    return instances >= 100 && worst <= 1e-4;
}

// ---- criterion 4: hand-computed step values ----------------------------

bool crit_hand_values(std::string& detail) {
    LabelMap lm = make_labels(4, 4, {0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1}, 2);
    ProbMap gt = one_hot(lm);
    GradField f = correlate(gt, generate_kernel(3));
    const std::array<float, 4> want{0.0f, 2.0f, 2.0f, 0.0f};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (std::abs(f.plane(1, 0)[static_cast<std::size_t>(i) * 4 + j] - want[j]) >
                1e-6f) {
                detail = "x-gradient row deviates from [0,2,2,0]";
                return false;
            }
        }
    }
    ProbMap pred = make_pred(2, 4, 4, std::vector<float>(32, 0.5f));
    CpgForward fwd = cpg_forward(gt, pred, CpgConfig{});
    if (fwd.mask.n_plus != 16) {
        detail = "mask count " + std::to_string(fwd.mask.n_plus) + ", wanted 16";
        return false;
    }
    if (std::abs(fwd.loss - 4.0f) > 1e-6f) {
        detail = "loss " + fmtf(fwd.loss) + ", wanted 4.0";
        return false;
    }
    detail = "mask count 16, loss " + fmtf(fwd.loss);
    return true;
}

// ---- criterion 5: boundary band widths ---------------------------------

bool crit_bands(std::string& detail) {
    LabelMap lm = generate_scene(builtin_scene("step"));
    ProbMap hot = one_hot(lm);
    const std::uint32_t hw = 64 * 64;
    std::vector<std::uint8_t> prev;
    for (int m : {3, 5, 7}) {
        GradField f = correlate(hot, generate_kernel(m));
        BoundaryMask bm = extract_boundary(f);
        const int half = (m - 1) / 2;
        for (std::uint32_t c = 0; c < 2; ++c) {
            for (std::uint32_t d = 0; d < 2; ++d) {
                for (std::uint32_t i = 0; i < 64; ++i) {
                    for (std::uint32_t j = 0; j < 64; ++j) {
                        const bool want =
                            d == 0 && j >= static_cast<std::uint32_t>(32 - half) &&
                            j <= static_cast<std::uint32_t>(31 + half);
                        const std::size_t at = ((c * 2 + d) * 64 + i) * 64 + j;
                        if (bm.mask[at] != (want ? 1 : 0)) {
                            detail = "M=" + std::to_string(m) + " band is not the " +
                                     std::to_string(2 * half) + "-column strip";
                            return false;
                        }
                    }
                }
            }
        }
        if (!prev.empty()) {
            for (std::size_t i = 0; i < 2 * 2 * hw; ++i) {
                if (prev[i] && !bm.mask[i]) {
                    detail = "support of M=" + std::to_string(m - 2) +
                             " escapes M=" + std::to_string(m);
                    return false;
                }
            }
        }
        prev = bm.mask;
    }
    detail = "widths 2/4/6, nested";
    return true;
}

// ---- criterion 6: boundary sharpening on the poles scene ---------------

bool crit_sharpening(std::string& detail) {
    LabelMap lm = generate_scene(builtin_scene("poles"));
    bool ok = true;
    for (float lr : {0.1f, 0.3f, 0.5f}) {
        float sharp[2], iou[2];
        for (int with_cpg = 0; with_cpg < 2; ++with_cpg) {
            TrainerConfig cfg;
            cfg.steps = 2000;
            cfg.lr = lr;
            cfg.blur_radius = 2;
            cfg.cpg.kernel_size = 3;
            cfg.cpg.alpha = with_cpg ? 1.0f : 0.0f;
            ToyResult r = train_toy(lm, cfg);
            ProbMap pred = softmax(r.logits);
            sharp[with_cpg] = boundary_sharpness(pred, lm);
            iou[with_cpg] = miou(argmax_labels(pred), lm).mean;
        }
        const float gap = sharp[1] - sharp[0];
        ok = ok && gap >= 0.05f && iou[1] >= iou[0];
        detail += (detail.empty() ? "" : "; ") + std::string("lr ") + fmtf(lr) + ": dsharp " +
                  fmtf(gap) + " (" + fmtf(sharp[0]) + "->" + fmtf(sharp[1]) + "), miou " +
                  fmtf(iou[0]) + "->" + fmtf(iou[1]);
    }
    return ok;
}

// ---- criterion 7: cost ordering over kernel size -----------------------

bool crit_cost_order(std::string& detail) {
    std::mt19937 rng(555);
    LabelMap lm = make_labels(512, 512, random_labels(rng, 512 * 512, 19), 19);
    ProbMap gt = one_hot(lm);
    LogitMap z = make_logit_map(Tensor::from_f32(
        {19, 512, 512}, random_floats(rng, 19 * 512 * 512, -2.0f, 2.0f)));
    ProbMap pred = softmax(z);

    std::array<std::vector<double>, 3> times;
    for (int run = 0; run < 5; ++run) {
        for (int mi = 0; mi < 3; ++mi) {
            CpgConfig cfg;
            cfg.kernel_size = 3 + 2 * mi;
            const auto t0 = Clock::now();
            CpgForward fwd = cpg_forward(gt, pred, cfg);
            times[mi].push_back(elapsed_s(t0));
            if (!(fwd.loss >= 0.0f)) {
                detail = "non-finite forward value";
                return false;
            }
        }
    }
    std::array<double, 3> median;
    for (int mi = 0; mi < 3; ++mi) {
        std::sort(times[mi].begin(), times[mi].end());
        median[mi] = times[mi][times[mi].size() / 2];
    }
    detail = "median forward s on 19x512x512: " + fmtf(median[0]) + " / " + fmtf(median[1]) +
             " / " + fmtf(median[2]);
    return median[0] < median[1] && median[1] < median[2];
}

// ---- criterion 8: CLI determinism --------------------------------------

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Relative path -> content for every regular file under dir, minus the
// stderr capture (diagnostics embed the per-run directory name).
std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::relative(e.path(), dir).string();
        if (rel == "stderr.txt") continue;
        out[rel] = read_bytes(e.path());
    }
    return out;
}

bool crit_cli_determinism(std::string& detail) {
    if (g_cli.empty()) {
        detail = "no CLI binary path on the command line";
        return false;
    }
    const fs::path scratch = fs::current_path() / "acceptance_scratch";
    std::error_code ec;
    fs::remove_all(scratch, ec);
    const fs::path inputs = scratch / "inputs";
    fs::create_directories(inputs);

    SceneSpec spec;
    spec.height = 16;
    spec.width = 16;
    spec.seed = 9;
    spec.shapes.push_back(RectShape{1, 8, 0, 8, 16});
    spec.shapes.push_back(DiskShape{2, 5, 10, 3});
    LabelMap lm = generate_scene(spec);
    write_tensor_file(lm.labels, (inputs / "labels.cpgt").string());

    std::mt19937 rng(2024);
    Tensor logits = Tensor::from_f32({3, 16, 16}, random_floats(rng, 3 * 16 * 16, -2.0f, 2.0f));
    write_tensor_file(logits, (inputs / "logits.cpgt").string());
    ProbMap pred = softmax(make_logit_map(std::move(logits)));
    write_tensor_file(pred.data, (inputs / "pred.cpgt").string());

    {
        std::ofstream scene(inputs / "scene.json");
        scene << R"({"height": 16, "width": 16, "background": 0, "seed": 9, "shapes": [)"
              << R"({"kind": "rect", "class": 1, "x": 8, "y": 0, "w": 8, "h": 16},)"
              << R"({"kind": "disk", "class": 2, "cx": 5, "cy": 10, "r": 3}]})";
    }

    const std::string lab = (inputs / "labels.cpgt").string();
    const std::string lgt = (inputs / "logits.cpgt").string();
    const std::string prd = (inputs / "pred.cpgt").string();
    const std::string scn = (inputs / "scene.json").string();

    using ArgFn = std::function<std::string(const fs::path&)>;
    const std::vector<std::pair<std::string, ArgFn>> subcommands = {
        {"kernel",
         [](const fs::path& d) { return "kernel --size 5 --out " + (d / "k.cpgt").string(); }},
        {"prob",
         [&](const fs::path& d) {
             return "prob --labels " + lab + " --classes 3 --out " + (d / "onehot.cpgt").string();
         }},
        {"grad",
         [&](const fs::path& d) {
             return "grad --labels " + lab + " --classes 3 --kernel 5 --out " +
                    (d / "field.cpgt").string() + " --pgm-magnitude " + d.string();
         }},
        {"boundary",
         [&](const fs::path& d) {
             return "--json boundary --labels " + lab + " --classes 3 --kernel 3 --out " +
                    (d / "mask.cpgt").string();
         }},
        {"loss",
         [&](const fs::path& d) {
             return "--json loss --labels " + lab + " --logits " + lgt +
                    " --classes 3 --kernel 5 --alpha 0.5 --grad-out " +
                    (d / "grad.cpgt").string();
         }},
        {"eval", [&](const fs::path&) { return "eval --pred " + prd + " --labels " + lab; }},
        {"transect",
         [&](const fs::path& d) {
             return "transect --pred " + prd + " --labels " + lab +
                    " --class 1 --row 8 --out " + (d / "tr.csv").string();
         }},
        {"train-toy",
         [&](const fs::path& d) {
             return "train-toy --scene " + scn +
                    " --steps 25 --lr 0.3 --alpha 1 --blur 1 --out-dir " +
                    (d / "out").string();
         }},
    };

    for (const auto& [name, args] : subcommands) {
        std::map<std::string, std::string> reference;
        for (int run = 0; run < 4; ++run) {
            const int threads = run < 2 ? 1 : 4;
            const fs::path dir = scratch / (name + "_run" + std::to_string(run));
            fs::create_directories(dir);
            const std::string cmd = "\"" + g_cli + "\" --threads " + std::to_string(threads) +
                                    " " + args(dir) + " > " + (dir / "stdout.txt").string() +
                                    " 2> " + (dir / "stderr.txt").string();
            if (std::system(cmd.c_str()) != 0) {
                detail = name + " exited nonzero (run " + std::to_string(run) + ")";
                return false;
            }
            std::map<std::string, std::string> got = snapshot_dir(dir);
            if (run == 0) {
                reference = std::move(got);
                continue;
            }
            if (got.size() != reference.size()) {
                detail = name + " produced a different file set on run " + std::to_string(run);
                return false;
            }
            for (const auto& [rel, bytes] : reference) {
                auto it = got.find(rel);
                if (it == got.end() || it->second != bytes) {
                    detail = name + ": " + rel + " differs on run " + std::to_string(run) +
                             " (threads " + std::to_string(threads) + ")";
                    return false;
                }
            }
        }
    }
    detail = std::to_string(subcommands.size()) + " subcommands x 4 runs";
    return true;
}

// ---- criterion 9: serialization round trip -----------------------------

bool crit_round_trip(std::string& detail) {
    std::mt19937_64 rng(99);
    int failures = 0;
    for (int i = 0; i < 1000; ++i) {
        const int nd = 1 + i % 4;
        std::vector<std::uint32_t> dims(nd);
        std::size_t count = 1;
        for (auto& d : dims) {
            d = 1 + static_cast<std::uint32_t>(rng() % 8);
            count *= d;
        }
        Tensor t;
        if (i % 2 == 0) {
            std::vector<float> vals(count);
            for (auto& v : vals) {
                v = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
            }
            t = Tensor::from_f32(dims, std::move(vals));
        } else {
            std::vector<std::int32_t> vals(count);
            for (auto& v : vals) v = static_cast<std::int32_t>(rng());
            t = Tensor::from_i32(dims, std::move(vals));
        }
        std::stringstream ss;
        write_tensor(t, ss);
        Tensor back = read_tensor(ss);
        if (!bitwise_equal(t, back)) ++failures;
    }
    detail = "1000 tensors, " + std::to_string(failures) + " mismatches";
    return failures == 0;
}

// ------------------------------------------------------------------------

struct Criterion {
    int number;
    const char* name;
    double limit_s;  // 0 = no stated budget
    bool (*run)(std::string&);
};

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_cli = argv[1];

    const std::array<Criterion, 9> criteria{{
        {1, "kernel closed form and symmetries", 1.0, crit_kernel},
        {2, "combined-gradient finite-difference suite", 120.0, crit_fd},
        {3, "correlation adjoint identity", 10.0, crit_adjoint},
        {4, "hand-computed step forward values", 0.0, crit_hand_values},
        {5, "boundary band widths and nesting", 0.0, crit_bands},
        {6, "boundary sharpening on the poles scene", 300.0, crit_sharpening},
        {7, "forward cost ordering over kernel size", 120.0, crit_cost_order},
        {8, "CLI byte determinism across runs and threads", 0.0, crit_cli_determinism},
        {9, "serialization round trip", 30.0, crit_round_trip},
    }};

    int failed = 0;
    for (const auto& c : criteria) {
        std::string detail;
        const auto t0 = Clock::now();
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs = elapsed_s(t0);
        if (ok && c.limit_s > 0.0 && secs > c.limit_s) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + std::string("over the ") +
                      fmtf(c.limit_s) + " s budget";
        }
        std::printf("criterion %d %s %s [%.2f s]%s%s\n", c.number, ok ? "PASS" : "FAIL", c.name,
                    secs, detail.empty() ? "" : ": ", detail.c_str());
        std::fflush(stdout);
        failed += ok ? 0 : 1;
    }
    std::printf("%d/9 criteria passed\n", 9 - failed);
    return failed;
}
