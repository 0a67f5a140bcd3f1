#ifndef TESTS_UTIL_HPP
#define TESTS_UTIL_HPP

// Construction and conversion helpers shared by the test files.

#include <random>
#include <vector>

#include "cpg/probmaps.hpp"
#include "cpg/tensor.hpp"
#include "oracle.hpp"

inline cpg::LabelMap make_labels(std::uint32_t h, std::uint32_t w,
                                 std::vector<std::int32_t> values, std::int32_t classes) {
    cpg::LabelMap lm;
    lm.labels = cpg::Tensor::from_i32({h, w}, std::move(values));
    lm.num_classes = classes;
    return lm;
}

inline cpg::ProbMap make_pred(std::uint32_t c, std::uint32_t h, std::uint32_t w,
                              std::vector<float> values) {
    cpg::ProbMap m;
    m.data = cpg::Tensor::from_f32({c, h, w}, std::move(values));
    m.kind = cpg::ProbMap::Kind::Predicted;
    return m;
}

inline cpg::ProbMap make_gt(std::uint32_t c, std::uint32_t h, std::uint32_t w,
                            std::vector<float> values) {
    cpg::ProbMap m;
    m.data = cpg::Tensor::from_f32({c, h, w}, std::move(values));
    m.kind = cpg::ProbMap::Kind::GroundTruth;
    return m;
}

inline std::vector<double> widen(std::span<const float> v) {
    return std::vector<double>(v.begin(), v.end());
}

inline std::vector<int> labels_as_int(const cpg::LabelMap& lm) {
    auto s = lm.labels.i32();
    return std::vector<int>(s.begin(), s.end());
}

// Random labels in [0, classes) with an optional sprinkle of the ignore
// value 255.
inline std::vector<std::int32_t> random_labels(std::mt19937& rng, std::size_t n, int classes,
                                               double ignore_fraction = 0.0) {
    std::uniform_int_distribution<int> pick(0, classes - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<std::int32_t> out(n);
    for (auto& v : out) {
        v = coin(rng) < ignore_fraction ? 255 : pick(rng);
    }
    return out;
}

inline std::vector<float> random_floats(std::mt19937& rng, std::size_t n, float lo, float hi) {
    std::uniform_real_distribution<float> pick(lo, hi);
    std::vector<float> out(n);
    for (auto& v : out) v = pick(rng);
    return out;
}

#endif
