#include "cpg/tensor.hpp"

#include <bit>
#include <cstring>
#include <sstream>

namespace cpg {

namespace {

std::size_t checked_product(const std::vector<std::uint32_t>& dims) {
    std::size_t n = 1;
    for (std::uint32_t d : dims) {
        if (d != 0 && n > SIZE_MAX / d) {
            throw ArgumentError("tensor dims overflow: " + dims_to_string(dims));
        }
        n *= d;
    }
    return n;
}

}  // namespace

Tensor Tensor::zeros(DType dtype, std::vector<std::uint32_t> dims) {
    std::size_t n = checked_product(dims);
    Tensor t;
    t.dtype_ = dtype;
    t.dims_ = std::move(dims);
    if (dtype == DType::F32) {
        t.fdata_.assign(n, 0.0f);
    } else {
        t.idata_.assign(n, 0);
    }
    return t;
}

Tensor Tensor::from_f32(std::vector<std::uint32_t> dims, std::vector<float> data) {
    if (checked_product(dims) != data.size()) {
        throw ArgumentError("data length " + std::to_string(data.size()) +
                            " does not match dims " + dims_to_string(dims));
    }
    Tensor t;
    t.dtype_ = DType::F32;
    t.dims_ = std::move(dims);
    t.fdata_ = std::move(data);
    return t;
}

Tensor Tensor::from_i32(std::vector<std::uint32_t> dims, std::vector<std::int32_t> data) {
    if (checked_product(dims) != data.size()) {
        throw ArgumentError("data length " + std::to_string(data.size()) +
                            " does not match dims " + dims_to_string(dims));
    }
    Tensor t;
    t.dtype_ = DType::I32;
    t.dims_ = std::move(dims);
    t.idata_ = std::move(data);
    return t;
}

std::size_t Tensor::element_count() const {
    return dtype_ == DType::F32 ? fdata_.size() : idata_.size();
}

std::span<const float> Tensor::f32() const {
    if (dtype_ != DType::F32) throw Error("tensor is not f32");
    return fdata_;
}

std::span<float> Tensor::f32() {
    if (dtype_ != DType::F32) throw Error("tensor is not f32");
    return fdata_;
}

std::span<const std::int32_t> Tensor::i32() const {
    if (dtype_ != DType::I32) throw Error("tensor is not i32");
    return idata_;
}

std::span<std::int32_t> Tensor::i32() {
    if (dtype_ != DType::I32) throw Error("tensor is not i32");
    return idata_;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.dtype() != b.dtype() || a.dims() != b.dims()) return false;
    if (a.dtype() == DType::F32) {
        auto xs = a.f32();
        auto ys = b.f32();
        return std::memcmp(xs.data(), ys.data(), xs.size() * sizeof(float)) == 0;
    }
    auto xs = a.i32();
    auto ys = b.i32();
    return std::memcmp(xs.data(), ys.data(), xs.size() * sizeof(std::int32_t)) == 0;
}

std::string dims_to_string(std::span<const std::uint32_t> dims) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) os << ',';
        os << dims[i];
    }
    os << ']';
    return os.str();
}

}  // namespace cpg
