#ifndef CPG_TENSOR_HPP
#define CPG_TENSOR_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpg/errors.hpp"

namespace cpg {

enum class DType : std::uint8_t { F32 = 0, I32 = 1 };

/// Dense row-major array of f32 or i32, innermost axis last. Immutable
/// shape; element buffers are exposed as spans for in-place fills during
/// construction phases only.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(DType dtype, std::vector<std::uint32_t> dims);
    static Tensor from_f32(std::vector<std::uint32_t> dims, std::vector<float> data);
    static Tensor from_i32(std::vector<std::uint32_t> dims, std::vector<std::int32_t> data);

    DType dtype() const { return dtype_; }
    const std::vector<std::uint32_t>& dims() const { return dims_; }
    std::size_t ndim() const { return dims_.size(); }
    std::size_t element_count() const;

    std::span<const float> f32() const;
    std::span<float> f32();
    std::span<const std::int32_t> i32() const;
    std::span<std::int32_t> i32();

    bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }

private:
    DType dtype_ = DType::F32;
    std::vector<std::uint32_t> dims_;
    std::vector<float> fdata_;
    std::vector<std::int32_t> idata_;
};

/// Exact comparison: dims, dtype, and element bit patterns (distinguishes
/// -0.0 from 0.0 and compares NaNs by payload).
bool bitwise_equal(const Tensor& a, const Tensor& b);

std::string dims_to_string(std::span<const std::uint32_t> dims);

}  // namespace cpg

#endif
