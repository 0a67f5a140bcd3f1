#ifndef CPG_TENSOR_IO_HPP
#define CPG_TENSOR_IO_HPP

#include <iosfwd>
#include <string>

#include "cpg/tensor.hpp"

namespace cpg {

// .cpgt binary format, little-endian throughout:
//   "CPGT" | version u8 (=1) | dtype u8 (0=f32, 1=i32) | ndim u8 |
//   reserved u8 (=0) | ndim x u32 dims | payload, row-major elements.
void write_tensor(const Tensor& t, std::ostream& out);
Tensor read_tensor(std::istream& in);

void write_tensor_file(const Tensor& t, const std::string& path);
Tensor read_tensor_file(const std::string& path);

}  // namespace cpg

#endif
