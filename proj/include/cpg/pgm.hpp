#ifndef CPG_PGM_HPP
#define CPG_PGM_HPP

#include <iosfwd>
#include <string>

#include "cpg/tensor.hpp"

namespace cpg {

// Binary PGM (P5, maxval 255). Each value v maps to
// round(255 * clamp((v - lo) / (hi - lo), 0, 1)).
void export_pgm(const Tensor& t, float lo, float hi, std::ostream& out);
void export_pgm_file(const Tensor& t, float lo, float hi, const std::string& path);

}  // namespace cpg

#endif
