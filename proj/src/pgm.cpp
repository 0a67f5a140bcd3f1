#include "cpg/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

namespace cpg {

void export_pgm(const Tensor& t, float lo, float hi, std::ostream& out) {
    if (t.ndim() != 2) {
        throw ShapeError("PGM export needs a 2-D tensor, got dims " +
                         dims_to_string(t.dims()));
    }
    if (t.dtype() != DType::F32) throw DataError("PGM export needs an f32 tensor");
    if (!(hi > lo)) throw ArgumentError("PGM range needs hi > lo");

    const std::uint32_t h = t.dims()[0];
    const std::uint32_t w = t.dims()[1];
    out << "P5\n" << w << ' ' << h << "\n255\n";

    auto vals = t.f32();
    std::vector<unsigned char> row(vals.size());
    const float scale = hi - lo;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        float u = (vals[i] - lo) / scale;
        u = std::clamp(u, 0.0f, 1.0f);
        row[i] = static_cast<unsigned char>(std::lround(255.0f * u));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
    if (!out) throw IoError("failed to write PGM bytes");
}

void export_pgm_file(const Tensor& t, float lo, float hi, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    export_pgm(t, lo, hi, f);
    f.flush();
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace cpg
