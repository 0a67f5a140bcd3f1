#include "cpg/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace cpg {

namespace {

constexpr char kMagic[4] = {'C', 'P', 'G', 'T'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kMaxElements = std::size_t{1} << 31;

void put_u32le(std::vector<unsigned char>& buf, std::uint32_t v) {
    buf.push_back(static_cast<unsigned char>(v & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_tensor(const Tensor& t, std::ostream& out) {
    if (t.ndim() > 255) {
        throw ArgumentError("tensor has too many axes to serialize: " +
                            std::to_string(t.ndim()));
    }
    std::vector<unsigned char> buf;
    buf.reserve(8 + 4 * t.ndim() + 4 * t.element_count());
    buf.insert(buf.end(), kMagic, kMagic + 4);
    buf.push_back(kVersion);
    buf.push_back(static_cast<unsigned char>(t.dtype()));
    buf.push_back(static_cast<unsigned char>(t.ndim()));
    buf.push_back(0);  // reserved
    for (std::uint32_t d : t.dims()) put_u32le(buf, d);

    if (t.dtype() == DType::F32) {
        for (float v : t.f32()) put_u32le(buf, std::bit_cast<std::uint32_t>(v));
    } else {
        for (std::int32_t v : t.i32()) put_u32le(buf, static_cast<std::uint32_t>(v));
    }

    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed to write tensor bytes");
}

Tensor read_tensor(std::istream& in) {
    unsigned char head[8];
    in.read(reinterpret_cast<char*>(head), 8);
    if (in.gcount() != 8) throw FormatError("truncated tensor header");
    if (std::memcmp(head, kMagic, 4) != 0) throw FormatError("bad tensor magic");
    if (head[4] != kVersion) {
        throw UnsupportedError("unsupported tensor version " + std::to_string(head[4]));
    }
    if (head[5] != 0 && head[5] != 1) {
        throw UnsupportedError("unsupported tensor dtype code " + std::to_string(head[5]));
    }
    DType dtype = static_cast<DType>(head[5]);
    std::size_t ndim = head[6];

    std::vector<unsigned char> dimbytes(4 * ndim);
    in.read(reinterpret_cast<char*>(dimbytes.data()),
            static_cast<std::streamsize>(dimbytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != dimbytes.size()) {
        throw FormatError("truncated tensor dims");
    }
    std::vector<std::uint32_t> dims(ndim);
    std::size_t count = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        dims[i] = get_u32le(dimbytes.data() + 4 * i);
        if (dims[i] != 0 && count > kMaxElements / dims[i]) {
            throw FormatError("tensor too large: " + dims_to_string(dims));
        }
        count *= dims[i] == 0 ? 0 : dims[i];
        if (dims[i] == 0) count = 0;
    }

    std::vector<unsigned char> payload(4 * count);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::size_t>(in.gcount()) != payload.size()) {
        throw FormatError("truncated tensor payload");
    }

    if (dtype == DType::F32) {
        std::vector<float> data(count);
        for (std::size_t i = 0; i < count; ++i) {
            data[i] = std::bit_cast<float>(get_u32le(payload.data() + 4 * i));
        }
        return Tensor::from_f32(std::move(dims), std::move(data));
    }
    std::vector<std::int32_t> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        data[i] = static_cast<std::int32_t>(get_u32le(payload.data() + 4 * i));
    }
    return Tensor::from_i32(std::move(dims), std::move(data));
}

void write_tensor_file(const Tensor& t, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    write_tensor(t, f);
    f.flush();
    if (!f) throw IoError("write failed: " + path);
}

Tensor read_tensor_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    return read_tensor(f);
}

}  // namespace cpg
