#include "eora/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <limits>

namespace eora {

namespace {

constexpr char kMagic[4] = {'E', 'O', 'R', 'A'};
constexpr std::uint16_t kVersion = 1;

std::size_t dtype_size(TensorDtype d) {
    switch (d) {
        case TensorDtype::f64: return 8;
        case TensorDtype::f32: return 4;
        case TensorDtype::u8_packed: return 1;
    }
    throw FormatError("unknown dtype");
}

void put_u16(std::vector<std::uint8_t> &buf, std::uint16_t v) {
    buf.push_back(static_cast<std::uint8_t>(v & 0xff));
    buf.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u64(std::vector<std::uint8_t> &buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint16_t get_u16(const std::uint8_t *p) {
    return static_cast<std::uint16_t>(p[0]) | static_cast<std::uint16_t>(p[1]) << 8;
}

std::uint64_t get_u64(const std::uint8_t *p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    return v;
}

} // namespace

std::uint64_t TensorData::element_count() const {
    std::uint64_t n = 1;
    for (std::uint64_t d : dims) n *= d;
    return n;
}

void write_tensor(const std::string &path, const TensorData &t) {
    if (t.dims.empty() || t.dims.size() > 255) {
        throw ValidationError("tensor: ndim must be in [1, 255]");
    }
    for (std::uint64_t d : t.dims) {
        if (d == 0) throw ValidationError("tensor: zero dimension");
    }
    if (t.payload.size() != t.element_count() * dtype_size(t.dtype)) {
        throw ValidationError("tensor: payload size does not match dims");
    }

    std::vector<std::uint8_t> header;
    header.insert(header.end(), kMagic, kMagic + 4);
    put_u16(header, kVersion);
    header.push_back(static_cast<std::uint8_t>(t.dtype));
    header.push_back(static_cast<std::uint8_t>(t.dims.size()));
    for (std::uint64_t d : t.dims) put_u64(header, d);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char *>(header.data()),
              static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char *>(t.payload.data()),
              static_cast<std::streamsize>(t.payload.size()));
    if (!out) throw IoError("write failed: " + path);
}

TensorData read_tensor(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path);

    if (bytes.size() < 8) throw FormatError(path + ": truncated header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError(path + ": bad magic");
    }
    if (get_u16(bytes.data() + 4) != kVersion) {
        throw FormatError(path + ": unsupported version");
    }
    std::uint8_t dtype_byte = bytes[6];
    if (dtype_byte > 2) throw FormatError(path + ": unknown dtype");
    std::uint8_t ndim = bytes[7];
    if (ndim == 0) throw ValidationError(path + ": ndim is zero");

    const std::size_t dims_end = 8 + std::size_t(ndim) * 8;
    if (bytes.size() < dims_end) throw FormatError(path + ": truncated dims");

    TensorData t;
    t.dtype = static_cast<TensorDtype>(dtype_byte);
    t.dims.resize(ndim);
    for (std::uint8_t i = 0; i < ndim; ++i) {
        t.dims[i] = get_u64(bytes.data() + 8 + std::size_t(i) * 8);
        if (t.dims[i] == 0) throw ValidationError(path + ": zero dimension");
    }
    const std::uint64_t expect = t.element_count() * dtype_size(t.dtype);
    if (bytes.size() - dims_end != expect) {
        throw FormatError(path + ": payload size mismatch (have " +
                          std::to_string(bytes.size() - dims_end) + ", want " +
                          std::to_string(expect) + ")");
    }
    t.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(dims_end), bytes.end());
    return t;
}

TensorData tensor_from_matrix(const Matrix &m) {
    TensorData t;
    t.dtype = TensorDtype::f64;
    t.dims = {m.rows(), m.cols()};
    t.payload.resize(m.size() * 8);
    // Host doubles are little-endian IEEE 754 on every supported target.
    std::memcpy(t.payload.data(), m.data().data(), t.payload.size());
    return t;
}

Matrix matrix_from_tensor(const TensorData &t) {
    if (t.dtype != TensorDtype::f64) throw FormatError("expected f64 tensor");
    if (t.dims.size() != 2) throw FormatError("expected 2-D tensor");
    std::vector<double> data(t.element_count());
    std::memcpy(data.data(), t.payload.data(), t.payload.size());
    return Matrix(static_cast<std::size_t>(t.dims[0]),
                  static_cast<std::size_t>(t.dims[1]), std::move(data));
}

void save_matrix(const std::string &path, const Matrix &m) {
    write_tensor(path, tensor_from_matrix(m));
}

Matrix load_matrix(const std::string &path) {
    return matrix_from_tensor(read_tensor(path));
}

} // namespace eora
