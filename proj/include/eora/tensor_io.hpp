#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eora/matrix.hpp"

namespace eora {

// Tensor container: magic "EORA", u16 version = 1, u8 dtype, u8 ndim,
// ndim x u64 dims, then the raw little-endian row-major payload. One tensor
// per file.
enum class TensorDtype : std::uint8_t { f64 = 0, f32 = 1, u8_packed = 2 };

struct TensorData {
    TensorDtype dtype = TensorDtype::f64;
    std::vector<std::uint64_t> dims;
    std::vector<std::uint8_t> payload;

    std::uint64_t element_count() const;
};

void write_tensor(const std::string &path, const TensorData &t);
TensorData read_tensor(const std::string &path);

// f64 matrix helpers (2-D tensors).
void save_matrix(const std::string &path, const Matrix &m);
Matrix load_matrix(const std::string &path);

TensorData tensor_from_matrix(const Matrix &m);
Matrix matrix_from_tensor(const TensorData &t);

} // namespace eora
