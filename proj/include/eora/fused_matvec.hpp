#pragma once

#include <cstdint>
#include <vector>

#include "eora/compensation.hpp"
#include "eora/compression.hpp"
#include "eora/matrix.hpp"

namespace eora {

/// Quantized weight matrix with codes bit-packed row-major: each row is a
/// contiguous little-endian bitstream (codes cross byte boundaries for
/// widths like 3), rows start on byte boundaries.
struct PackedQuantMatrix {
    int bits = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    QuantParams quant;
    std::vector<std::uint8_t> codes;

    std::size_t row_stride() const { return (cols * static_cast<std::size_t>(bits) + 7) / 8; }

    std::uint32_t code_at(std::size_t i, std::size_t j) const {
        const std::size_t pos = j * static_cast<std::size_t>(bits);
        const std::uint8_t *row = codes.data() + i * row_stride();
        std::uint32_t window = row[pos / 8];
        const unsigned off = pos % 8;
        if (off + static_cast<unsigned>(bits) > 8) {
            window |= static_cast<std::uint32_t>(row[pos / 8 + 1]) << 8;
        }
        return (window >> off) & ((1u << bits) - 1u);
    }

    double dequant_at(std::size_t i, std::size_t j) const {
        return quant.scale[i] *
               (static_cast<double>(code_at(i, j)) - static_cast<double>(quant.zero_point[i]));
    }
};

/// Output-vector traffic instrumentation. The unfused path traverses the
/// output twice (write, then read-modify-write); the fused path writes each
/// element once.
struct PassCounter {
    std::uint64_t output_writes = 0;
    std::uint64_t output_reads = 0;
};

// Pack raw code values (as produced by RTN) into the bitstream layout.
PackedQuantMatrix pack_codes(const std::vector<std::uint32_t> &code_values, int bits,
                             std::size_t rows, std::size_t cols, QuantParams quant);

// Row-wise RTN of w followed by packing.
PackedQuantMatrix pack_rtn(const Matrix &w, int bits);

std::vector<std::uint32_t> unpack_codes(const PackedQuantMatrix &m);

// Dequantized dense view (for tests and reference math).
Matrix dequantize(const PackedQuantMatrix &m);

struct MatvecResult {
    std::vector<double> y;
    PassCounter passes;
};

// Two-traversal baseline: y = dequant(W) x written out, then y += B (A x)
// in a second pass over the output. Per-element accumulation runs columns
// ascending, then low-rank terms ascending.
MatvecResult matvec_reference(const PackedQuantMatrix &layer_q,
                              const LowRankAdapter &adapter,
                              const std::vector<double> &x);

// Single-traversal fusion: t = A x up front, then each output element
// accumulates the quantized dot product and the low-rank terms before its
// one write. Identical per-element accumulation order makes the result
// bitwise equal to matvec_reference.
MatvecResult matvec_fused(const PackedQuantMatrix &layer_q,
                          const LowRankAdapter &adapter,
                          const std::vector<double> &x);

} // namespace eora
