#include "eora/fused_matvec.hpp"

#include <string>

namespace eora {

namespace {

void check_packing_args(int bits, std::size_t rows, std::size_t cols) {
    if (bits < 2 || bits > 8) {
        throw ParameterError("pack: bits must be in [2, 8], got " + std::to_string(bits));
    }
    if (rows == 0 || cols == 0) {
        throw DimensionError("pack: empty matrix");
    }
}

void check_matvec_args(const PackedQuantMatrix &layer_q, const LowRankAdapter &adapter,
                       const std::vector<double> &x) {
    if (x.size() != layer_q.cols) {
        throw DimensionError("matvec: x length " + std::to_string(x.size()) +
                             " does not match cols " + std::to_string(layer_q.cols));
    }
    if (adapter.b.rows() != layer_q.rows || adapter.a.cols() != layer_q.cols ||
        adapter.b.cols() != adapter.a.rows()) {
        throw DimensionError("matvec: adapter shape does not conform");
    }
}

// t = A x, rows ascending then columns ascending; shared verbatim by both
// matvec paths so the low-rank input is bit-identical.
std::vector<double> low_rank_input(const LowRankAdapter &adapter,
                                   const std::vector<double> &x) {
    const std::size_t r = adapter.a.rows(), k = adapter.a.cols();
    std::vector<double> t(r);
    for (std::size_t s = 0; s < r; ++s) {
        double acc = 0.0;
        const double *row = adapter.a.row_ptr(s);
        for (std::size_t j = 0; j < k; ++j) {
            acc += row[j] * x[j];
        }
        t[s] = acc;
    }
    return t;
}

} // namespace

PackedQuantMatrix pack_codes(const std::vector<std::uint32_t> &code_values, int bits,
                             std::size_t rows, std::size_t cols, QuantParams quant) {
    check_packing_args(bits, rows, cols);
    if (code_values.size() != rows * cols) {
        throw DimensionError("pack_codes: code count does not match shape");
    }
    const std::uint32_t limit = 1u << bits;
    for (std::uint32_t c : code_values) {
        if (c >= limit) {
            throw ValidationError("pack_codes: code " + std::to_string(c) +
                                  " does not fit in " + std::to_string(bits) + " bits");
        }
    }

    PackedQuantMatrix m;
    m.bits = bits;
    m.rows = rows;
    m.cols = cols;
    m.quant = std::move(quant);
    m.codes.assign(rows * m.row_stride(), 0);
    for (std::size_t i = 0; i < rows; ++i) {
        std::uint8_t *row = m.codes.data() + i * m.row_stride();
        for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t pos = j * static_cast<std::size_t>(bits);
            const unsigned off = pos % 8;
            const std::uint32_t v = code_values[i * cols + j] << off;
            row[pos / 8] |= static_cast<std::uint8_t>(v & 0xff);
            if (off + static_cast<unsigned>(bits) > 8) {
                row[pos / 8 + 1] |= static_cast<std::uint8_t>(v >> 8);
            }
        }
    }
    return m;
}

PackedQuantMatrix pack_rtn(const Matrix &w, int bits) {
    CompressedLayer q = quantize_rtn(w, bits);
    const QuantParams &params = *q.quant;
    // Recover the codes from the dequantized values: w_hat = scale (q - zp)
    // with exact grid arithmetic, so this division is exact to the integer.
    std::vector<std::uint32_t> codes(w.size());
    for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) {
            double c = q.w_hat(i, j) / params.scale[i] + params.zero_point[i];
            codes[i * w.cols() + j] = static_cast<std::uint32_t>(c + 0.5);
        }
    }
    return pack_codes(codes, bits, w.rows(), w.cols(), params);
}

std::vector<std::uint32_t> unpack_codes(const PackedQuantMatrix &m) {
    std::vector<std::uint32_t> out(m.rows * m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            out[i * m.cols + j] = m.code_at(i, j);
        }
    }
    return out;
}

Matrix dequantize(const PackedQuantMatrix &m) {
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            out(i, j) = m.dequant_at(i, j);
        }
    }
    return out;
}

MatvecResult matvec_reference(const PackedQuantMatrix &layer_q,
                              const LowRankAdapter &adapter,
                              const std::vector<double> &x) {
    check_matvec_args(layer_q, adapter, x);
    const std::size_t d = layer_q.rows, k = layer_q.cols;
    const std::size_t r = adapter.b.cols();

    MatvecResult res;
    res.y.assign(d, 0.0);

    // Pass 1: quantized product, one write per element.
    for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            acc += layer_q.dequant_at(i, j) * x[j];
        }
        res.y[i] = acc;
        ++res.passes.output_writes;
    }

    // Pass 2: low-rank residual, read-modify-write per element.
    std::vector<double> t = low_rank_input(adapter, x);
    for (std::size_t i = 0; i < d; ++i) {
        double acc = res.y[i];
        ++res.passes.output_reads;
        const double *brow = adapter.b.row_ptr(i);
        for (std::size_t s = 0; s < r; ++s) {
            acc += brow[s] * t[s];
        }
        res.y[i] = acc;
        ++res.passes.output_writes;
    }
    return res;
}

MatvecResult matvec_fused(const PackedQuantMatrix &layer_q,
                          const LowRankAdapter &adapter,
                          const std::vector<double> &x) {
    check_matvec_args(layer_q, adapter, x);
    const std::size_t d = layer_q.rows, k = layer_q.cols;
    const std::size_t r = adapter.b.cols();

    MatvecResult res;
    res.y.assign(d, 0.0);

    std::vector<double> t = low_rank_input(adapter, x);
    for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            acc += layer_q.dequant_at(i, j) * x[j];
        }
        const double *brow = adapter.b.row_ptr(i);
        for (std::size_t s = 0; s < r; ++s) {
            acc += brow[s] * t[s];
        }
        res.y[i] = acc;
        ++res.passes.output_writes;
    }
    return res;
}

} // namespace eora
