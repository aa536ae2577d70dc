#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace eora {

/// Seeded random stream with explicit value mappings so that a given seed
/// produces the same bytes on every run of the same binary. The standard
/// distributions are avoided on purpose: their output is not pinned by the
/// C++ standard.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; the spare value is cached.
    double gaussian();

    // Inclusive integer range.
    std::uint64_t uniform_index(std::uint64_t n); // [0, n)

    // Deterministic sub-seed for a named stream, so pipeline stages can
    // regenerate exactly the data a single-shot run would have produced.
    static std::uint64_t derive(std::uint64_t base, std::string_view stream);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace eora
