#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "masq/errors.hpp"

namespace masq {

// ---------------------------------------------------------------------------
// MXINT block floating-point formats: a block of 32 two's-complement integer
// elements sharing one biased 8-bit power-of-two exponent. MXINT8/4/2 differ
// only in element width.
// ---------------------------------------------------------------------------

enum class Precision : uint8_t {
    Mxint2,
    Mxint4,
    Mxint8,
};

constexpr int kBlockSize = 32;
constexpr int kExpBias = 127;

constexpr int bit_width(Precision p) {
    switch (p) {
        case Precision::Mxint2: return 2;
        case Precision::Mxint4: return 4;
        case Precision::Mxint8: return 8;
    }
    return 0;
}

// Number of 2-bit activation slices the bit-serial datapath walks through.
constexpr int slice_count(Precision p) { return bit_width(p) / 2; }

constexpr int element_min(Precision p) { return -(1 << (bit_width(p) - 1)); }
constexpr int element_max(Precision p) { return (1 << (bit_width(p) - 1)) - 1; }

// 2-bit hardware type signal: 00 / 01 / 10 for MXINT2 / MXINT4 / MXINT8.
constexpr uint8_t type_code(Precision p) {
    switch (p) {
        case Precision::Mxint2: return 0b00;
        case Precision::Mxint4: return 0b01;
        case Precision::Mxint8: return 0b10;
    }
    return 0b11;
}

Precision precision_from_type_code(uint8_t code);
Precision precision_from_name(const std::string& name);
const char* precision_name(Precision p);

// True when `a` has at least as many element bits as `b`.
constexpr bool at_least_as_wide(Precision a, Precision b) {
    return bit_width(a) >= bit_width(b);
}
constexpr Precision widest(Precision a, Precision b) {
    return at_least_as_wide(a, b) ? a : b;
}

// Pre-quantization tensor slice. All values must be finite.
using RealVector = std::vector<double>;

struct MxBlock {
    std::array<int8_t, kBlockSize> elements{};
    uint8_t shared_exp = 0; // biased by 127
    Precision precision = Precision::Mxint8;

    double scale() const; // 2^(shared_exp - 127)
};

// Quantize exactly 32 finite values into one block. The shared exponent is
// driven by the max magnitude; elements are rounded to nearest (ties to even)
// and saturate at the element range.
MxBlock quantize_block(std::span<const double> values, Precision precision);

// Exact in double precision: value_i = element_i * 2^(shared_exp - 127).
RealVector dequantize_block(const MxBlock& block);

// Blockwise quantization of a flat tensor. Inputs whose length is not a
// multiple of 32 are zero-padded to the block boundary; precision_map holds
// one entry per (padded) block.
std::vector<MxBlock> quantize_tensor(std::span<const double> values,
                                     std::span<const Precision> precision_map);

} // namespace masq
