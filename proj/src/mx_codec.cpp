#include "masq/mx_codec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace masq {

Precision precision_from_type_code(uint8_t code) {
    switch (code) {
        case 0b00: return Precision::Mxint2;
        case 0b01: return Precision::Mxint4;
        case 0b10: return Precision::Mxint8;
    }
    throw ConfigError("unknown precision type code " + std::to_string(code));
}

const char* precision_name(Precision p) {
    switch (p) {
        case Precision::Mxint2: return "mxint2";
        case Precision::Mxint4: return "mxint4";
        case Precision::Mxint8: return "mxint8";
    }
    return "?";
}

Precision precision_from_name(const std::string& name) {
    if (name == "mxint2") return Precision::Mxint2;
    if (name == "mxint4") return Precision::Mxint4;
    if (name == "mxint8") return Precision::Mxint8;
    throw ConfigError("unknown precision name '" + name + "'");
}

double MxBlock::scale() const {
    return std::ldexp(1.0, static_cast<int>(shared_exp) - kExpBias);
}

namespace {

// Round to nearest integer, ties to even. Independent of the FP environment.
double round_even(double v) {
    double f = std::floor(v);
    double diff = v - f;
    if (diff > 0.5) return f + 1.0;
    if (diff < 0.5) return f;
    return (std::fmod(f, 2.0) == 0.0) ? f : f + 1.0;
}

} // namespace

MxBlock quantize_block(std::span<const double> values, Precision precision) {
    if (values.size() != kBlockSize) {
        throw ShapeError("quantize_block expects exactly 32 values, got " +
                         std::to_string(values.size()));
    }
    double max_abs = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidValue("non-finite value in quantize_block input");
        max_abs = std::max(max_abs, std::fabs(v));
    }

    MxBlock block;
    block.precision = precision;
    if (max_abs == 0.0) {
        block.shared_exp = 0;
        return block;
    }

    int bits = bit_width(precision);
    int exp = static_cast<int>(std::floor(std::log2(max_abs))) - (bits - 2) + kExpBias;
    exp = std::clamp(exp, 0, 255);
    block.shared_exp = static_cast<uint8_t>(exp);

    double inv_scale = std::ldexp(1.0, -(exp - kExpBias));
    int lo = element_min(precision);
    int hi = element_max(precision);
    for (int i = 0; i < kBlockSize; ++i) {
        double q = round_even(values[i] * inv_scale);
        q = std::clamp(q, static_cast<double>(lo), static_cast<double>(hi));
        block.elements[i] = static_cast<int8_t>(q);
    }
    return block;
}

RealVector dequantize_block(const MxBlock& block) {
    RealVector out(kBlockSize);
    int e = static_cast<int>(block.shared_exp) - kExpBias;
    for (int i = 0; i < kBlockSize; ++i) {
        out[i] = std::ldexp(static_cast<double>(block.elements[i]), e);
    }
    return out;
}

std::vector<MxBlock> quantize_tensor(std::span<const double> values,
                                     std::span<const Precision> precision_map) {
    size_t num_blocks = (values.size() + kBlockSize - 1) / kBlockSize;
    if (precision_map.size() != num_blocks) {
        throw ShapeError("precision map has " + std::to_string(precision_map.size()) +
                         " entries for " + std::to_string(num_blocks) + " blocks");
    }
    std::vector<MxBlock> blocks;
    blocks.reserve(num_blocks);
    std::array<double, kBlockSize> padded{};
    for (size_t b = 0; b < num_blocks; ++b) {
        padded.fill(0.0);
        size_t begin = b * kBlockSize;
        size_t n = std::min<size_t>(kBlockSize, values.size() - begin);
        std::copy_n(values.begin() + static_cast<ptrdiff_t>(begin), n, padded.begin());
        blocks.push_back(quantize_block(padded, precision_map[b]));
    }
    return blocks;
}

} // namespace masq
