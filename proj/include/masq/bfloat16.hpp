#pragma once

#include <bit>
#include <cstdint>

namespace masq {

// bfloat16 helpers. The accumulator datapath emits BF16 block results and a
// BF16 final output; we keep values as float everywhere and round through
// these helpers so results are bit-exact against integer oracles.

// Round a float to the nearest bfloat16 (ties to even), returning the raw bits.
inline uint16_t bf16_from_float(float f) {
    uint32_t bits = std::bit_cast<uint32_t>(f);
    if ((bits & 0x7F800000u) == 0x7F800000u && (bits & 0x007FFFFFu) != 0) {
        return static_cast<uint16_t>((bits >> 16) | 0x0040u); // quiet NaN
    }
    uint32_t lsb = (bits >> 16) & 1u;
    bits += 0x7FFFu + lsb;
    return static_cast<uint16_t>(bits >> 16);
}

inline float bf16_to_float(uint16_t h) {
    return std::bit_cast<float>(static_cast<uint32_t>(h) << 16);
}

// Nearest representable bfloat16 value, as a float.
inline float round_bf16(float f) { return bf16_to_float(bf16_from_float(f)); }

} // namespace masq
