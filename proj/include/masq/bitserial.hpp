#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "masq/bfloat16.hpp"
#include "masq/mx_codec.hpp"

namespace masq {

// ---------------------------------------------------------------------------
// Bit-exact functional model of the SAM / BMPE / MP-MPU datapath.
//
// A BMPE consumes one 32-element activation block against 32 8-bit weights in
// 2-bit activation slices, most significant slice first. Each slice cycle the
// 32 sign-aware multipliers (SAMs) produce lane products that an adder tree
// sums; the slice partial sum is left-shifted by its bit significance and
// accumulated in a fixed-point register. The finished block result is scaled
// by both shared exponents, rounded to BF16, and accumulated across blocks in
// FP32.
// ---------------------------------------------------------------------------

// Per-cycle control: precision type signal plus the active 2-bit slice index.
struct SliceConfig {
    uint8_t type_code = 0; // 00/01/10 = MXINT2/4/8
    uint8_t cfg = 0;       // slice index counted from the LSB pair
};

// Control sequence for one block operation: cfg values in descending bit
// significance (computation begins from the most significant bits), one per
// cycle — length 4/2/1 for MXINT8/4/2.
std::vector<SliceConfig> slice_schedule(Precision precision);

// Register state of one BMPE output lane: block-local fixed-point partials,
// FP32 running sum across blocks, BF16 output.
struct BmpeAccumulator {
    int32_t fixed_acc = 0; // 32 bits cover the 32-lane worst case
    float fp_acc = 0.0f;
    uint16_t out = 0; // BF16 bits

    void clear_block() { fixed_acc = 0; }
    void add_slice_partial(int32_t partial_sum, int cfg) { fixed_acc += partial_sum << (2 * cfg); }
    // Scale the finished block by 2^shift, convert to BF16, fold into fp_acc.
    float finish_block(int shift);
    // Round the cross-block FP32 sum back to BF16.
    float emit();
};

struct EngineGeometry {
    int num_mpu = 32;
    int bmpe_per_mpu = 32;
    int lanes_per_bmpe = 32;

    int64_t blockdots_per_cycle() const {
        return static_cast<int64_t>(num_mpu) * bmpe_per_mpu;
    }
};

enum class SliceOrder { MsbFirst, LsbFirst };

// One sign-aware multiply: the 2-bit slice is two's complement when it holds
// the sign bits, unsigned otherwise.
int sam_multiply(uint8_t act_slice, bool is_sign_slice, int weight);

// Interpreted value of slice `cfg` of `element` at the given precision.
int slice_value(int8_t element, Precision precision, int cfg);

// Fixed-point result of the sliced 32-lane dot product. MSB-first is the
// hardware order; the LSB-first path exists as a consistency check.
int64_t sliced_fixed_dot(const MxBlock& act, const MxBlock& wgt,
                         SliceOrder order = SliceOrder::MsbFirst);

struct BlockDotResult {
    float value = 0.0f; // BF16-rounded
    int cycles = 0;     // 4 / 2 / 1 for MXINT8/4/2 activations
};

// Full BMPE block product: sliced multiply-accumulate, exponent scaling,
// BF16 rounding. Weights must be MXINT8.
BlockDotResult block_dot(const MxBlock& act, const MxBlock& wgt);

// Cross-block reduction: FP32 running sum over BF16 block results in the
// given order, rounded back to BF16.
float accumulate_output(std::span<const float> partials);

struct MpuDispatchResult {
    std::vector<float> values; // one per BMPE
    int cycles = 0;            // slice count, shared by all parallel BMPEs
};

// One MP-MPU dispatch: the activation block is broadcast to every BMPE, each
// of which holds its own weight block. All weights must be MXINT8.
MpuDispatchResult mpu_dispatch(const MxBlock& act, std::span<const MxBlock> weight_sets);

} // namespace masq
