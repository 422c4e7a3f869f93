#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "masq/errors.hpp"

namespace masq {

// ---------------------------------------------------------------------------
// Four-stage precision masks. Stage 3 is the user mask itself, Stage 2/1 are
// receptive-field dilation rings, Stage 0 is everything else. Stage codes use
// the 2-bit encoding 11/10/01/00 for Stage 3/2/1/0.
// ---------------------------------------------------------------------------

struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> bits; // row-major, 0/1

    BinaryMask() = default;
    BinaryMask(int h, int w) : height(h), width(w), bits(static_cast<size_t>(h) * w, 0) {}

    uint8_t at(int r, int c) const { return bits[static_cast<size_t>(r) * width + c]; }
    void set(int r, int c, uint8_t v) { bits[static_cast<size_t>(r) * width + c] = v; }

    size_t count() const;
    double ratio() const;
    bool empty() const { return count() == 0; }
    bool operator==(const BinaryMask&) const = default;
};

struct StageMap {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> codes; // row-major, 0..3

    StageMap() = default;
    StageMap(int h, int w) : height(h), width(w), codes(static_cast<size_t>(h) * w, 0) {}

    uint8_t at(int r, int c) const { return codes[static_cast<size_t>(r) * width + c]; }
    void set(int r, int c, uint8_t v) { codes[static_cast<size_t>(r) * width + c] = v; }

    // Token counts per stage, index 0..3.
    std::array<int64_t, 4> stage_histogram() const;
    bool operator==(const StageMap&) const = default;
};

struct DilationPlanEntry {
    int conv_count = 0;   // 3x3 convolutions at this resolution -> Stage 2 distance
    int stage1_extra = 0; // doubled conv depth inherited from the next-lower level
};

using DilationPlan = std::vector<DilationPlanEntry>;

// Chebyshev-ball dilation realized as `distance` rounds of horizontal then
// vertical 1-bit dilation. Distance 0 is the identity.
BinaryMask dilate(const BinaryMask& mask, int distance);

// Same result as dilate(), but processed in 64x64 tiles with a halo exchange,
// mirroring the fixed-size hardware dilator.
BinaryMask tile_dilate(const BinaryMask& mask, int distance);

// Stage 3 = main; Stage 2 = dilation by conv_count; Stage 1 = dilation by
// conv_count + stage1_extra; Stage 0 = remainder. Higher stage wins overlap.
StageMap build_stage_map(const BinaryMask& main, const DilationPlanEntry& plan);

// Promote Stage 0 tokens flagged in `promote` to Stage 1; Stages 1-3 keep
// their codes (a bitwise OR into the low code bit of 00-coded tokens).
StageMap update_semantic(const StageMap& map, const BinaryMask& promote);

// Halve resolution with a 2x2 stride-2 majority window (>= 2 set bits).
// Odd dimensions replicate the last row/column before windowing.
BinaryMask downsample(const BinaryMask& mask);

// Resample a mask onto an arbitrary dyadic grid: repeated majority
// downsampling when shrinking, nearest-neighbour replication when growing.
BinaryMask resample_mask(const BinaryMask& mask, int target_h, int target_w);

} // namespace masq
