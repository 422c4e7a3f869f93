#include "masq/mask.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace masq {

size_t BinaryMask::count() const {
    return static_cast<size_t>(std::accumulate(bits.begin(), bits.end(), int64_t{0}));
}

double BinaryMask::ratio() const {
    if (bits.empty()) return 0.0;
    return static_cast<double>(count()) / static_cast<double>(bits.size());
}

std::array<int64_t, 4> StageMap::stage_histogram() const {
    std::array<int64_t, 4> hist{};
    for (uint8_t c : codes) hist[c]++;
    return hist;
}

namespace {

void dilate_pass_1bit(const BinaryMask& in, BinaryMask& out) {
    int h = in.height, w = in.width;
    // Horizontal then vertical 1-bit dilation: one full pass grows the set
    // region by Chebyshev distance 1.
    BinaryMask mid(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            uint8_t v = in.at(r, c);
            if (!v && c > 0) v = in.at(r, c - 1);
            if (!v && c + 1 < w) v = in.at(r, c + 1);
            mid.set(r, c, v);
        }
    }
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            uint8_t v = mid.at(r, c);
            if (!v && r > 0) v = mid.at(r - 1, c);
            if (!v && r + 1 < h) v = mid.at(r + 1, c);
            out.set(r, c, v);
        }
    }
}

} // namespace

BinaryMask dilate(const BinaryMask& mask, int distance) {
    BinaryMask cur = mask;
    BinaryMask next(mask.height, mask.width);
    for (int step = 0; step < distance; ++step) {
        dilate_pass_1bit(cur, next);
        std::swap(cur, next);
    }
    return cur;
}

BinaryMask tile_dilate(const BinaryMask& mask, int distance) {
    constexpr int kTile = 64;
    if (distance == 0) return mask;

    int h = mask.height, w = mask.width;
    BinaryMask out(h, w);
    for (int tr = 0; tr < h; tr += kTile) {
        for (int tc = 0; tc < w; tc += kTile) {
            int core_h = std::min(kTile, h - tr);
            int core_w = std::min(kTile, w - tc);
            // Halo of `distance` tokens around the tile core.
            int r0 = std::max(0, tr - distance);
            int c0 = std::max(0, tc - distance);
            int r1 = std::min(h, tr + core_h + distance);
            int c1 = std::min(w, tc + core_w + distance);

            BinaryMask patch(r1 - r0, c1 - c0);
            for (int r = r0; r < r1; ++r)
                for (int c = c0; c < c1; ++c)
                    patch.set(r - r0, c - c0, mask.at(r, c));

            BinaryMask dilated = dilate(patch, distance);
            for (int r = tr; r < tr + core_h; ++r)
                for (int c = tc; c < tc + core_w; ++c)
                    out.set(r, c, dilated.at(r - r0, c - c0));
        }
    }
    return out;
}

StageMap build_stage_map(const BinaryMask& main, const DilationPlanEntry& plan) {
    BinaryMask stage2 = dilate(main, plan.conv_count);
    BinaryMask stage1 = dilate(stage2, plan.stage1_extra);

    StageMap map(main.height, main.width);
    for (size_t i = 0; i < map.codes.size(); ++i) {
        if (main.bits[i]) map.codes[i] = 3;
        else if (stage2.bits[i]) map.codes[i] = 2;
        else if (stage1.bits[i]) map.codes[i] = 1;
        // else Stage 0
    }
    return map;
}

StageMap update_semantic(const StageMap& map, const BinaryMask& promote) {
    if (map.height != promote.height || map.width != promote.width) {
        throw ShapeError("update_semantic: stage map is " + std::to_string(map.height) + "x" +
                         std::to_string(map.width) + " but promote mask is " +
                         std::to_string(promote.height) + "x" + std::to_string(promote.width));
    }
    StageMap out = map;
    for (size_t i = 0; i < out.codes.size(); ++i) {
        if (out.codes[i] == 0b00) out.codes[i] |= promote.bits[i];
    }
    return out;
}

BinaryMask downsample(const BinaryMask& mask) {
    int h = mask.height, w = mask.width;
    int oh = (h + 1) / 2, ow = (w + 1) / 2;
    BinaryMask out(oh, ow);
    for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
            // Odd edges replicate the last row/column.
            int r0 = 2 * r, r1 = std::min(2 * r + 1, h - 1);
            int c0 = 2 * c, c1 = std::min(2 * c + 1, w - 1);
            int pop = mask.at(r0, c0) + mask.at(r0, c1) + mask.at(r1, c0) + mask.at(r1, c1);
            out.set(r, c, pop >= 2 ? 1 : 0);
        }
    }
    return out;
}

BinaryMask resample_mask(const BinaryMask& mask, int target_h, int target_w) {
    BinaryMask cur = mask;
    while (cur.height > target_h || cur.width > target_w) {
        cur = downsample(cur);
    }
    while (cur.height < target_h || cur.width < target_w) {
        BinaryMask up(cur.height * 2, cur.width * 2);
        for (int r = 0; r < up.height; ++r)
            for (int c = 0; c < up.width; ++c)
                up.set(r, c, cur.at(r / 2, c / 2));
        cur = up;
    }
    if (cur.height != target_h || cur.width != target_w) {
        throw ShapeError("resample_mask: " + std::to_string(mask.height) + "x" +
                         std::to_string(mask.width) + " does not reach " +
                         std::to_string(target_h) + "x" + std::to_string(target_w) +
                         " by halving/doubling");
    }
    return cur;
}

} // namespace masq
