#include "masq/bitserial.hpp"

#include <cmath>
#include <string>

namespace masq {

int sam_multiply(uint8_t act_slice, bool is_sign_slice, int weight) {
    int s = act_slice & 0b11;
    if (is_sign_slice && s >= 2) s -= 4; // two's complement: 10 -> -2, 11 -> -1
    return s * weight;
}

std::vector<SliceConfig> slice_schedule(Precision precision) {
    std::vector<SliceConfig> seq;
    for (int cfg = slice_count(precision) - 1; cfg >= 0; --cfg) {
        seq.push_back(SliceConfig{type_code(precision), static_cast<uint8_t>(cfg)});
    }
    return seq;
}

float BmpeAccumulator::finish_block(int shift) {
    // |fixed_acc| <= 32 * 128 * 128 = 2^19, exact as float.
    float block = round_bf16(std::ldexp(static_cast<float>(fixed_acc), shift));
    fp_acc += block;
    clear_block();
    return block;
}

float BmpeAccumulator::emit() {
    out = bf16_from_float(fp_acc);
    return bf16_to_float(out);
}

int slice_value(int8_t element, Precision precision, int cfg) {
    int bits = bit_width(precision);
    uint8_t raw = static_cast<uint8_t>(element) & static_cast<uint8_t>((1u << bits) - 1u);
    uint8_t slice = (raw >> (2 * cfg)) & 0b11;
    bool sign_slice = (cfg == slice_count(precision) - 1);
    return sam_multiply(slice, sign_slice, 1);
}

int64_t sliced_fixed_dot(const MxBlock& act, const MxBlock& wgt, SliceOrder order) {
    int slices = slice_count(act.precision);
    int bits = bit_width(act.precision);
    uint8_t mask = static_cast<uint8_t>((1u << bits) - 1u);

    int64_t fixed_acc = 0;
    for (int step = 0; step < slices; ++step) {
        int cfg = (order == SliceOrder::MsbFirst) ? slices - 1 - step : step;
        bool sign_slice = (cfg == slices - 1);
        int64_t partial = 0;
        for (int lane = 0; lane < kBlockSize; ++lane) {
            uint8_t raw = static_cast<uint8_t>(act.elements[lane]) & mask;
            uint8_t slice = (raw >> (2 * cfg)) & 0b11;
            partial += sam_multiply(slice, sign_slice, wgt.elements[lane]);
        }
        fixed_acc += partial << (2 * cfg);
    }
    return fixed_acc;
}

BlockDotResult block_dot(const MxBlock& act, const MxBlock& wgt) {
    if (wgt.precision != Precision::Mxint8) {
        throw ConfigError("block_dot requires MXINT8 weights, got " +
                          std::string(precision_name(wgt.precision)));
    }
    int bits = bit_width(act.precision);
    uint8_t mask = static_cast<uint8_t>((1u << bits) - 1u);
    std::vector<SliceConfig> schedule = slice_schedule(act.precision);

    BmpeAccumulator acc;
    for (const SliceConfig& ctl : schedule) {
        bool sign_slice = (ctl.cfg == schedule.front().cfg);
        int32_t partial = 0;
        for (int lane = 0; lane < kBlockSize; ++lane) {
            uint8_t raw = static_cast<uint8_t>(act.elements[lane]) & mask;
            uint8_t slice = (raw >> (2 * ctl.cfg)) & 0b11;
            partial += sam_multiply(slice, sign_slice, wgt.elements[lane]);
        }
        acc.add_slice_partial(partial, ctl.cfg);
    }

    int shift = static_cast<int>(act.shared_exp) + static_cast<int>(wgt.shared_exp) - 2 * kExpBias;
    BlockDotResult r;
    r.value = acc.finish_block(shift);
    r.cycles = static_cast<int>(schedule.size());
    return r;
}

float accumulate_output(std::span<const float> partials) {
    BmpeAccumulator acc;
    for (float p : partials) acc.fp_acc += p;
    return acc.emit();
}

MpuDispatchResult mpu_dispatch(const MxBlock& act, std::span<const MxBlock> weight_sets) {
    for (const MxBlock& w : weight_sets) {
        if (w.precision != Precision::Mxint8) {
            throw ConfigError("mpu_dispatch requires uniform MXINT8 weight blocks");
        }
    }
    MpuDispatchResult r;
    r.values.reserve(weight_sets.size());
    for (const MxBlock& w : weight_sets) {
        r.values.push_back(block_dot(act, w).value);
    }
    r.cycles = slice_count(act.precision);
    return r;
}

} // namespace masq
