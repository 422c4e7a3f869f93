#include "masq/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "masq/ops.hpp"

namespace masq {

void HardwareConfig::validate() const {
    if (geometry.num_mpu < 1 || geometry.bmpe_per_mpu < 1) {
        throw ConfigError("hardware: engine geometry must be positive");
    }
    if (geometry.lanes_per_bmpe != kBlockSize) {
        throw ConfigError("hardware: BMPE lane count must match the 32-element block format");
    }
    if (freq_hz <= 0 || onchip_bytes <= 0 || dram_bw_bytes_per_s <= 0 || vpu_ops_per_cycle < 1) {
        throw ConfigError("hardware: frequency, memory sizes and VPU throughput must be positive");
    }
    for (double pj : energy.pj_per_mac_cycle) {
        if (pj < 0) throw ConfigError("hardware: energy table entries must be non-negative");
    }
    if (energy.pj_per_vpu_op < 0 || energy.pj_per_onchip_byte < 0 || energy.pj_per_dram_byte < 0 ||
        energy.static_pj_per_cycle < 0) {
        throw ConfigError("hardware: energy table entries must be non-negative");
    }
}

namespace {

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

// Wire size of one token's activation vector: packed elements plus one
// exponent byte per 32-element block.
int64_t bytes_per_token(int channels, Precision p) {
    return ceil_div(static_cast<int64_t>(channels) * bit_width(p), 8) + ceil_div(channels, kBlockSize);
}

int64_t weight_count(const LayerInstance& layer) {
    switch (layer.kind) {
        case LayerKind::Conv3x3: return 9LL * layer.c_in * layer.c_out;
        case LayerKind::Conv1x1:
        case LayerKind::Linear: return static_cast<int64_t>(layer.c_in) * layer.c_out;
        case LayerKind::Attention: return 4LL * layer.c_in * layer.c_in;
        default: return 0;
    }
}

int64_t weight_bytes(const LayerInstance& layer) {
    int64_t count = weight_count(layer);
    if (count == 0) return 0;
    return count + ceil_div(count, kBlockSize); // MXINT8 elements + shared exponents
}

bool is_matrix_kind(LayerKind k) {
    return k == LayerKind::Conv3x3 || k == LayerKind::Conv1x1 || k == LayerKind::Linear ||
           k == LayerKind::Attention;
}

// Attention blockdots that belong to the QK score product, per token.
int64_t qk_blockdots_per_token(const LayerInstance& layer) {
    if (layer.kind != LayerKind::Attention) return 0;
    return static_cast<int64_t>(layer.tokens) * ceil_div(layer.c_in, kBlockSize);
}

// Refinement precision floor: Stage 2-3 tokens at MXINT8, Stage 0-1 at MXINT4.
const PhaseTable kRefineFloor = {Precision::Mxint4, Precision::Mxint4, Precision::Mxint8,
                                 Precision::Mxint8};

std::vector<Precision> refine_floor_blocks(const StageMap& map) {
    const size_t tokens = map.codes.size();
    const size_t num_blocks = (tokens + kBlockSize - 1) / kBlockSize;
    std::vector<Precision> out;
    out.reserve(num_blocks);
    for (size_t b = 0; b < num_blocks; ++b) {
        size_t begin = b * kBlockSize;
        size_t end = std::min(tokens, begin + kBlockSize);
        Precision p = kRefineFloor[map.codes[begin]];
        for (size_t i = begin + 1; i < end; ++i) p = widest(p, kRefineFloor[map.codes[i]]);
        out.push_back(p);
    }
    return out;
}

// Core accounting shared by policy and uniform paths. `boosted` (same length
// as `blocks`) prices the QK share of an attention layer when present.
LayerCost cost_with_blocks(const LayerInstance& layer, std::span<const Precision> blocks,
                           std::span<const Precision> boosted, const HardwareConfig& hw) {
    LayerCost cost;
    cost.name = layer.name;
    cost.kind = layer.kind;
    cost.level = layer.level;

    int64_t act_in_bytes = 0;
    int64_t act_out_bytes = 0;
    std::array<int64_t, 3> su_by_prec{}; // indexed by Precision

    if (is_matrix_kind(layer.kind)) {
        const int64_t qk_bd = qk_blockdots_per_token(layer);
        const int64_t rest_bd = layer.blockdots_per_token - (boosted.empty() ? 0 : qk_bd);
        for (size_t b = 0; b < blocks.size(); ++b) {
            int64_t real = std::min<int64_t>(kBlockSize, layer.tokens - static_cast<int64_t>(b) * kBlockSize);
            Precision p = blocks[b];
            if (boosted.empty()) {
                su_by_prec[static_cast<size_t>(p)] += real * layer.blockdots_per_token * slice_count(p);
            } else {
                Precision q = boosted[b];
                su_by_prec[static_cast<size_t>(p)] += real * rest_bd * slice_count(p);
                su_by_prec[static_cast<size_t>(q)] += real * qk_bd * slice_count(q);
            }
            act_in_bytes += real * bytes_per_token(layer.c_in, p);
            act_out_bytes += real * bytes_per_token(layer.c_out, p);
        }
        cost.slice_units = su_by_prec[0] + su_by_prec[1] + su_by_prec[2];
        cost.compute_cycles =
            static_cast<double>(cost.slice_units) / static_cast<double>(hw.geometry.blockdots_per_cycle());
    } else if (layer.kind == LayerKind::Softmax) {
        cost.vpu_ops = layer.vector_op_count;
        cost.compute_cycles = static_cast<double>(ceil_div(cost.vpu_ops, hw.vpu_ops_per_cycle));
        act_in_bytes = static_cast<int64_t>(layer.tokens) * layer.tokens;
        act_out_bytes = act_in_bytes;
    } else {
        cost.vpu_ops = layer.vector_op_count;
        cost.compute_cycles = static_cast<double>(ceil_div(cost.vpu_ops, hw.vpu_ops_per_cycle));
        for (size_t b = 0; b < blocks.size(); ++b) {
            int64_t real = std::min<int64_t>(kBlockSize, layer.tokens - static_cast<int64_t>(b) * kBlockSize);
            act_in_bytes += real * bytes_per_token(layer.c_in, blocks[b]);
            act_out_bytes += real * bytes_per_token(layer.c_out, blocks[b]);
        }
    }

    const int64_t wgt = weight_bytes(layer);
    cost.onchip_bytes = act_in_bytes + act_out_bytes + wgt;
    // Weights stream from DRAM each invocation; activations spill only past
    // the on-chip budget.
    cost.dram_bytes = wgt + std::max<int64_t>(0, act_in_bytes + act_out_bytes - hw.onchip_bytes);
    cost.memory_cycles = static_cast<double>(cost.dram_bytes) * hw.freq_hz / hw.dram_bw_bytes_per_s;
    cost.cycles = std::max(cost.compute_cycles, cost.memory_cycles);
    cost.memory_bound = cost.memory_cycles > cost.compute_cycles;

    double pj = 0.0;
    for (size_t p = 0; p < 3; ++p) {
        pj += static_cast<double>(su_by_prec[p]) * hw.geometry.lanes_per_bmpe *
              hw.energy.pj_per_mac_cycle[p];
    }
    pj += static_cast<double>(cost.vpu_ops) * hw.energy.pj_per_vpu_op;
    pj += static_cast<double>(cost.onchip_bytes) * hw.energy.pj_per_onchip_byte;
    pj += static_cast<double>(cost.dram_bytes) * hw.energy.pj_per_dram_byte;
    pj += cost.cycles * hw.energy.static_pj_per_cycle;
    cost.energy_pj = static_cast<int64_t>(std::llround(pj));
    return cost;
}

} // namespace

LayerCost simulate_layer(const LayerInstance& layer, const StageMap& map,
                         const PrecisionSchedule& schedule, int timestep,
                         const HardwareConfig& hw, bool refine_boost) {
    if (static_cast<int64_t>(map.codes.size()) != layer.tokens) {
        throw ShapeError("simulate_layer: layer '" + layer.name + "' has " +
                         std::to_string(layer.tokens) + " tokens but stage map holds " +
                         std::to_string(map.codes.size()));
    }
    std::vector<Precision> blocks = precision_map_for_tensor(map, schedule, timestep);
    std::vector<Precision> boosted;
    if (refine_boost && layer.kind == LayerKind::Attention) {
        boosted = refine_floor_blocks(map);
        for (size_t b = 0; b < boosted.size(); ++b) boosted[b] = widest(boosted[b], blocks[b]);
    }
    return cost_with_blocks(layer, blocks, boosted, hw);
}

LayerCost simulate_layer_uniform(const LayerInstance& layer, const HardwareConfig& hw) {
    size_t num_blocks = (static_cast<size_t>(layer.tokens) + kBlockSize - 1) / kBlockSize;
    std::vector<Precision> blocks(num_blocks, Precision::Mxint8);
    return cost_with_blocks(layer, blocks, {}, hw);
}

namespace {

void add_layer(LayerCost& agg, const LayerCost& c) {
    agg.slice_units += c.slice_units;
    agg.vpu_ops += c.vpu_ops;
    agg.compute_cycles += c.compute_cycles;
    agg.memory_cycles += c.memory_cycles;
    agg.cycles += c.cycles;
    agg.dram_bytes += c.dram_bytes;
    agg.onchip_bytes += c.onchip_bytes;
    agg.energy_pj += c.energy_pj;
    agg.memory_bound = agg.memory_cycles > agg.compute_cycles;
}

void add_to_totals(RunTotals& totals, const LayerCost& c) {
    totals.compute_cycles += c.compute_cycles;
    totals.memory_cycles += c.memory_cycles;
    totals.cycles += c.cycles;
    totals.dram_bytes += c.dram_bytes;
    totals.onchip_bytes += c.onchip_bytes;
    totals.energy_pj += c.energy_pj;
}

void finish_totals(RunTotals& totals, double freq_hz) {
    totals.latency_s = totals.cycles / freq_hz;
    totals.energy_j = static_cast<double>(totals.energy_pj) * 1e-12;
}

// Functional attention probabilities of the final self-attention layer.
// Q and K are projected from the synthetic layer input, re-quantized at the
// refinement floor per token stage, and fed through the stage-masked softmax;
// Stage 0 keys carry zero probability and are skipped outright.
AttentionScores refinement_attention_probs(const LayerInstance& layer, const StageMap& map,
                                           const SynthTensors& synth) {
    const int n = layer.tokens;
    const int c = layer.c_in;
    TokenTensor x = synth.layer_input(layer);
    std::vector<float> wq = synth.weight_matrix_mxint8(layer, "wq", c, c);
    std::vector<float> wk = synth.weight_matrix_mxint8(layer, "wk", c, c);

    auto project = [&](const std::vector<float>& w) {
        TokenTensor out(n, c);
        for (int t = 0; t < n; ++t) {
            for (int j = 0; j < c; ++j) {
                double acc = 0.0;
                for (int k = 0; k < c; ++k) acc += static_cast<double>(x.at(t, k)) * w[static_cast<size_t>(k) * c + j];
                out.at(t, j) = static_cast<float>(acc);
            }
        }
        return out;
    };
    TokenTensor q = project(wq);
    TokenTensor k = project(wk);

    // Re-quantize each token's row at its refinement precision.
    const size_t blocks_per_row = (static_cast<size_t>(c) + kBlockSize - 1) / kBlockSize;
    auto requantize_rows = [&](TokenTensor& t) {
        std::vector<double> row(static_cast<size_t>(c));
        for (int i = 0; i < n; ++i) {
            Precision p = kRefineFloor[map.codes[static_cast<size_t>(i)]];
            for (int j = 0; j < c; ++j) row[static_cast<size_t>(j)] = t.at(i, j);
            std::vector<Precision> pm(blocks_per_row, p);
            std::vector<MxBlock> qblocks = quantize_tensor(row, pm);
            for (size_t b = 0; b < qblocks.size(); ++b) {
                RealVector deq = dequantize_block(qblocks[b]);
                for (int e = 0; e < kBlockSize; ++e) {
                    size_t col = b * kBlockSize + static_cast<size_t>(e);
                    if (col < static_cast<size_t>(c)) t.at(i, static_cast<int>(col)) = static_cast<float>(deq[static_cast<size_t>(e)]);
                }
            }
        }
    };
    requantize_rows(q);
    requantize_rows(k);

    std::vector<int> included;
    for (int j = 0; j < n; ++j) {
        if (map.codes[static_cast<size_t>(j)] >= 1) included.push_back(j);
    }
    AttentionScores probs(n);
    if (included.empty()) return probs;

    const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(c));
    std::vector<double> logits(included.size());
    for (int i = 0; i < n; ++i) {
        double max_logit = -std::numeric_limits<double>::infinity();
        for (size_t idx = 0; idx < included.size(); ++idx) {
            int j = included[idx];
            double acc = 0.0;
            for (int ch = 0; ch < c; ++ch) acc += static_cast<double>(q.at(i, ch)) * k.at(j, ch);
            logits[idx] = acc * inv_sqrt_c;
            max_logit = std::max(max_logit, logits[idx]);
        }
        double denom = 0.0;
        for (double& l : logits) {
            l = std::exp(l - max_logit);
            denom += l;
        }
        for (size_t idx = 0; idx < included.size(); ++idx) {
            probs.at(i, included[idx]) = static_cast<float>(logits[idx] / denom);
        }
    }
    return probs;
}

} // namespace

SimReport simulate_run(const LayerGraph& graph, const BinaryMask& main,
                       const PrecisionSchedule& schedule, const HardwareConfig& hw,
                       double semantic_threshold) {
    schedule.validate();
    hw.validate();

    std::vector<LayerInstance> layers = expand_layers(graph);
    if (layers.empty()) throw ConfigError("graph expands to no layers");
    const LayerInstance* final_attn = nullptr;
    for (const LayerInstance& l : layers) {
        if (l.final_attention) final_attn = &l;
    }
    if (schedule.refine_interval > 0 && final_attn == nullptr) {
        throw ConfigError("semantic refinement is enabled but the graph has no attention layer");
    }

    // Level-wise binary masks and spatial stage maps.
    std::vector<StageMap> current = propagate_masks(graph, main);
    std::vector<BinaryMask> level_main(graph.levels.size());
    level_main[0] = main;
    for (size_t i = 1; i < graph.levels.size(); ++i) level_main[i] = downsample(level_main[i - 1]);

    SimReport report;
    report.total_steps = schedule.total_steps;

    report.baseline_layers.reserve(layers.size());
    for (const LayerInstance& l : layers) {
        report.baseline_layers.push_back(simulate_layer_uniform(l, hw));
        add_to_totals(report.baseline, report.baseline_layers.back());
    }
    // The reference pipeline repeats identically every timestep.
    RunTotals baseline_step = report.baseline;
    report.baseline = RunTotals{};
    for (int t = 0; t < schedule.total_steps; ++t) {
        report.baseline.compute_cycles += baseline_step.compute_cycles;
        report.baseline.memory_cycles += baseline_step.memory_cycles;
        report.baseline.cycles += baseline_step.cycles;
        report.baseline.dram_bytes += baseline_step.dram_bytes;
        report.baseline.onchip_bytes += baseline_step.onchip_bytes;
        report.baseline.energy_pj += baseline_step.energy_pj;
    }
    finish_totals(report.baseline, hw.freq_hz);

    SynthTensors synth(graph, graph.seed);
    report.layers.resize(layers.size());
    for (size_t i = 0; i < layers.size(); ++i) {
        report.layers[i].name = layers[i].name;
        report.layers[i].kind = layers[i].kind;
        report.layers[i].level = layers[i].level;
    }

    for (int t = 0; t < schedule.total_steps; ++t) {
        TimestepCost step;
        step.t = t;
        step.phase = phase_at(schedule, t);

        if (refinement_due(schedule, t) && final_attn != nullptr) {
            const size_t lvl = static_cast<size_t>(final_attn->level);
            if (!level_main[lvl].empty()) {
                AttentionScores probs = refinement_attention_probs(*final_attn, current[lvl], synth);
                BinaryMask promote = semantic_scores(probs, level_main[lvl], semantic_threshold);
                for (size_t i = 0; i < current.size(); ++i) {
                    BinaryMask resampled = resample_mask(promote, graph.levels[i].grid_h,
                                                         graph.levels[i].grid_w);
                    current[i] = update_semantic(current[i], resampled);
                }
                step.refined = true;
            }
        }

        for (size_t i = 0; i < layers.size(); ++i) {
            const LayerInstance& l = layers[i];
            bool boost = step.refined && l.final_attention;
            LayerCost c = simulate_layer(l, current[static_cast<size_t>(l.level)], schedule, t, hw, boost);
            add_layer(report.layers[i], c);
            step.compute_cycles += c.compute_cycles;
            step.memory_cycles += c.memory_cycles;
            step.cycles += c.cycles;
            step.dram_bytes += c.dram_bytes;
            step.onchip_bytes += c.onchip_bytes;
            step.energy_pj += c.energy_pj;
        }
        step.stage_tokens.reserve(current.size());
        for (const StageMap& m : current) step.stage_tokens.push_back(m.stage_histogram());

        report.policy.compute_cycles += step.compute_cycles;
        report.policy.memory_cycles += step.memory_cycles;
        report.policy.cycles += step.cycles;
        report.policy.dram_bytes += step.dram_bytes;
        report.policy.onchip_bytes += step.onchip_bytes;
        report.policy.energy_pj += step.energy_pj;
        report.timesteps.push_back(std::move(step));
    }
    finish_totals(report.policy, hw.freq_hz);

    report.speedup_vs_mxint8 = report.baseline.cycles / report.policy.cycles;
    report.speedup_vs_mxint8_compute = report.baseline.compute_cycles / report.policy.compute_cycles;
    report.energy_gain_vs_mxint8 =
        static_cast<double>(report.baseline.energy_pj) / static_cast<double>(report.policy.energy_pj);
    return report;
}

SimReport baseline_run(const LayerGraph& graph, const HardwareConfig& hw) {
    hw.validate();
    std::vector<LayerInstance> layers = expand_layers(graph);

    SimReport report;
    report.total_steps = graph.timesteps;
    report.baseline_layers.reserve(layers.size());
    RunTotals step_totals;
    for (const LayerInstance& l : layers) {
        report.baseline_layers.push_back(simulate_layer_uniform(l, hw));
        add_to_totals(step_totals, report.baseline_layers.back());
    }
    report.layers = report.baseline_layers;
    for (int t = 0; t < graph.timesteps; ++t) {
        TimestepCost step;
        step.t = t;
        step.compute_cycles = step_totals.compute_cycles;
        step.memory_cycles = step_totals.memory_cycles;
        step.cycles = step_totals.cycles;
        step.dram_bytes = step_totals.dram_bytes;
        step.onchip_bytes = step_totals.onchip_bytes;
        step.energy_pj = step_totals.energy_pj;
        report.timesteps.push_back(step);

        report.policy.compute_cycles += step.compute_cycles;
        report.policy.memory_cycles += step.memory_cycles;
        report.policy.cycles += step.cycles;
        report.policy.dram_bytes += step.dram_bytes;
        report.policy.onchip_bytes += step.onchip_bytes;
        report.policy.energy_pj += step.energy_pj;
    }
    finish_totals(report.policy, hw.freq_hz);
    report.baseline = report.policy;
    return report;
}

namespace {

nlohmann::ordered_json totals_json(const RunTotals& t) {
    return nlohmann::ordered_json{
        {"compute_cycles", t.compute_cycles}, {"memory_cycles", t.memory_cycles},
        {"cycles", t.cycles},                 {"latency_s", t.latency_s},
        {"dram_bytes", t.dram_bytes},         {"onchip_bytes", t.onchip_bytes},
        {"energy_pj", t.energy_pj},           {"energy_j", t.energy_j},
    };
}

nlohmann::ordered_json layer_json(const LayerCost& c) {
    return nlohmann::ordered_json{
        {"name", c.name},
        {"kind", layer_kind_name(c.kind)},
        {"level", c.level},
        {"slice_units", c.slice_units},
        {"vpu_ops", c.vpu_ops},
        {"compute_cycles", c.compute_cycles},
        {"memory_cycles", c.memory_cycles},
        {"cycles", c.cycles},
        {"dram_bytes", c.dram_bytes},
        {"onchip_bytes", c.onchip_bytes},
        {"energy_pj", c.energy_pj},
        {"bound", c.memory_bound ? "memory" : "compute"},
    };
}

} // namespace

std::string emit_report_json(const SimReport& report) {
    nlohmann::ordered_json doc;
    doc["total_steps"] = report.total_steps;
    doc["summary"] = {
        {"speedup_vs_mxint8", report.speedup_vs_mxint8},
        {"speedup_vs_mxint8_compute", report.speedup_vs_mxint8_compute},
        {"energy_gain_vs_mxint8", report.energy_gain_vs_mxint8},
        {"policy", totals_json(report.policy)},
        {"baseline", totals_json(report.baseline)},
    };
    doc["timesteps"] = nlohmann::ordered_json::array();
    for (const TimestepCost& s : report.timesteps) {
        nlohmann::ordered_json stages = nlohmann::ordered_json::array();
        for (const auto& hist : s.stage_tokens) {
            stages.push_back({hist[0], hist[1], hist[2], hist[3]});
        }
        doc["timesteps"].push_back(nlohmann::ordered_json{
            {"t", s.t},
            {"phase", s.phase},
            {"refined", s.refined},
            {"compute_cycles", s.compute_cycles},
            {"memory_cycles", s.memory_cycles},
            {"cycles", s.cycles},
            {"dram_bytes", s.dram_bytes},
            {"onchip_bytes", s.onchip_bytes},
            {"energy_pj", s.energy_pj},
            {"stage_tokens", std::move(stages)},
        });
    }
    doc["layers"] = nlohmann::ordered_json::array();
    for (const LayerCost& c : report.layers) doc["layers"].push_back(layer_json(c));
    doc["baseline_layers"] = nlohmann::ordered_json::array();
    for (const LayerCost& c : report.baseline_layers) doc["baseline_layers"].push_back(layer_json(c));
    return doc.dump(2) + "\n";
}

std::string emit_report_csv(const SimReport& report) {
    auto num = [](double v) { return nlohmann::json(v).dump(); };
    std::ostringstream out;
    out << "t,phase,refined,cycles,compute_cycles,memory_cycles,dram_bytes,onchip_bytes,"
           "energy_pj,stage0_tokens,stage1_tokens,stage2_tokens,stage3_tokens\n";
    for (const TimestepCost& s : report.timesteps) {
        std::array<int64_t, 4> sum{};
        for (const auto& hist : s.stage_tokens) {
            for (int i = 0; i < 4; ++i) sum[static_cast<size_t>(i)] += hist[static_cast<size_t>(i)];
        }
        out << s.t << ',' << s.phase << ',' << (s.refined ? 1 : 0) << ',' << num(s.cycles) << ','
            << num(s.compute_cycles) << ',' << num(s.memory_cycles) << ',' << s.dram_bytes << ','
            << s.onchip_bytes << ',' << s.energy_pj << ',' << sum[0] << ',' << sum[1] << ','
            << sum[2] << ',' << sum[3] << '\n';
    }
    return out.str();
}

} // namespace masq
