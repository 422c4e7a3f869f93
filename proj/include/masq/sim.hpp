#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "masq/bitserial.hpp"
#include "masq/mask.hpp"
#include "masq/schedule.hpp"
#include "masq/workload.hpp"

namespace masq {

// ---------------------------------------------------------------------------
// Cycle and energy accounting for one masked-diffusion run over a layer
// graph, against a uniform-MXINT8 run of the same graph. Matrix layers cost
// (32-element block dot products) x (slices of the block's precision) spread
// over the MPU array; per-layer latency is the roofline max of compute and
// DRAM transfer time.
// ---------------------------------------------------------------------------

struct EnergyTable {
    // pJ per active multiplier lane per cycle, by activation precision.
    std::array<double, 3> pj_per_mac_cycle = {0.0874, 0.0874, 0.0874}; // [mxint2, mxint4, mxint8]
    double pj_per_vpu_op = 0.3265;
    double pj_per_onchip_byte = 1.0;
    double pj_per_dram_byte = 62.5;
    // Controller, mask manager, quantizer and idle memories, charged per
    // occupied cycle.
    double static_pj_per_cycle = 1562.5;

    double pj_mac(Precision p) const { return pj_per_mac_cycle[static_cast<size_t>(p)]; }
};

struct HardwareConfig {
    EngineGeometry geometry;
    double freq_hz = 800e6;
    int64_t onchip_bytes = 2ll * 1024 * 1024;
    double dram_bw_bytes_per_s = 102.4e9; // edge-class; server-class is 2e12
    int64_t vpu_ops_per_cycle = 8192;
    EnergyTable energy;

    void validate() const;
};

struct LayerCost {
    std::string name;
    LayerKind kind = LayerKind::Conv3x3;
    int level = 0;
    int64_t slice_units = 0; // blockdot-slices issued on the MPU array
    int64_t vpu_ops = 0;
    double compute_cycles = 0.0;
    double memory_cycles = 0.0;
    double cycles = 0.0; // max(compute, memory)
    int64_t dram_bytes = 0;
    int64_t onchip_bytes = 0;
    int64_t energy_pj = 0;
    bool memory_bound = false;
};

struct TimestepCost {
    int t = 0;
    int phase = 0;
    bool refined = false;
    double compute_cycles = 0.0;
    double memory_cycles = 0.0;
    double cycles = 0.0;
    int64_t dram_bytes = 0;
    int64_t onchip_bytes = 0;
    int64_t energy_pj = 0;
    // Per level, token counts at stages 0..3 after this timestep's updates.
    std::vector<std::array<int64_t, 4>> stage_tokens;
};

struct RunTotals {
    double compute_cycles = 0.0;
    double memory_cycles = 0.0;
    double cycles = 0.0;
    double latency_s = 0.0;
    int64_t dram_bytes = 0;
    int64_t onchip_bytes = 0;
    int64_t energy_pj = 0;
    double energy_j = 0.0;
};

struct SimReport {
    int total_steps = 0;
    std::vector<TimestepCost> timesteps;     // policy run, per timestep
    std::vector<LayerCost> layers;           // policy run, aggregated over timesteps
    std::vector<LayerCost> baseline_layers;  // uniform MXINT8, one timestep
    RunTotals policy;
    RunTotals baseline;
    double speedup_vs_mxint8 = 1.0;          // latency ratio
    double speedup_vs_mxint8_compute = 1.0;  // compute-cycle ratio
    double energy_gain_vs_mxint8 = 1.0;
};

// Cost of one layer at one timestep under the stage map. When refine_boost is
// set on the final attention layer, its QK product runs at the refinement
// floor (Stage 2-3 at MXINT8, Stage 0-1 at MXINT4) widened against the
// schedule, never below it.
LayerCost simulate_layer(const LayerInstance& layer, const StageMap& map,
                         const PrecisionSchedule& schedule, int timestep,
                         const HardwareConfig& hw, bool refine_boost = false);

// Uniform-MXINT8 cost of one layer, the per-layer baseline.
LayerCost simulate_layer_uniform(const LayerInstance& layer, const HardwareConfig& hw);

// Full policy run: per-timestep phase resolution, semantic refinement of the
// stage maps, per-layer accounting, and the uniform-MXINT8 reference.
SimReport simulate_run(const LayerGraph& graph, const BinaryMask& main,
                       const PrecisionSchedule& schedule, const HardwareConfig& hw,
                       double semantic_threshold = 0.02);

// The reference pipeline alone: every block MXINT8, no mask machinery.
SimReport baseline_run(const LayerGraph& graph, const HardwareConfig& hw);

// Stable-order report emission; see docs/report-schema.md.
std::string emit_report_json(const SimReport& report);
std::string emit_report_csv(const SimReport& report);

} // namespace masq
