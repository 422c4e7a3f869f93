#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "masq/mask.hpp"
#include "masq/ops.hpp"

namespace masq {

// ---------------------------------------------------------------------------
// U-Net-like workload description: per-resolution ResNet/attention blocks with
// down/upsample edges, expanded into a flat ordered layer list for the
// simulator, plus deterministic synthetic tensors standing in for real model
// weights and activations.
// ---------------------------------------------------------------------------

struct LevelSpec {
    int grid_h = 0;
    int grid_w = 0;
    int conv3x3 = 0;
    int conv1x1 = 0;
    int channels = 0;
    bool attention = false;

    int tokens() const { return grid_h * grid_w; }
};

struct LayerGraph {
    std::vector<LevelSpec> levels; // finest first; each level halves the grid
    int timesteps = 50;
    uint64_t seed = 1;
};

enum class LayerKind {
    Conv3x3,
    Conv1x1,
    Linear,
    Attention,
    GroupNorm,
    Softmax,
    Elementwise,
};

const char* layer_kind_name(LayerKind k);

struct LayerInstance {
    std::string name;
    LayerKind kind = LayerKind::Conv3x3;
    int level = 0;    // level whose stage map prices this layer
    int tokens = 0;   // token count at that level
    int c_in = 0;
    int c_out = 0;
    int64_t mac_count = 0;       // matrix kinds
    int64_t vector_op_count = 0; // non-matrix kinds (VPU)
    // Matrix kinds: 32-element dot products one token contributes.
    int64_t blockdots_per_token = 0;
    bool final_attention = false; // semantic refinement reads this layer
};

// JSON schema: { "levels": [ { "grid": [h, w], "conv3x3": n, "conv1x1": n,
// "channels": c, "attention": bool } ], "timesteps": t, "seed": s }.
LayerGraph load_graph(const std::string& json_text);
LayerGraph load_graph_file(const std::string& path);

// Stage 2 distance = 3x3 conv depth at the level; Stage 1 adds the doubled
// depth of the next-lower level (0 at the lowest).
DilationPlan derive_dilation_plan(const LayerGraph& graph);

// Majority-downsample the main mask level by level and build each level's
// stage map from its plan entry. The main mask must match the finest grid.
std::vector<StageMap> propagate_masks(const LayerGraph& graph, const BinaryMask& main);

// Encoder levels fine-to-coarse, then the mirrored decoder, with stride-2
// conv edges between levels. Matches the order the simulator executes.
std::vector<LayerInstance> expand_layers(const LayerGraph& graph);

// Deterministic synthetic tensors: SplitMix64 streams keyed by (seed, layer
// name, role), mapped to uniform values in [-1, 1). Weights are held in
// MXINT8 block form, matching the datapath contract.
class SynthTensors {
public:
    SynthTensors(const LayerGraph& graph, uint64_t seed) : seed_(seed ^ graph.seed) {}

    TokenTensor layer_input(const LayerInstance& layer) const;
    // Dense rows x cols weight matrix for the named role ("wq", "wk", ...).
    std::vector<float> weight_matrix(const LayerInstance& layer, const std::string& role,
                                     int rows, int cols) const;
    // The same matrix after MXINT8 block quantization along each column's
    // reduction dimension; what the engine actually multiplies against.
    std::vector<float> weight_matrix_mxint8(const LayerInstance& layer, const std::string& role,
                                            int rows, int cols) const;

private:
    uint64_t seed_;
};

} // namespace masq
