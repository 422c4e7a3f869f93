#include "masq/workload.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "masq/mx_codec.hpp"
#include "masq/rng.hpp"

namespace masq {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv3x3: return "conv3x3";
        case LayerKind::Conv1x1: return "conv1x1";
        case LayerKind::Linear: return "linear";
        case LayerKind::Attention: return "attention";
        case LayerKind::GroupNorm: return "group_norm";
        case LayerKind::Softmax: return "softmax";
        case LayerKind::Elementwise: return "elementwise";
    }
    return "?";
}

namespace {

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

[[noreturn]] void schema_fail(const std::string& path, const std::string& why) {
    throw ConfigError("graph config: " + path + ": " + why);
}

int require_int(const nlohmann::json& node, const std::string& path, int min_value) {
    if (!node.is_number_integer()) schema_fail(path, "expected an integer");
    int v = node.get<int>();
    if (v < min_value) schema_fail(path, "must be >= " + std::to_string(min_value));
    return v;
}

} // namespace

LayerGraph load_graph(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("graph config: parse error: ") + e.what());
    }
    if (!doc.is_object()) schema_fail("$", "expected an object");
    if (!doc.contains("levels") || !doc["levels"].is_array() || doc["levels"].empty()) {
        schema_fail("levels", "expected a non-empty array");
    }

    LayerGraph graph;
    const auto& levels = doc["levels"];
    for (size_t i = 0; i < levels.size(); ++i) {
        const std::string p = "levels[" + std::to_string(i) + "]";
        const auto& node = levels[i];
        if (!node.is_object()) schema_fail(p, "expected an object");
        if (!node.contains("grid") || !node["grid"].is_array() || node["grid"].size() != 2) {
            schema_fail(p + ".grid", "expected [h, w]");
        }
        LevelSpec lvl;
        lvl.grid_h = require_int(node["grid"][0], p + ".grid[0]", 1);
        lvl.grid_w = require_int(node["grid"][1], p + ".grid[1]", 1);
        lvl.conv3x3 = node.contains("conv3x3") ? require_int(node["conv3x3"], p + ".conv3x3", 0) : 0;
        lvl.conv1x1 = node.contains("conv1x1") ? require_int(node["conv1x1"], p + ".conv1x1", 0) : 0;
        if (!node.contains("channels")) schema_fail(p + ".channels", "missing");
        lvl.channels = require_int(node["channels"], p + ".channels", 1);
        if (node.contains("attention")) {
            if (!node["attention"].is_boolean()) schema_fail(p + ".attention", "expected a bool");
            lvl.attention = node["attention"].get<bool>();
        }
        graph.levels.push_back(lvl);
    }
    for (size_t i = 1; i < graph.levels.size(); ++i) {
        if (graph.levels[i].grid_h * 2 != graph.levels[i - 1].grid_h ||
            graph.levels[i].grid_w * 2 != graph.levels[i - 1].grid_w) {
            schema_fail("levels[" + std::to_string(i) + "].grid",
                        "must halve the previous level's grid");
        }
    }
    graph.timesteps = doc.contains("timesteps") ? require_int(doc["timesteps"], "timesteps", 1) : 50;
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
            schema_fail("seed", "expected an integer");
        }
        graph.seed = doc["seed"].get<uint64_t>();
    }
    return graph;
}

LayerGraph load_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open graph config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_graph(ss.str());
}

DilationPlan derive_dilation_plan(const LayerGraph& graph) {
    DilationPlan plan(graph.levels.size());
    for (size_t i = 0; i < graph.levels.size(); ++i) {
        plan[i].conv_count = graph.levels[i].conv3x3;
        plan[i].stage1_extra =
            (i + 1 < graph.levels.size()) ? 2 * graph.levels[i + 1].conv3x3 : 0;
    }
    return plan;
}

std::vector<StageMap> propagate_masks(const LayerGraph& graph, const BinaryMask& main) {
    if (main.height != graph.levels[0].grid_h || main.width != graph.levels[0].grid_w) {
        throw ShapeError("main mask is " + std::to_string(main.height) + "x" +
                         std::to_string(main.width) + " but the top level grid is " +
                         std::to_string(graph.levels[0].grid_h) + "x" +
                         std::to_string(graph.levels[0].grid_w));
    }
    DilationPlan plan = derive_dilation_plan(graph);
    std::vector<StageMap> maps;
    maps.reserve(graph.levels.size());
    BinaryMask level_mask = main;
    for (size_t i = 0; i < graph.levels.size(); ++i) {
        if (i > 0) level_mask = downsample(level_mask);
        maps.push_back(build_stage_map(level_mask, plan[i]));
    }
    return maps;
}

namespace {

LayerInstance matrix_layer(std::string name, LayerKind kind, int level, int tokens,
                           int c_in, int c_out) {
    LayerInstance l;
    l.name = std::move(name);
    l.kind = kind;
    l.level = level;
    l.tokens = tokens;
    l.c_in = c_in;
    l.c_out = c_out;
    switch (kind) {
        case LayerKind::Conv3x3:
            l.mac_count = static_cast<int64_t>(tokens) * c_in * c_out * 9;
            l.blockdots_per_token = static_cast<int64_t>(c_out) * ceil_div(9LL * c_in, kBlockSize);
            break;
        case LayerKind::Conv1x1:
        case LayerKind::Linear:
            l.mac_count = static_cast<int64_t>(tokens) * c_in * c_out;
            l.blockdots_per_token = static_cast<int64_t>(c_out) * ceil_div(c_in, kBlockSize);
            break;
        case LayerKind::Attention: {
            // Q/K/V/O projections plus the two NxN score products.
            int64_t n = tokens, c = c_in;
            l.mac_count = 4 * n * c * c + 2 * n * n * c;
            l.blockdots_per_token =
                4 * c * ceil_div(c, kBlockSize) + n * ceil_div(c, kBlockSize) + c * ceil_div(n, kBlockSize);
            break;
        }
        default: break;
    }
    return l;
}

LayerInstance vector_layer(std::string name, LayerKind kind, int level, int tokens, int channels) {
    LayerInstance l;
    l.name = std::move(name);
    l.kind = kind;
    l.level = level;
    l.tokens = tokens;
    l.c_in = channels;
    l.c_out = channels;
    switch (kind) {
        case LayerKind::GroupNorm:
            l.vector_op_count = 2LL * tokens * channels; // statistics + apply
            break;
        case LayerKind::Softmax:
            l.vector_op_count = 2LL * tokens * tokens; // exponentials + normalize
            break;
        case LayerKind::Elementwise:
            l.vector_op_count = static_cast<int64_t>(tokens) * channels;
            break;
        default: break;
    }
    return l;
}

void append_level_block(std::vector<LayerInstance>& out, const LayerGraph& graph, int level,
                        const std::string& prefix) {
    const LevelSpec& lvl = graph.levels[static_cast<size_t>(level)];
    const int n = lvl.tokens();
    const int c = lvl.channels;
    for (int i = 0; i < lvl.conv3x3; ++i) {
        const std::string base = prefix + ".res" + std::to_string(i);
        out.push_back(vector_layer(base + ".norm", LayerKind::GroupNorm, level, n, c));
        out.push_back(matrix_layer(base + ".conv", LayerKind::Conv3x3, level, n, c, c));
        out.push_back(vector_layer(base + ".add", LayerKind::Elementwise, level, n, c));
    }
    for (int i = 0; i < lvl.conv1x1; ++i) {
        out.push_back(matrix_layer(prefix + ".proj" + std::to_string(i), LayerKind::Conv1x1,
                                   level, n, c, c));
    }
    if (lvl.attention) {
        out.push_back(vector_layer(prefix + ".attn.norm", LayerKind::GroupNorm, level, n, c));
        out.push_back(matrix_layer(prefix + ".attn", LayerKind::Attention, level, n, c, c));
        out.push_back(vector_layer(prefix + ".attn.softmax", LayerKind::Softmax, level, n, c));
    }
}

} // namespace

std::vector<LayerInstance> expand_layers(const LayerGraph& graph) {
    std::vector<LayerInstance> layers;
    const int num_levels = static_cast<int>(graph.levels.size());

    for (int lvl = 0; lvl < num_levels; ++lvl) {
        append_level_block(layers, graph, lvl, "enc" + std::to_string(lvl));
        if (lvl + 1 < num_levels) {
            // Stride-2 transition, priced at the coarser output level.
            const LevelSpec& next = graph.levels[static_cast<size_t>(lvl + 1)];
            layers.push_back(matrix_layer("down" + std::to_string(lvl) + "to" + std::to_string(lvl + 1),
                                          LayerKind::Conv3x3, lvl + 1, next.tokens(),
                                          graph.levels[static_cast<size_t>(lvl)].channels,
                                          next.channels));
        }
    }
    for (int lvl = num_levels - 2; lvl >= 0; --lvl) {
        const LevelSpec& cur = graph.levels[static_cast<size_t>(lvl)];
        layers.push_back(matrix_layer("up" + std::to_string(lvl + 1) + "to" + std::to_string(lvl),
                                      LayerKind::Conv3x3, lvl, cur.tokens(),
                                      graph.levels[static_cast<size_t>(lvl + 1)].channels,
                                      cur.channels));
        append_level_block(layers, graph, lvl, "dec" + std::to_string(lvl));
    }

    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
        if (it->kind == LayerKind::Attention) {
            it->final_attention = true;
            break;
        }
    }
    return layers;
}

TokenTensor SynthTensors::layer_input(const LayerInstance& layer) const {
    SplitMix64 rng(stream_key(seed_, layer.name + "/input"));
    TokenTensor t(layer.tokens, layer.c_in);
    for (float& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

std::vector<float> SynthTensors::weight_matrix(const LayerInstance& layer, const std::string& role,
                                               int rows, int cols) const {
    SplitMix64 rng(stream_key(seed_, layer.name + "/" + role));
    std::vector<float> w(static_cast<size_t>(rows) * cols);
    for (float& v : w) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return w;
}

std::vector<float> SynthTensors::weight_matrix_mxint8(const LayerInstance& layer,
                                                      const std::string& role, int rows,
                                                      int cols) const {
    std::vector<float> w = weight_matrix(layer, role, rows, cols);
    const size_t blocks_per_col = (static_cast<size_t>(rows) + kBlockSize - 1) / kBlockSize;
    std::vector<Precision> pm(blocks_per_col, Precision::Mxint8);
    std::vector<double> column(static_cast<size_t>(rows));
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) column[static_cast<size_t>(i)] = w[static_cast<size_t>(i) * cols + j];
        std::vector<MxBlock> blocks = quantize_tensor(column, pm);
        for (size_t b = 0; b < blocks.size(); ++b) {
            RealVector deq = dequantize_block(blocks[b]);
            for (int e = 0; e < kBlockSize; ++e) {
                size_t i = b * kBlockSize + static_cast<size_t>(e);
                if (i < static_cast<size_t>(rows)) {
                    w[i * cols + static_cast<size_t>(j)] = static_cast<float>(deq[static_cast<size_t>(e)]);
                }
            }
        }
    }
    return w;
}

} // namespace masq
