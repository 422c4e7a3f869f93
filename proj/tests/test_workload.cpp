#include <doctest.h>

#include <cmath>

#include "masq/rng.hpp"
#include "masq/workload.hpp"

using namespace masq;

namespace {

const char* kTinyGraph = R"({
    "levels": [
        {"grid": [8, 8], "conv3x3": 2, "conv1x1": 1, "channels": 32, "attention": false},
        {"grid": [4, 4], "conv3x3": 3, "conv1x1": 0, "channels": 64, "attention": true}
    ],
    "timesteps": 4,
    "seed": 99
})";

} // namespace

TEST_CASE("load_graph parses the documented schema") {
    LayerGraph g = load_graph(kTinyGraph);
    REQUIRE(g.levels.size() == 2);
    CHECK(g.levels[0].grid_h == 8);
    CHECK(g.levels[0].conv3x3 == 2);
    CHECK(g.levels[1].attention);
    CHECK(g.timesteps == 4);
    CHECK(g.seed == 99);
}

TEST_CASE("load_graph reports the offending field path") {
    CHECK_THROWS_WITH_AS(load_graph(R"({"levels": [{"grid": [8, 8]}]})"),
                         doctest::Contains("levels[0].channels"), ConfigError);
    CHECK_THROWS_WITH_AS(load_graph(R"({"levels": [{"grid": [8], "channels": 4}]})"),
                         doctest::Contains("levels[0].grid"), ConfigError);
    CHECK_THROWS_AS(load_graph("{"), ConfigError);
    CHECK_THROWS_AS(load_graph(R"({"levels": []})"), ConfigError);
}

TEST_CASE("load_graph enforces grid halving between levels") {
    CHECK_THROWS_WITH_AS(load_graph(R"({
        "levels": [
            {"grid": [8, 8], "channels": 8},
            {"grid": [4, 5], "channels": 8}
        ]})"),
                         doctest::Contains("levels[1].grid"), ConfigError);
}

TEST_CASE("derive_dilation_plan doubles the lower level's conv depth") {
    LayerGraph single = load_graph(R"({"levels": [{"grid": [8, 8], "conv3x3": 2, "channels": 8}]})");
    DilationPlan p1 = derive_dilation_plan(single);
    REQUIRE(p1.size() == 1);
    CHECK(p1[0].conv_count == 2);
    CHECK(p1[0].stage1_extra == 0);

    LayerGraph two = load_graph(R"({
        "levels": [
            {"grid": [8, 8], "conv3x3": 2, "channels": 8},
            {"grid": [4, 4], "conv3x3": 3, "channels": 8}
        ]})");
    DilationPlan p2 = derive_dilation_plan(two);
    CHECK(p2[0].conv_count == 2);
    CHECK(p2[0].stage1_extra == 6); // doubled for the halved resolution
    CHECK(p2[1].conv_count == 3);
    CHECK(p2[1].stage1_extra == 0);
}

TEST_CASE("zero convs at a level leave the Stage 2 ring empty") {
    BinaryMask m(8, 8);
    m.set(4, 4, 1);
    StageMap map = build_stage_map(m, {0, 2});
    auto hist = map.stage_histogram();
    CHECK(hist[3] == 1);
    CHECK(hist[2] == 0);
    CHECK(hist[1] == 24); // 5x5 ring minus the center
}

TEST_CASE("propagate_masks downsamples level by level") {
    LayerGraph g = load_graph(kTinyGraph);
    BinaryMask main(8, 8);
    for (int r = 2; r <= 5; ++r)
        for (int c = 2; c <= 5; ++c) main.set(r, c, 1);

    std::vector<StageMap> maps = propagate_masks(g, main);
    REQUIRE(maps.size() == 2);
    CHECK(maps[0].height == 8);
    CHECK(maps[1].height == 4);

    // Stage 3 at each level equals the (downsampled) main mask.
    BinaryMask down = downsample(main);
    for (size_t i = 0; i < maps[1].codes.size(); ++i) {
        CHECK((maps[1].codes[i] == 3) == (down.bits[i] == 1));
    }

    BinaryMask wrong(4, 4);
    CHECK_THROWS_AS(propagate_masks(g, wrong), ShapeError);
}

TEST_CASE("expand_layers mirrors the encoder and marks the final attention") {
    LayerGraph g = load_graph(kTinyGraph);
    std::vector<LayerInstance> layers = expand_layers(g);

    int attn = 0, down = 0, up = 0;
    const LayerInstance* final_attn = nullptr;
    for (const LayerInstance& l : layers) {
        if (l.kind == LayerKind::Attention) ++attn;
        if (l.name.starts_with("down")) ++down;
        if (l.name.starts_with("up")) ++up;
        if (l.final_attention) final_attn = &l;
    }
    CHECK(attn == 1); // bottleneck level appears once
    CHECK(down == 1);
    CHECK(up == 1);
    REQUIRE(final_attn != nullptr);
    CHECK(final_attn->level == 1);

    // mac_count consistency spot checks.
    for (const LayerInstance& l : layers) {
        if (l.kind == LayerKind::Conv3x3) {
            CHECK(l.mac_count == static_cast<int64_t>(l.tokens) * l.c_in * l.c_out * 9);
        }
        if (l.kind == LayerKind::Attention) {
            CHECK(l.mac_count == 4LL * l.tokens * l.c_in * l.c_in +
                                     2LL * l.tokens * l.tokens * l.c_in);
        }
    }
}

TEST_CASE("bundled toy graph: matrix MACs dominate the operation count") {
    LayerGraph g = load_graph_file(std::string(MASQ_SOURCE_DIR) + "/configs/toy-unet.json");
    std::vector<LayerInstance> layers = expand_layers(g);

    int64_t total_macs = 0, total_vector = 0, sum_layers = 0;
    for (const LayerInstance& l : layers) {
        total_macs += l.mac_count;
        total_vector += l.vector_op_count;
        sum_layers += l.mac_count + l.vector_op_count;
    }
    CHECK(total_macs + total_vector == sum_layers); // additivity by construction
    CHECK(static_cast<double>(total_macs) / static_cast<double>(total_macs + total_vector) >= 0.9);
}

TEST_CASE("synthetic tensors are deterministic and seed sensitive") {
    LayerGraph g = load_graph(kTinyGraph);
    std::vector<LayerInstance> layers = expand_layers(g);
    SynthTensors a(g, 7), b(g, 7), c(g, 8);

    TokenTensor ta = a.layer_input(layers[1]);
    TokenTensor tb = b.layer_input(layers[1]);
    TokenTensor tc = c.layer_input(layers[1]);
    CHECK(ta.data == tb.data);
    CHECK(ta.data != tc.data);

    auto wa = a.weight_matrix(layers[1], "wq", 8, 8);
    auto wb = b.weight_matrix(layers[1], "wq", 8, 8);
    CHECK(wa == wb);
    CHECK(wa != a.weight_matrix(layers[1], "wk", 8, 8));
}

TEST_CASE("MXINT8 weights stay within half a block scale of the dense matrix") {
    LayerGraph g = load_graph(kTinyGraph);
    std::vector<LayerInstance> layers = expand_layers(g);
    SynthTensors synth(g, 3);

    int rows = 40, cols = 6; // padded tail block in each column
    auto dense = synth.weight_matrix(layers[0], "w", rows, cols);
    auto quant = synth.weight_matrix_mxint8(layers[0], "w", rows, cols);
    REQUIRE(dense.size() == quant.size());
    for (int j = 0; j < cols; ++j) {
        double col_max = 0.0;
        for (int i = 0; i < rows; ++i) {
            col_max = std::max(col_max, std::fabs(static_cast<double>(dense[static_cast<size_t>(i) * cols + j])));
        }
        for (int i = 0; i < rows; ++i) {
            double err = std::fabs(static_cast<double>(quant[static_cast<size_t>(i) * cols + j]) -
                                   dense[static_cast<size_t>(i) * cols + j]);
            CHECK(err <= col_max / 64.0); // half a step at 2^(floor(log2 max)-6)
        }
    }
}

TEST_CASE("synthetic tensor stream pinned across builds") {
    // Frozen from the declared generator (SplitMix64 over an FNV-keyed
    // stream); any change to the algorithm shows up here.
    SplitMix64 rng(stream_key(0, "pin"));
    CHECK(rng.next() == 17441129640089453883ULL);
    CHECK(rng.next() == 227098200063052683ULL);
}

TEST_CASE("mask ratio is roughly preserved under majority downsampling") {
    SplitMix64 rng(stream_key(61, "blob"));
    for (int iter = 0; iter < 100; ++iter) {
        int h = 16 + 2 * static_cast<int>(rng.range(0, 16));
        int w = 16 + 2 * static_cast<int>(rng.range(0, 16));
        // Random blob: a few dilated rectangles.
        BinaryMask m(h, w);
        int rects = static_cast<int>(rng.range(1, 3));
        for (int k = 0; k < rects; ++k) {
            int r0 = static_cast<int>(rng.range(0, h - 2));
            int c0 = static_cast<int>(rng.range(0, w - 2));
            int r1 = std::min<int>(h - 1, r0 + static_cast<int>(rng.range(2, h / 2)));
            int c1 = std::min<int>(w - 1, c0 + static_cast<int>(rng.range(2, w / 2)));
            for (int r = r0; r <= r1; ++r)
                for (int c = c0; c <= c1; ++c) m.set(r, c, 1);
        }
        double before = m.ratio();
        double after = downsample(m).ratio();
        CHECK(std::fabs(after - before) <= 0.25);
    }
}
