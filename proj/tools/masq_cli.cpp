// masq — mask-pipeline inspection, codec checks, and full simulation runs.
//
//   masq maskgen   --mask m.pbm --graph g.json --out dir
//   masq quantcheck --seed 7 --precision mxint4 [--blocks 10000]
//   masq simulate  --graph g.json --mask m.pbm [--hw hw.json] [--schedule s.json]
//                  [--seed N] --out dir [--format json|csv]
//   masq report    --in report.json --out report.csv [--format csv|json]
//
// Exit codes: 0 success, 1 config error, 2 runtime invariant violation.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "masq/bitserial.hpp"
#include "masq/config.hpp"
#include "masq/mask_io.hpp"
#include "masq/rng.hpp"
#include "masq/sim.hpp"

namespace fs = std::filesystem;

namespace {

struct MaskgenArgs {
    std::string mask_path, graph_path, out_dir;
};

struct QuantcheckArgs {
    uint64_t seed = 1;
    std::string precision = "mxint8";
    int blocks = 10000;
};

struct SimulateArgs {
    std::string graph_path, mask_path, hw_path, schedule_path, out_dir;
    std::string format = "json";
    int64_t seed = -1;
    double threshold = 0.02;
};

struct ReportArgs {
    std::string in_path, out_path;
    std::string format = "csv";
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw masq::ConfigError("cannot write '" + path.string() + "'");
    out << content;
}

int run_maskgen(const MaskgenArgs& args) {
    masq::LayerGraph graph = masq::load_graph_file(args.graph_path);
    masq::BinaryMask main = masq::load_mask(args.mask_path);
    std::vector<masq::StageMap> maps = masq::propagate_masks(graph, main);

    fs::create_directories(args.out_dir);
    for (size_t lvl = 0; lvl < maps.size(); ++lvl) {
        const masq::StageMap& map = maps[lvl];
        std::ostringstream json_out;
        masq::save_stage_map_json(map, json_out);
        write_file(fs::path(args.out_dir) / ("stage_map_L" + std::to_string(lvl) + ".json"),
                   json_out.str());
        std::vector<uint8_t> packed = masq::pack_stage_map(map);
        write_file(fs::path(args.out_dir) / ("stage_map_L" + std::to_string(lvl) + ".smap"),
                   std::string(packed.begin(), packed.end()));

        auto hist = map.stage_histogram();
        double total = static_cast<double>(map.codes.size());
        std::printf("level %zu (%dx%d): stage3 %.4f stage2 %.4f stage1 %.4f stage0 %.4f\n", lvl,
                    map.height, map.width, hist[3] / total, hist[2] / total, hist[1] / total,
                    hist[0] / total);
    }
    return 0;
}

int run_quantcheck(const QuantcheckArgs& args) {
    masq::Precision prec = masq::precision_from_name(args.precision);
    masq::SplitMix64 rng(masq::stream_key(args.seed, "quantcheck"));

    double max_err = 0.0, sum_err = 0.0;
    int64_t samples = 0;
    int64_t mismatches = 0;

    for (int b = 0; b < args.blocks; ++b) {
        // Round-trip error, measured in units of the block scale.
        std::array<double, masq::kBlockSize> values{};
        double mag = std::ldexp(1.0, static_cast<int>(rng.range(-8, 8)));
        for (double& v : values) v = rng.uniform(-mag, mag);
        masq::MxBlock block = masq::quantize_block(values, prec);
        masq::RealVector back = masq::dequantize_block(block);
        double scale = block.scale();
        for (int i = 0; i < masq::kBlockSize; ++i) {
            double err = std::fabs(back[static_cast<size_t>(i)] - values[static_cast<size_t>(i)]) / scale;
            max_err = std::max(max_err, err);
            sum_err += err;
            ++samples;
        }

        // Bit-serial datapath against the plain integer dot product.
        masq::MxBlock act = block;
        masq::MxBlock wgt;
        wgt.precision = masq::Precision::Mxint8;
        wgt.shared_exp = static_cast<uint8_t>(rng.range(100, 150));
        for (auto& w : wgt.elements) w = static_cast<int8_t>(rng.range(-128, 127));
        int64_t direct = 0;
        for (int i = 0; i < masq::kBlockSize; ++i) {
            direct += static_cast<int64_t>(act.elements[static_cast<size_t>(i)]) *
                      wgt.elements[static_cast<size_t>(i)];
        }
        int shift = static_cast<int>(act.shared_exp) + wgt.shared_exp - 2 * masq::kExpBias;
        float expected = masq::round_bf16(std::ldexp(static_cast<float>(direct), shift));
        if (masq::block_dot(act, wgt).value != expected) ++mismatches;
    }

    std::printf("precision %s blocks %d\n", args.precision.c_str(), args.blocks);
    std::printf("round-trip error (units of block scale): max %.6f mean %.6f\n", max_err,
                sum_err / static_cast<double>(samples));
    std::printf("bit-serial vs oracle mismatches: %lld\n", static_cast<long long>(mismatches));
    return mismatches == 0 ? 0 : 2;
}

int run_simulate(const SimulateArgs& args) {
    masq::LayerGraph graph = masq::load_graph_file(args.graph_path);
    if (args.seed >= 0) graph.seed = static_cast<uint64_t>(args.seed);
    masq::BinaryMask main = masq::load_mask(args.mask_path);
    masq::HardwareConfig hw =
        args.hw_path.empty() ? masq::HardwareConfig{} : masq::load_hardware_config(args.hw_path);
    masq::PrecisionSchedule schedule = args.schedule_path.empty()
                                           ? masq::PrecisionSchedule{}
                                           : masq::load_schedule(args.schedule_path, graph.timesteps);
    if (args.schedule_path.empty()) schedule.total_steps = graph.timesteps;
    if (args.format != "json" && args.format != "csv") {
        throw masq::ConfigError("format must be json or csv");
    }

    masq::SimReport report = masq::simulate_run(graph, main, schedule, hw, args.threshold);

    fs::create_directories(args.out_dir);
    if (args.format == "json") {
        write_file(fs::path(args.out_dir) / "report.json", masq::emit_report_json(report));
    } else {
        write_file(fs::path(args.out_dir) / "report.csv", masq::emit_report_csv(report));
    }
    std::printf("latency_s=%.9g energy_j=%.9g speedup_vs_mxint8=%.6f speedup_compute=%.6f "
                "energy_gain=%.6f\n",
                report.policy.latency_s, report.policy.energy_j, report.speedup_vs_mxint8,
                report.speedup_vs_mxint8_compute, report.energy_gain_vs_mxint8);
    return 0;
}

int run_report(const ReportArgs& args) {
    std::ifstream in(args.in_path);
    if (!in) throw masq::ConfigError("cannot open report '" + args.in_path + "'");
    nlohmann::ordered_json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw masq::ConfigError(std::string("report parse error: ") + e.what());
    }
    if (args.format == "json") {
        write_file(args.out_path, doc.dump(2) + "\n");
        return 0;
    }
    if (args.format != "csv") throw masq::ConfigError("format must be json or csv");
    if (!doc.contains("timesteps")) throw masq::ConfigError("report lacks a timesteps array");

    std::ostringstream out;
    out << "t,phase,refined,cycles,compute_cycles,memory_cycles,dram_bytes,onchip_bytes,"
           "energy_pj,stage0_tokens,stage1_tokens,stage2_tokens,stage3_tokens\n";
    try {
        for (const auto& s : doc["timesteps"]) {
            std::array<int64_t, 4> sum{};
            if (s.contains("stage_tokens")) {
                for (const auto& hist : s["stage_tokens"]) {
                    for (int i = 0; i < 4; ++i) sum[static_cast<size_t>(i)] += hist[static_cast<size_t>(i)].get<int64_t>();
                }
            }
            out << s["t"].get<int>() << ',' << s["phase"].get<int>() << ','
                << (s["refined"].is_boolean() && s["refined"].get<bool>() ? 1 : 0) << ','
                << s["cycles"].dump() << ',' << s["compute_cycles"].dump() << ','
                << s["memory_cycles"].dump() << ',' << s["dram_bytes"].get<int64_t>() << ','
                << s["onchip_bytes"].get<int64_t>() << ',' << s["energy_pj"].get<int64_t>() << ','
                << sum[0] << ',' << sum[1] << ',' << sum[2] << ',' << sum[3] << '\n';
        }
    } catch (const nlohmann::json::exception& e) {
        throw masq::ConfigError(std::string("report is malformed: ") + e.what());
    }
    write_file(args.out_path, out.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"masked-diffusion multi-precision accelerator simulator"};
    app.require_subcommand(1);

    MaskgenArgs mg;
    CLI::App* maskgen = app.add_subcommand("maskgen", "build per-level stage maps from a mask");
    maskgen->add_option("--mask", mg.mask_path, "mask file (PBM P1 or JSON)")->required();
    maskgen->add_option("--graph", mg.graph_path, "graph config JSON")->required();
    maskgen->add_option("--out", mg.out_dir, "output directory")->required();

    QuantcheckArgs qc;
    CLI::App* quantcheck = app.add_subcommand("quantcheck", "codec round-trip and datapath check");
    quantcheck->add_option("--seed", qc.seed, "RNG seed");
    quantcheck->add_option("--precision", qc.precision, "mxint2|mxint4|mxint8");
    quantcheck->add_option("--blocks", qc.blocks, "number of random blocks");

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "run the cycle/energy simulation");
    simulate->add_option("--graph", sim.graph_path, "graph config JSON")->required();
    simulate->add_option("--mask", sim.mask_path, "mask file (PBM P1 or JSON)")->required();
    simulate->add_option("--hw", sim.hw_path, "hardware config JSON");
    simulate->add_option("--schedule", sim.schedule_path, "schedule config JSON");
    simulate->add_option("--seed", sim.seed, "override the graph seed");
    simulate->add_option("--out", sim.out_dir, "output directory")->required();
    simulate->add_option("--format", sim.format, "json|csv");
    simulate->add_option("--threshold", sim.threshold, "semantic promotion threshold");

    ReportArgs rep;
    CLI::App* report = app.add_subcommand("report", "convert a report file");
    report->add_option("--in", rep.in_path, "report JSON")->required();
    report->add_option("--out", rep.out_path, "output file")->required();
    report->add_option("--format", rep.format, "csv|json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (maskgen->parsed()) return run_maskgen(mg);
        if (quantcheck->parsed()) return run_quantcheck(qc);
        if (simulate->parsed()) return run_simulate(sim);
        if (report->parsed()) return run_report(rep);
    } catch (const masq::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const masq::ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const masq::InvalidValue& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const masq::RangeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
