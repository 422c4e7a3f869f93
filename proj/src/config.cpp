#include "masq/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace masq {

namespace {

nlohmann::json parse_doc(const std::string& text, const char* what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(what) + ": parse error: " + e.what());
    }
}

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw ConfigError(std::string("cannot open ") + what + " '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (!known.count(key)) throw ConfigError(where + ": unknown field '" + key + "'");
    }
}

double get_number(const nlohmann::json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
    return obj[key].get<double>();
}

} // namespace

HardwareConfig parse_hardware_config(const std::string& json_text) {
    nlohmann::json doc = parse_doc(json_text, "hardware config");
    if (!doc.is_object()) throw ConfigError("hardware config: expected an object");
    reject_unknown(doc,
                   {"num_mpu", "bmpe_per_mpu", "lanes_per_bmpe", "freq_hz", "onchip_bytes",
                    "dram_bw_bytes_per_s", "vpu_ops_per_cycle", "energy"},
                   "hardware config");

    HardwareConfig hw;
    hw.geometry.num_mpu = static_cast<int>(get_number(doc, "num_mpu", hw.geometry.num_mpu));
    hw.geometry.bmpe_per_mpu =
        static_cast<int>(get_number(doc, "bmpe_per_mpu", hw.geometry.bmpe_per_mpu));
    hw.geometry.lanes_per_bmpe =
        static_cast<int>(get_number(doc, "lanes_per_bmpe", hw.geometry.lanes_per_bmpe));
    hw.freq_hz = get_number(doc, "freq_hz", hw.freq_hz);
    hw.onchip_bytes = static_cast<int64_t>(get_number(doc, "onchip_bytes",
                                                      static_cast<double>(hw.onchip_bytes)));
    hw.dram_bw_bytes_per_s = get_number(doc, "dram_bw_bytes_per_s", hw.dram_bw_bytes_per_s);
    hw.vpu_ops_per_cycle = static_cast<int64_t>(
        get_number(doc, "vpu_ops_per_cycle", static_cast<double>(hw.vpu_ops_per_cycle)));

    if (doc.contains("energy")) {
        const auto& e = doc["energy"];
        if (!e.is_object()) throw ConfigError("hardware config: energy: expected an object");
        reject_unknown(e,
                       {"pj_per_mac_cycle", "pj_per_vpu_op", "pj_per_onchip_byte",
                        "pj_per_dram_byte", "static_pj_per_cycle"},
                       "hardware config: energy");
        if (e.contains("pj_per_mac_cycle")) {
            const auto& m = e["pj_per_mac_cycle"];
            if (!m.is_object()) {
                throw ConfigError("hardware config: energy.pj_per_mac_cycle: expected an object");
            }
            reject_unknown(m, {"mxint2", "mxint4", "mxint8"}, "hardware config: energy.pj_per_mac_cycle");
            for (Precision p : {Precision::Mxint2, Precision::Mxint4, Precision::Mxint8}) {
                hw.energy.pj_per_mac_cycle[static_cast<size_t>(p)] =
                    get_number(m, precision_name(p), hw.energy.pj_per_mac_cycle[static_cast<size_t>(p)]);
            }
        }
        hw.energy.pj_per_vpu_op = get_number(e, "pj_per_vpu_op", hw.energy.pj_per_vpu_op);
        hw.energy.pj_per_onchip_byte = get_number(e, "pj_per_onchip_byte", hw.energy.pj_per_onchip_byte);
        hw.energy.pj_per_dram_byte = get_number(e, "pj_per_dram_byte", hw.energy.pj_per_dram_byte);
        hw.energy.static_pj_per_cycle = get_number(e, "static_pj_per_cycle", hw.energy.static_pj_per_cycle);
    }
    hw.validate();
    return hw;
}

HardwareConfig load_hardware_config(const std::string& path) {
    return parse_hardware_config(read_file(path, "hardware config"));
}

PrecisionSchedule parse_schedule(const std::string& json_text, int default_total_steps) {
    nlohmann::json doc = parse_doc(json_text, "schedule config");
    if (!doc.is_object()) throw ConfigError("schedule config: expected an object");
    reject_unknown(doc, {"total_steps", "downgrade_points", "refine_interval", "phase_tables"},
                   "schedule config");

    PrecisionSchedule schedule;
    schedule.total_steps = default_total_steps;
    try {
        schedule.total_steps = static_cast<int>(get_number(doc, "total_steps", schedule.total_steps));
        if (doc.contains("downgrade_points")) {
            const auto& d = doc["downgrade_points"];
            if (!d.is_array() || d.size() != 2) {
                throw ConfigError("schedule config: downgrade_points must be [d0, d1]");
            }
            schedule.downgrade_points = {d[0].get<int>(), d[1].get<int>()};
        }
        schedule.refine_interval =
            static_cast<int>(get_number(doc, "refine_interval", schedule.refine_interval));
        if (doc.contains("phase_tables")) {
            const auto& tables = doc["phase_tables"];
            if (!tables.is_object()) throw ConfigError("schedule config: phase_tables: expected an object");
            reject_unknown(tables, {"a", "b", "c"}, "schedule config: phase_tables");
            const char* names[3] = {"a", "b", "c"};
            for (int p = 0; p < 3; ++p) {
                if (!tables.contains(names[p])) continue;
                const auto& row = tables[names[p]];
                if (!row.is_array() || row.size() != 4) {
                    throw ConfigError(std::string("schedule config: phase_tables.") + names[p] +
                                      " must list four precisions (stage 0..3)");
                }
                for (int s = 0; s < 4; ++s) {
                    schedule.phase_tables[static_cast<size_t>(p)][static_cast<size_t>(s)] =
                        precision_from_name(row[static_cast<size_t>(s)].get<std::string>());
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("schedule config: ") + e.what());
    }
    schedule.validate();
    return schedule;
}

PrecisionSchedule load_schedule(const std::string& path, int default_total_steps) {
    return parse_schedule(read_file(path, "schedule config"), default_total_steps);
}

} // namespace masq
