#pragma once

#include <string>

#include "masq/schedule.hpp"
#include "masq/sim.hpp"

namespace masq {

// JSON run-config loaders. Every field is optional and overrides the built-in
// default; unknown fields are rejected so typos surface as ConfigError.

// { "num_mpu", "bmpe_per_mpu", "lanes_per_bmpe", "freq_hz", "onchip_bytes",
//   "dram_bw_bytes_per_s", "vpu_ops_per_cycle",
//   "energy": { "pj_per_mac_cycle": {"mxint2","mxint4","mxint8"},
//               "pj_per_vpu_op", "pj_per_onchip_byte", "pj_per_dram_byte",
//               "static_pj_per_cycle" } }
HardwareConfig parse_hardware_config(const std::string& json_text);
HardwareConfig load_hardware_config(const std::string& path);

// { "total_steps", "downgrade_points": [d0, d1], "refine_interval",
//   "phase_tables": { "a"|"b"|"c": [stage0..stage3 precision names] } }
PrecisionSchedule parse_schedule(const std::string& json_text, int default_total_steps = 50);
PrecisionSchedule load_schedule(const std::string& path, int default_total_steps = 50);

} // namespace masq
