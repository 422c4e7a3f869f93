#include "masq/schedule.hpp"

#include <string>

namespace masq {

void PrecisionSchedule::validate() const {
    if (total_steps < 1) throw ConfigError("schedule: total_steps must be positive");
    if (!(0 < downgrade_points[0] && downgrade_points[0] < downgrade_points[1] &&
          downgrade_points[1] < total_steps)) {
        throw ConfigError("schedule: downgrade points must satisfy 0 < d0 < d1 < total_steps");
    }
    if (refine_interval < 0) throw ConfigError("schedule: refine_interval must be >= 0");
    for (const PhaseTable& table : phase_tables) {
        if (table[3] != Precision::Mxint8) {
            throw ConfigError("schedule: Stage 3 must stay MXINT8 in every phase");
        }
    }
    for (int stage = 0; stage < 4; ++stage) {
        for (int phase = 1; phase < 3; ++phase) {
            if (!at_least_as_wide(phase_tables[phase - 1][stage], phase_tables[phase][stage])) {
                throw ConfigError("schedule: stage " + std::to_string(stage) +
                                  " precision widens between phases " + std::to_string(phase - 1) +
                                  " and " + std::to_string(phase));
            }
        }
    }
}

namespace {

void check_timestep(const PrecisionSchedule& schedule, int timestep) {
    if (timestep < 0 || timestep >= schedule.total_steps) {
        throw RangeError("timestep " + std::to_string(timestep) + " outside schedule of " +
                         std::to_string(schedule.total_steps) + " steps");
    }
}

} // namespace

int phase_at(const PrecisionSchedule& schedule, int timestep) {
    check_timestep(schedule, timestep);
    if (timestep < schedule.downgrade_points[0]) return 0;
    if (timestep < schedule.downgrade_points[1]) return 1;
    return 2;
}

Precision precision_at(const PrecisionSchedule& schedule, int timestep, int stage) {
    if (stage < 0 || stage > 3) throw RangeError("stage " + std::to_string(stage) + " outside 0..3");
    return schedule.phase_tables[static_cast<size_t>(phase_at(schedule, timestep))]
                                [static_cast<size_t>(stage)];
}

bool refinement_due(const PrecisionSchedule& schedule, int timestep) {
    check_timestep(schedule, timestep);
    if (schedule.refine_interval <= 0) return false;
    return timestep > 0 && timestep % schedule.refine_interval == 0;
}

std::vector<Precision> precision_map_for_tensor(const StageMap& map,
                                                const PrecisionSchedule& schedule,
                                                int timestep) {
    const size_t tokens = map.codes.size();
    const size_t num_blocks = (tokens + kBlockSize - 1) / kBlockSize;
    PhaseTable table = schedule.phase_tables[static_cast<size_t>(phase_at(schedule, timestep))];

    std::vector<Precision> out;
    out.reserve(num_blocks);
    for (size_t b = 0; b < num_blocks; ++b) {
        size_t begin = b * kBlockSize;
        size_t end = std::min(tokens, begin + kBlockSize);
        Precision widest_p = table[map.codes[begin]];
        for (size_t i = begin + 1; i < end; ++i) {
            widest_p = widest(widest_p, table[map.codes[i]]);
        }
        out.push_back(widest_p);
    }
    return out;
}

} // namespace masq
