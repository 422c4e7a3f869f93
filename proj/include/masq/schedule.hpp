#pragma once

#include <array>
#include <vector>

#include "masq/mask.hpp"
#include "masq/mx_codec.hpp"

namespace masq {

// ---------------------------------------------------------------------------
// Timestep-aware precision schedule. Denoising walks three phases whose
// stage -> precision tables shrink from 8/8/4/2 through 8/4/4/2 to 8/4/2/2
// (Stage 3 down to Stage 0); Stage 3 stays MXINT8 throughout. Semantic
// refinement fires on a fixed timestep cadence.
// ---------------------------------------------------------------------------

// One stage -> precision table, indexed by stage 0..3.
using PhaseTable = std::array<Precision, 4>;

struct PrecisionSchedule {
    int total_steps = 50;
    std::array<int, 2> downgrade_points = {9, 18};
    // refine_interval 0 disables semantic refinement.
    int refine_interval = 5;
    std::array<PhaseTable, 3> phase_tables = {
        PhaseTable{Precision::Mxint2, Precision::Mxint4, Precision::Mxint8, Precision::Mxint8},
        PhaseTable{Precision::Mxint2, Precision::Mxint4, Precision::Mxint4, Precision::Mxint8},
        PhaseTable{Precision::Mxint2, Precision::Mxint2, Precision::Mxint4, Precision::Mxint8},
    };

    // Throws ConfigError when the invariants do not hold.
    void validate() const;
};

// Phase index (0/1/2) active at `timestep`. A downgrade point is the first
// timestep executing the new phase.
int phase_at(const PrecisionSchedule& schedule, int timestep);

Precision precision_at(const PrecisionSchedule& schedule, int timestep, int stage);

// True when a semantic refinement pass runs this timestep (t > 0 and a
// multiple of the cadence; t = 0 has no attention statistics yet).
bool refinement_due(const PrecisionSchedule& schedule, int timestep);

// Per-32-token-block precision list over the row-major token order. Each
// block takes the widest precision any of its tokens' stages demands, so no
// token computes below its entitlement.
std::vector<Precision> precision_map_for_tensor(const StageMap& map,
                                                const PrecisionSchedule& schedule,
                                                int timestep);

} // namespace masq
