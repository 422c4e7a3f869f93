#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "masq/mask.hpp"

namespace masq {

// Mask files are either ASCII PBM (P1, set bit = masked token) or a JSON 2-D
// array of 0/1. load_mask() dispatches on content.
BinaryMask load_mask_pbm(std::istream& in);
BinaryMask load_mask_json(std::istream& in);
BinaryMask load_mask(const std::string& path);

void save_mask_pbm(const BinaryMask& mask, std::ostream& out);

// Stage map exports: JSON 2-D array of {0,1,2,3}, and a packed 2-bit dump for
// golden comparisons. Packed layout: "SMP2" magic, little-endian uint32
// height and width, then row-major codes packed four per byte, token i in
// bits [2*(i%4)+1 : 2*(i%4)].
void save_stage_map_json(const StageMap& map, std::ostream& out);
StageMap load_stage_map_json(std::istream& in);
std::vector<uint8_t> pack_stage_map(const StageMap& map);
StageMap unpack_stage_map(const std::vector<uint8_t>& bytes);

} // namespace masq
