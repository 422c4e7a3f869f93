#include "masq/mask_io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace masq {

namespace {

// PBM token scanner: skips whitespace and '#' comments.
std::string next_pbm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
        // P1 allows raster digits without separators.
        if (tok.size() == 1 && (tok[0] == '0' || tok[0] == '1')) {
            int peek = in.peek();
            if (peek == '0' || peek == '1') return tok;
        }
    }
    return tok;
}

int next_pbm_int(std::istream& in, const char* what) {
    std::string tok = next_pbm_token(in);
    if (tok.empty()) throw ConfigError(std::string("PBM: missing ") + what);
    try {
        return std::stoi(tok);
    } catch (const std::exception&) {
        throw ConfigError(std::string("PBM: bad ") + what + " '" + tok + "'");
    }
}

} // namespace

BinaryMask load_mask_pbm(std::istream& in) {
    std::string magic = next_pbm_token(in);
    if (magic != "P1") throw ConfigError("PBM: expected magic P1, got '" + magic + "'");
    int w = next_pbm_int(in, "width");
    int h = next_pbm_int(in, "height");
    if (w < 1 || h < 1) throw ConfigError("PBM: non-positive dimensions");

    BinaryMask mask(h, w);
    for (int i = 0; i < h * w; ++i) {
        int ch;
        do {
            ch = in.get();
            if (ch == '#') {
                while ((ch = in.get()) != EOF && ch != '\n') {}
            }
        } while (ch != EOF && std::isspace(ch));
        if (ch != '0' && ch != '1') throw ConfigError("PBM: raster ended early or has non-binary digit");
        mask.bits[static_cast<size_t>(i)] = static_cast<uint8_t>(ch - '0');
    }
    return mask;
}

BinaryMask load_mask_json(std::istream& in) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mask JSON parse error: ") + e.what());
    }
    if (!doc.is_array() || doc.empty() || !doc[0].is_array()) {
        throw ConfigError("mask JSON must be a 2-D array of 0/1");
    }
    int h = static_cast<int>(doc.size());
    int w = static_cast<int>(doc[0].size());
    BinaryMask mask(h, w);
    try {
        for (int r = 0; r < h; ++r) {
            if (static_cast<int>(doc[r].size()) != w) {
                throw ConfigError("mask JSON row " + std::to_string(r) + " has ragged width");
            }
            for (int c = 0; c < w; ++c) {
                int v = doc[r][c].get<int>();
                if (v != 0 && v != 1) throw ConfigError("mask JSON holds a non-binary value");
                mask.set(r, c, static_cast<uint8_t>(v));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mask JSON: ") + e.what());
    }
    return mask;
}

BinaryMask load_mask(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mask file '" + path + "'");
    int first = in.peek();
    if (first == 'P') return load_mask_pbm(in);
    return load_mask_json(in);
}

void save_mask_pbm(const BinaryMask& mask, std::ostream& out) {
    out << "P1\n" << mask.width << " " << mask.height << "\n";
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            out << static_cast<int>(mask.at(r, c));
            out << (c + 1 == mask.width ? '\n' : ' ');
        }
    }
}

void save_stage_map_json(const StageMap& map, std::ostream& out) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < map.height; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < map.width; ++c) row.push_back(static_cast<int>(map.at(r, c)));
        rows.push_back(std::move(row));
    }
    out << rows.dump() << "\n";
}

StageMap load_stage_map_json(std::istream& in) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("stage map JSON parse error: ") + e.what());
    }
    try {
        int h = static_cast<int>(doc.size());
        int w = static_cast<int>(doc.at(0).size());
        StageMap map(h, w);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                int v = doc[r][c].get<int>();
                if (v < 0 || v > 3) throw ConfigError("stage map JSON holds a code outside 0..3");
                map.set(r, c, static_cast<uint8_t>(v));
            }
        return map;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("stage map JSON: ") + e.what());
    }
}

std::vector<uint8_t> pack_stage_map(const StageMap& map) {
    std::vector<uint8_t> bytes;
    bytes.reserve(13 + map.codes.size() / 4);
    for (char ch : {'S', 'M', 'P', '2'}) bytes.push_back(static_cast<uint8_t>(ch));
    auto push_u32 = [&](uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
    };
    push_u32(static_cast<uint32_t>(map.height));
    push_u32(static_cast<uint32_t>(map.width));
    uint8_t cur = 0;
    for (size_t i = 0; i < map.codes.size(); ++i) {
        cur |= static_cast<uint8_t>(map.codes[i] << (2 * (i % 4)));
        if (i % 4 == 3) {
            bytes.push_back(cur);
            cur = 0;
        }
    }
    if (map.codes.size() % 4 != 0) bytes.push_back(cur);
    return bytes;
}

StageMap unpack_stage_map(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 12 || bytes[0] != 'S' || bytes[1] != 'M' || bytes[2] != 'P' || bytes[3] != '2') {
        throw ConfigError("packed stage map: bad magic");
    }
    auto read_u32 = [&](size_t off) {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[off + i]) << (8 * i);
        return v;
    };
    int h = static_cast<int>(read_u32(4));
    int w = static_cast<int>(read_u32(8));
    StageMap map(h, w);
    size_t need = 12 + (map.codes.size() + 3) / 4;
    if (bytes.size() < need) throw ConfigError("packed stage map: truncated payload");
    for (size_t i = 0; i < map.codes.size(); ++i) {
        map.codes[i] = (bytes[12 + i / 4] >> (2 * (i % 4))) & 0b11;
    }
    return map;
}

} // namespace masq
