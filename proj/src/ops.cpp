#include "masq/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace masq {

GroupNormResult group_norm_stagewise(const TokenTensor& x, const StageMap& map, int groups,
                                     float eps, std::span<const float> gamma,
                                     std::span<const float> beta) {
    const int n = x.tokens;
    const int c = x.channels;
    if (static_cast<size_t>(n) != map.codes.size()) {
        throw ShapeError("group_norm_stagewise: " + std::to_string(n) + " tokens vs stage map of " +
                         std::to_string(map.codes.size()));
    }
    if (groups < 1 || c % groups != 0) {
        throw ConfigError("group_norm_stagewise: channels " + std::to_string(c) +
                          " not divisible by groups " + std::to_string(groups));
    }
    if (!gamma.empty() && static_cast<int>(gamma.size()) != c) {
        throw ShapeError("group_norm_stagewise: affine scale length mismatch");
    }
    if (!beta.empty() && static_cast<int>(beta.size()) != c) {
        throw ShapeError("group_norm_stagewise: affine shift length mismatch");
    }

    std::vector<int> stat_tokens;
    stat_tokens.reserve(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t) {
        if (map.codes[static_cast<size_t>(t)] >= 2) stat_tokens.push_back(t);
    }
    GroupNormResult result;
    if (stat_tokens.empty()) {
        result.used_fallback = true;
        stat_tokens.resize(static_cast<size_t>(n));
        for (int t = 0; t < n; ++t) stat_tokens[static_cast<size_t>(t)] = t;
    }

    result.out = TokenTensor(n, c);
    const int cpg = c / groups;
    for (int g = 0; g < groups; ++g) {
        const int c0 = g * cpg;
        double sum = 0.0, sq = 0.0;
        for (int t : stat_tokens) {
            for (int ch = c0; ch < c0 + cpg; ++ch) {
                double v = x.at(t, ch);
                sum += v;
                sq += v * v;
            }
        }
        const double count = static_cast<double>(stat_tokens.size()) * cpg;
        const double mean = sum / count;
        const double var = sq / count - mean * mean;
        const double inv_std = 1.0 / std::sqrt(var + eps);
        for (int t = 0; t < n; ++t) {
            for (int ch = c0; ch < c0 + cpg; ++ch) {
                double v = (x.at(t, ch) - mean) * inv_std;
                if (!gamma.empty()) v = v * gamma[static_cast<size_t>(ch)];
                if (!beta.empty()) v = v + beta[static_cast<size_t>(ch)];
                result.out.at(t, ch) = static_cast<float>(v);
            }
        }
    }
    return result;
}

std::vector<float> softmax_stagemasked(std::span<const float> logits,
                                       std::span<const uint8_t> key_stages) {
    if (logits.size() != key_stages.size()) {
        throw ShapeError("softmax_stagemasked: logits vs key stage length mismatch");
    }
    const size_t n = logits.size();
    double max_logit = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < n; ++k) {
        if (key_stages[k] >= 1) max_logit = std::max(max_logit, static_cast<double>(logits[k]));
    }
    if (!std::isfinite(max_logit)) {
        throw ConfigError("softmax_stagemasked: every key is Stage 0, row has no support");
    }
    std::vector<double> e(n, 0.0);
    double denom = 0.0;
    for (size_t k = 0; k < n; ++k) {
        if (key_stages[k] >= 1) {
            e[k] = std::exp(static_cast<double>(logits[k]) - max_logit);
            denom += e[k];
        }
    }
    std::vector<float> out(n, 0.0f);
    for (size_t k = 0; k < n; ++k) {
        if (key_stages[k] >= 1) out[k] = static_cast<float>(e[k] / denom);
    }
    return out;
}

BinaryMask semantic_scores(const AttentionScores& attn, const BinaryMask& main, double threshold) {
    const size_t n = main.bits.size();
    if (attn.n != static_cast<int>(n)) {
        throw ShapeError("semantic_scores: attention is " + std::to_string(attn.n) +
                         " tokens vs mask of " + std::to_string(n));
    }
    BinaryMask promote(main.height, main.width);

    std::vector<size_t> masked;
    for (size_t j = 0; j < n; ++j) {
        if (main.bits[j]) masked.push_back(j);
    }
    if (masked.empty()) return promote;

    const double inv_m = 1.0 / static_cast<double>(masked.size());
    for (size_t q = 0; q < n; ++q) {
        if (main.bits[q]) continue; // masked tokens are never promotion candidates
        double acc = 0.0;
        for (size_t j : masked) acc += attn.probs[q * n + j];
        if (acc * inv_m > threshold) promote.bits[q] = 1;
    }
    return promote;
}

} // namespace masq
