#pragma once

#include <optional>
#include <span>
#include <vector>

#include "masq/mask.hpp"

namespace masq {

// ---------------------------------------------------------------------------
// Non-matrix operations adapted to multi-precision execution: group norm with
// statistics restricted to Stage 2-3 tokens, softmax that excludes Stage 0
// keys, and attention-probability scoring for semantic promotion.
// ---------------------------------------------------------------------------

struct TokenTensor {
    int tokens = 0;
    int channels = 0;
    std::vector<float> data; // row-major [token][channel]

    TokenTensor() = default;
    TokenTensor(int n, int c) : tokens(n), channels(c), data(static_cast<size_t>(n) * c, 0.0f) {}

    float at(int t, int c) const { return data[static_cast<size_t>(t) * channels + c]; }
    float& at(int t, int c) { return data[static_cast<size_t>(t) * channels + c]; }
};

// Post-softmax attention probabilities, row-major [query][key].
struct AttentionScores {
    int n = 0;
    std::vector<float> probs;

    AttentionScores() = default;
    explicit AttentionScores(int tokens) : n(tokens), probs(static_cast<size_t>(tokens) * tokens, 0.0f) {}

    float at(int q, int k) const { return probs[static_cast<size_t>(q) * n + k]; }
    float& at(int q, int k) { return probs[static_cast<size_t>(q) * n + k]; }
};

struct GroupNormResult {
    TokenTensor out;
    // Set when no Stage 2-3 token existed and statistics fell back to the
    // full token set.
    bool used_fallback = false;
};

// Group normalization whose per-group statistics come only from tokens at
// Stage 2 or 3; the statistics normalize every token. Optional per-channel
// affine follows.
GroupNormResult group_norm_stagewise(const TokenTensor& x, const StageMap& map, int groups,
                                     float eps = 1e-5f,
                                     std::span<const float> gamma = {},
                                     std::span<const float> beta = {});

// Softmax over the keys at Stage >= 1; Stage 0 keys take probability exactly
// zero. Max-subtraction for stability. Throws ConfigError when no key
// qualifies.
std::vector<float> softmax_stagemasked(std::span<const float> logits,
                                       std::span<const uint8_t> key_stages);

// Mean attention probability each unmasked token sends into the masked
// region; tokens whose mean exceeds `threshold` are flagged for promotion.
// Masked tokens are never flagged; an empty main mask promotes nothing.
BinaryMask semantic_scores(const AttentionScores& attn, const BinaryMask& main, double threshold);

} // namespace masq
