#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "slotfill/architectures.hpp"

namespace slotfill {

struct BeamHypothesis {
    std::vector<std::size_t> labels;  // label ids, length <= T
    double score = 0.0;               // sum of natural-log posteriors
    StackState state;                 // labeler state after consuming `labels`
};

struct DecodeResult {
    std::vector<std::size_t> labels;
    double score = 0.0;
};

// Per-step argmax, feeding the argmax back for label-fed tags. Ties go to the
// lowest label id.
DecodeResult greedy_decode(const ModelParams& model, std::span<const std::size_t> tokens);

// Left-to-right beam search. Hypotheses are ranked by score, ties broken by
// the lexicographically smaller label sequence. Works for every tag; for
// feedback-free tags it returns the per-step argmax.
DecodeResult beam_search(const ModelParams& model, std::span<const std::size_t> tokens,
                         std::size_t beam);

// Exact sequence argmax by enumerating all L^T label sequences.
DecodeResult exhaustive_decode(const ModelParams& model, std::span<const std::size_t> tokens,
                               std::size_t max_states);

// Sum of log-posteriors of `labels` under the model (the negated forward NLL).
double sequence_log_prob(const ModelParams& model, std::span<const std::size_t> tokens,
                         std::span<const std::size_t> labels);

// Greedy for feedback-free tags, beam search otherwise.
std::vector<std::size_t> decode(const ModelParams& model, std::span<const std::size_t> tokens,
                                std::size_t beam);

}  // namespace slotfill
