#include "slotfill/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace slotfill {

DecodeResult greedy_decode(const ModelParams& model, std::span<const std::size_t> tokens) {
    if (tokens.empty()) throw std::invalid_argument("greedy_decode: empty sentence");
    const DecodeContext context = prepare_decoding(model, tokens);
    StackState state = context.initial_state;
    DecodeResult result;
    std::size_t previous = kBeginLabel;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const std::vector<double> log_probs = step_log_probs(model, context, t, previous, state);
        std::size_t best = 0;
        for (std::size_t c = 1; c < log_probs.size(); ++c) {
            if (log_probs[c] > log_probs[best]) best = c;
        }
        previous = best + 1;
        result.labels.push_back(previous);
        result.score += log_probs[best];
    }
    return result;
}

DecodeResult beam_search(const ModelParams& model, std::span<const std::size_t> tokens,
                         std::size_t beam) {
    if (beam < 1) throw std::invalid_argument("beam_search: beam must be >= 1");
    if (tokens.empty()) throw std::invalid_argument("beam_search: empty sentence");
    const DecodeContext context = prepare_decoding(model, tokens);
    const std::size_t num_labels = model.config.num_labels;

    std::vector<BeamHypothesis> hypotheses(1);
    hypotheses[0].state = context.initial_state;

    struct Candidate {
        std::size_t parent;
        std::size_t label;
        double score;
    };
    std::vector<Candidate> candidates;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        candidates.clear();
        std::vector<StackState> next_states(hypotheses.size());
        for (std::size_t h = 0; h < hypotheses.size(); ++h) {
            const BeamHypothesis& hyp = hypotheses[h];
            next_states[h] = hyp.state;
            const std::size_t previous = t == 0 ? kBeginLabel : hyp.labels.back();
            const std::vector<double> log_probs =
                step_log_probs(model, context, t, previous, next_states[h]);
            for (std::size_t c = 0; c < num_labels; ++c) {
                candidates.push_back({h, c + 1, hyp.score + log_probs[c]});
            }
        }
        // Rank by score, then by the extended prefix (parent prefix, then label).
        auto better = [&](const Candidate& a, const Candidate& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.parent != b.parent) {
                const auto& pa = hypotheses[a.parent].labels;
                const auto& pb = hypotheses[b.parent].labels;
                if (pa != pb) return pa < pb;
            }
            return a.label < b.label;
        };
        const std::size_t keep = std::min(beam, candidates.size());
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                          candidates.end(), better);

        std::vector<BeamHypothesis> next;
        next.reserve(keep);
        for (std::size_t i = 0; i < keep; ++i) {
            const Candidate& cand = candidates[i];
            BeamHypothesis hyp;
            hyp.labels = hypotheses[cand.parent].labels;
            hyp.labels.push_back(cand.label);
            hyp.score = cand.score;
            hyp.state = next_states[cand.parent];
            next.push_back(std::move(hyp));
        }
        hypotheses = std::move(next);
    }
    return DecodeResult{std::move(hypotheses.front().labels), hypotheses.front().score};
}

double sequence_log_prob(const ModelParams& model, std::span<const std::size_t> tokens,
                         std::span<const std::size_t> labels) {
    return -forward(model, tokens, labels).nll;
}

DecodeResult exhaustive_decode(const ModelParams& model, std::span<const std::size_t> tokens,
                               std::size_t max_states) {
    if (tokens.empty()) throw std::invalid_argument("exhaustive_decode: empty sentence");
    const std::size_t num_labels = model.config.num_labels;
    std::size_t states = 1;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (states > max_states / num_labels) {
            throw std::invalid_argument("exhaustive_decode: " + std::to_string(num_labels) + "^" +
                                        std::to_string(tokens.size()) + " sequences exceed " +
                                        std::to_string(max_states));
        }
        states *= num_labels;
    }

    // Odometer over label ids in lexicographic order; strict improvement keeps
    // the lexicographically first sequence among exact ties.
    std::vector<std::size_t> labels(tokens.size(), 1);
    DecodeResult best;
    bool first = true;
    for (std::size_t n = 0; n < states; ++n) {
        const double score = sequence_log_prob(model, tokens, labels);
        if (first || score > best.score) {
            best.labels = labels;
            best.score = score;
            first = false;
        }
        for (std::size_t t = labels.size(); t-- > 0;) {
            if (++labels[t] <= num_labels) break;
            labels[t] = 1;
        }
    }
    return best;
}

std::vector<std::size_t> decode(const ModelParams& model, std::span<const std::size_t> tokens,
                                std::size_t beam) {
    if (!uses_label_feedback(model.config.arch)) return greedy_decode(model, tokens).labels;
    return beam_search(model, tokens, beam).labels;
}

}  // namespace slotfill
