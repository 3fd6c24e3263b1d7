#include "slotfill/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "slotfill/architectures.hpp"
#include "slotfill/corpus.hpp"
#include "slotfill/decoding.hpp"

namespace slotfill {

namespace {

enum class Tag { kOutside, kBegin, kInside };

std::pair<Tag, std::string> parse_label(const std::string& label, std::size_t position) {
    if (label == "O") return {Tag::kOutside, {}};
    if (label.size() > 2 && label[1] == '-' && (label[0] == 'B' || label[0] == 'I')) {
        return {label[0] == 'B' ? Tag::kBegin : Tag::kInside, label.substr(2)};
    }
    throw std::invalid_argument("malformed IOB label '" + label + "' at position " +
                                std::to_string(position));
}

}  // namespace

std::vector<Segment> extract_segments(std::span<const std::string> labels) {
    std::vector<Segment> segments;
    bool open = false;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        auto [tag, type] = parse_label(labels[t], t);
        if (tag == Tag::kInside && open && segments.back().type == type) {
            segments.back().end = t;
            continue;
        }
        open = tag != Tag::kOutside;
        if (open) segments.push_back(Segment{std::move(type), t, t});
    }
    return segments;
}

std::vector<std::string> render_segments(std::span<const Segment> segments, std::size_t length) {
    std::vector<std::string> labels(length, "O");
    for (const Segment& s : segments) {
        if (s.start > s.end || s.end >= length || s.type.empty()) {
            throw std::invalid_argument("render_segments: invalid segment");
        }
        for (std::size_t t = s.start; t <= s.end; ++t) {
            if (labels[t] != "O") throw std::invalid_argument("render_segments: overlap");
            labels[t] = (t == s.start ? "B-" : "I-") + s.type;
        }
    }
    return labels;
}

PrfReport f1_score(std::span<const std::vector<std::string>> gold,
                   std::span<const std::vector<std::string>> predicted) {
    if (gold.size() != predicted.size()) {
        throw std::invalid_argument("f1_score: " + std::to_string(gold.size()) +
                                    " gold sentences vs " + std::to_string(predicted.size()) +
                                    " predicted");
    }
    PrfReport report;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        if (gold[s].size() != predicted[s].size()) {
            throw std::invalid_argument("f1_score: sentence " + std::to_string(s) +
                                        " length mismatch");
        }
        std::vector<Segment> g = extract_segments(gold[s]);
        std::vector<Segment> p = extract_segments(predicted[s]);
        report.gold += g.size();
        report.predicted += p.size();
        std::sort(g.begin(), g.end());
        std::sort(p.begin(), p.end());
        std::vector<Segment> common;
        std::set_intersection(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(common));
        report.correct += common.size();
    }
    if (report.predicted > 0) {
        report.precision = static_cast<double>(report.correct) / static_cast<double>(report.predicted);
    }
    if (report.gold > 0) {
        report.recall = static_cast<double>(report.correct) / static_cast<double>(report.gold);
    }
    if (report.precision + report.recall > 0.0) {
        report.f1 = 2.0 * report.precision * report.recall / (report.precision + report.recall);
    }
    return report;
}

std::string format_report(const PrfReport& report) {
    char buffer[256];
    std::snprintf(buffer, sizeof(buffer),
                  "segments: gold %zu, predicted %zu, correct %zu\n"
                  "precision=%.2f\nrecall=%.2f\nf1=%.2f\n",
                  report.gold, report.predicted, report.correct, 100.0 * report.precision,
                  100.0 * report.recall, 100.0 * report.f1);
    return buffer;
}

std::optional<double> AfterErrorStats::accuracy() const {
    if (errored_sentences == 0 || positions == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(positions);
}

AfterErrorStats accuracy_after_first_error(std::span<const std::vector<std::size_t>> gold,
                                           std::span<const std::vector<std::size_t>> predicted) {
    if (gold.empty()) throw std::invalid_argument("accuracy_after_first_error: empty corpus");
    if (gold.size() != predicted.size()) {
        throw std::invalid_argument("accuracy_after_first_error: corpus size mismatch");
    }
    AfterErrorStats stats;
    stats.sentences = gold.size();
    for (std::size_t s = 0; s < gold.size(); ++s) {
        const auto& g = gold[s];
        const auto& p = predicted[s];
        if (g.size() != p.size()) {
            throw std::invalid_argument("accuracy_after_first_error: sentence " +
                                        std::to_string(s) + " length mismatch");
        }
        const auto mismatch = std::mismatch(g.begin(), g.end(), p.begin());
        if (mismatch.first == g.end()) continue;
        ++stats.errored_sentences;
        const auto first = static_cast<std::size_t>(mismatch.first - g.begin());
        for (std::size_t t = first + 1; t < g.size(); ++t) {
            ++stats.positions;
            if (g[t] == p[t]) ++stats.correct;
        }
    }
    return stats;
}

AfterErrorStats accuracy_after_first_error(const ModelParams& model, const Corpus& corpus,
                                           std::size_t beam) {
    if (corpus.sentences.empty()) {
        throw std::invalid_argument("accuracy_after_first_error: empty corpus");
    }
    std::vector<std::vector<std::size_t>> gold, predicted;
    for (const LabeledSentence& s : corpus.sentences) {
        gold.push_back(s.labels);
        predicted.push_back(decode(model, s.tokens, beam));
    }
    return accuracy_after_first_error(gold, predicted);
}

PrfReport evaluate_corpus(const ModelParams& model, const Corpus& corpus, std::size_t beam) {
    std::vector<std::vector<std::string>> gold, predicted;
    gold.reserve(corpus.sentences.size());
    predicted.reserve(corpus.sentences.size());
    for (const LabeledSentence& s : corpus.sentences) {
        gold.push_back(corpus.label_strings(s.labels));
        predicted.push_back(corpus.label_strings(decode(model, s.tokens, beam)));
    }
    return f1_score(gold, predicted);
}

}  // namespace slotfill
