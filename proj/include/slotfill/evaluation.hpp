#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace slotfill {

struct ModelParams;
struct Corpus;

struct Segment {
    std::string type;   // text after "B-" / "I-"
    std::size_t start;  // inclusive
    std::size_t end;    // inclusive

    auto operator<=>(const Segment&) const = default;
};

// Maximal IOB spans. An I-X that does not continue an X span opens a new one.
// Throws std::invalid_argument naming the position of a malformed label.
std::vector<Segment> extract_segments(std::span<const std::string> labels);

// Inverse of extract_segments for non-overlapping segments.
std::vector<std::string> render_segments(std::span<const Segment> segments, std::size_t length);

struct PrfReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t predicted = 0;
    std::size_t gold = 0;
    std::size_t correct = 0;
};

// Micro-averaged segment-level precision, recall and F1 over a corpus.
PrfReport f1_score(std::span<const std::vector<std::string>> gold,
                   std::span<const std::vector<std::string>> predicted);

// "precision=..", "recall=..", "f1=.." as percentages with two decimals,
// preceded by a human-readable summary line.
std::string format_report(const PrfReport& report);

struct AfterErrorStats {
    std::size_t sentences = 0;          // sentences examined
    std::size_t errored_sentences = 0;  // sentences with at least one error
    std::size_t positions = 0;          // positions strictly after a first error
    std::size_t correct = 0;            // of those, correctly labeled

    // Undefined (nullopt) when no sentence contains an error.
    std::optional<double> accuracy() const;
};

// Token accuracy restricted to positions after each sentence's first error.
AfterErrorStats accuracy_after_first_error(std::span<const std::vector<std::size_t>> gold,
                                           std::span<const std::vector<std::size_t>> predicted);

// Decodes the corpus (greedy for feedback-free tags, beam otherwise) and
// applies the diagnostic above.
AfterErrorStats accuracy_after_first_error(const ModelParams& model, const Corpus& corpus,
                                           std::size_t beam);

// Decodes every sentence and scores it against the gold labels.
PrfReport evaluate_corpus(const ModelParams& model, const Corpus& corpus, std::size_t beam);

}  // namespace slotfill
