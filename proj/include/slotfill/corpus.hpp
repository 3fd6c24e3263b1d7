#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace slotfill {

// One pre-tokenized sentence as read from an IOB file.
struct RawSentence {
    std::vector<std::string> tokens;
    std::vector<std::string> labels;

    friend bool operator==(const RawSentence&, const RawSentence&) = default;
};

// Thrown for malformed input files; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Each non-blank line is `token<sep>label`, where <sep> is one run of spaces
// or a single tab. Blank lines separate sentences. CRLF is accepted.
std::vector<RawSentence> read_iob(std::istream& in);
std::vector<RawSentence> read_iob_file(const std::filesystem::path& path);
// Canonical form: `token label` lines, one blank line after every sentence.
void write_iob(std::ostream& out, std::span<const RawSentence> sentences);

class Vocabulary {
public:
    static constexpr const char* kPad = "<PAD>";
    static constexpr const char* kUnk = "<UNK>";
    static constexpr const char* kBegin = "<B>";

    // Word vocabulary: PAD = 0, UNK = 1.
    static Vocabulary words();
    // Label vocabulary: <B> = 0.
    static Vocabulary labels();

    // Index of `entry`, adding it if absent.
    std::size_t add(const std::string& entry);
    std::optional<std::size_t> find(const std::string& entry) const;
    const std::string& at(std::size_t index) const;
    std::size_t size() const { return entries_.size(); }
    std::size_t reserved() const { return reserved_; }
    const std::vector<std::string>& entries() const { return entries_; }

    // Rebuilds from a full listing whose leading entries must match `reserved`.
    static Vocabulary from_entries(std::vector<std::string> entries, const Vocabulary& reserved);

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.entries_ == b.entries_;
    }

private:
    explicit Vocabulary(std::vector<std::string> reserved);

    std::vector<std::string> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t reserved_ = 0;
};

struct LabeledSentence {
    std::vector<std::size_t> tokens;  // word ids
    std::vector<std::size_t> labels;  // label ids, never <B>

    friend bool operator==(const LabeledSentence&, const LabeledSentence&) = default;
};

struct Corpus {
    std::vector<LabeledSentence> sentences;
    Vocabulary words = Vocabulary::words();
    Vocabulary labels = Vocabulary::labels();

    // Slot labels excluding <B>.
    std::size_t num_labels() const { return labels.size() - 1; }
    std::vector<std::string> label_strings(std::span<const std::size_t> ids) const;
    RawSentence raw(std::size_t index) const;
    Corpus subset(std::span<const std::size_t> indices) const;
    Corpus slice(std::size_t begin, std::size_t end) const;
    void validate() const;
};

// Word ids for `tokens`; unknown words map to UNK.
std::vector<std::size_t> encode_tokens(std::span<const std::string> tokens,
                                       const Vocabulary& words);
// Throws std::invalid_argument naming any label missing from `labels`.
LabeledSentence encode_sentence(const RawSentence& raw, const Vocabulary& words,
                                const Vocabulary& labels);
Corpus encode_corpus(std::span<const RawSentence> raw, const Vocabulary& words,
                     const Vocabulary& labels);

// Ids assigned by first occurrence. Words seen fewer than `min_count` times
// are left out of the vocabulary and encode as UNK.
Corpus build_vocab(std::span<const RawSentence> raw, std::size_t min_count = 1);

// Seeded shuffle, then the last round(ratio * n) sentences become heldout.
std::pair<Corpus, Corpus> split_train_heldout(const Corpus& corpus, double ratio,
                                              std::uint64_t seed);

// Concatenates corpora and builds a single vocabulary over all of them.
Corpus merge_corpora(std::span<const std::vector<RawSentence>> corpora,
                     std::size_t min_count = 1);

// Synthetic task whose labels depend on the final token. Each sentence is a
// body of filler and marker words followed by one mode token M1..M<types>;
// every marker is labeled B-Type<X> where X is selected by the mode token.
// `vocab_size` counts surface word types (modes, markers and fillers).
std::vector<RawSentence> synth_global_sentences(std::size_t n, std::uint64_t seed,
                                                std::size_t vocab_size, std::size_t num_types);
Corpus synth_global_task(std::size_t n, std::uint64_t seed, std::size_t vocab_size,
                         std::size_t num_types);

}  // namespace slotfill
