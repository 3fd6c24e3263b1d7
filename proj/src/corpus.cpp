#include "slotfill/corpus.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "slotfill/numerics.hpp"

namespace slotfill {

namespace {

bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t") == std::string::npos;
}

// Splits `token<sep>label`; <sep> is a run of spaces or exactly one tab.
std::optional<std::pair<std::string, std::string>> split_pair(const std::string& line) {
    const std::size_t sep = line.find_first_of(" \t");
    if (sep == 0 || sep == std::string::npos) return std::nullopt;
    std::size_t rest = sep + 1;
    if (line[sep] == ' ') {
        while (rest < line.size() && line[rest] == ' ') ++rest;
    }
    if (rest >= line.size()) return std::nullopt;
    std::string label = line.substr(rest);
    if (label.find_first_of(" \t") != std::string::npos) return std::nullopt;
    return std::make_pair(line.substr(0, sep), std::move(label));
}

}  // namespace

std::vector<RawSentence> read_iob(std::istream& in) {
    std::vector<RawSentence> sentences;
    RawSentence current;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) {
            if (!current.tokens.empty()) sentences.push_back(std::move(current));
            current = RawSentence{};
            continue;
        }
        auto fields = split_pair(line);
        if (!fields) {
            throw ParseError("expected 'token label', got '" + line + "'", line_number);
        }
        current.tokens.push_back(std::move(fields->first));
        current.labels.push_back(std::move(fields->second));
    }
    if (!current.tokens.empty()) sentences.push_back(std::move(current));
    if (sentences.empty()) throw ParseError("no sentences in input", line_number);
    return sentences;
}

std::vector<RawSentence> read_iob_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return read_iob(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    }
}

void write_iob(std::ostream& out, std::span<const RawSentence> sentences) {
    for (const RawSentence& s : sentences) {
        for (std::size_t t = 0; t < s.tokens.size(); ++t) {
            out << s.tokens[t] << ' ' << s.labels[t] << '\n';
        }
        out << '\n';
    }
}

Vocabulary::Vocabulary(std::vector<std::string> reserved) : reserved_(reserved.size()) {
    for (const std::string& entry : reserved) add(entry);
}

Vocabulary Vocabulary::words() { return Vocabulary({kPad, kUnk}); }
Vocabulary Vocabulary::labels() { return Vocabulary({kBegin}); }

std::size_t Vocabulary::add(const std::string& entry) {
    auto [it, inserted] = index_.try_emplace(entry, entries_.size());
    if (inserted) entries_.push_back(entry);
    return it->second;
}

std::optional<std::size_t> Vocabulary::find(const std::string& entry) const {
    auto it = index_.find(entry);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::string& Vocabulary::at(std::size_t index) const {
    if (index >= entries_.size()) {
        throw std::out_of_range("vocabulary index " + std::to_string(index) + " out of range");
    }
    return entries_[index];
}

Vocabulary Vocabulary::from_entries(std::vector<std::string> entries, const Vocabulary& reserved) {
    Vocabulary vocab = reserved;
    if (entries.size() < reserved.size()) {
        throw std::invalid_argument("vocabulary listing is missing reserved entries");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i < reserved.size()) {
            if (entries[i] != reserved.entries_[i]) {
                throw std::invalid_argument("vocabulary entry " + std::to_string(i) +
                                            " must be " + reserved.entries_[i]);
            }
            continue;
        }
        if (vocab.add(entries[i]) != i) {
            throw std::invalid_argument("duplicate vocabulary entry '" + entries[i] + "'");
        }
    }
    return vocab;
}

std::vector<std::string> Corpus::label_strings(std::span<const std::size_t> ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (std::size_t id : ids) out.push_back(labels.at(id));
    return out;
}

RawSentence Corpus::raw(std::size_t index) const {
    const LabeledSentence& s = sentences.at(index);
    RawSentence out;
    for (std::size_t id : s.tokens) out.tokens.push_back(words.at(id));
    out.labels = label_strings(s.labels);
    return out;
}

Corpus Corpus::subset(std::span<const std::size_t> indices) const {
    Corpus out;
    out.words = words;
    out.labels = labels;
    out.sentences.reserve(indices.size());
    for (std::size_t i : indices) out.sentences.push_back(sentences.at(i));
    return out;
}

Corpus Corpus::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > sentences.size()) throw std::out_of_range("Corpus::slice");
    std::vector<std::size_t> indices;
    for (std::size_t i = begin; i < end; ++i) indices.push_back(i);
    return subset(indices);
}

void Corpus::validate() const {
    for (std::size_t s = 0; s < sentences.size(); ++s) {
        const LabeledSentence& sentence = sentences[s];
        if (sentence.tokens.empty() || sentence.tokens.size() != sentence.labels.size()) {
            throw std::invalid_argument("sentence " + std::to_string(s) + " has bad length");
        }
        for (std::size_t id : sentence.tokens) {
            if (id >= words.size()) throw std::invalid_argument("word id out of range");
        }
        for (std::size_t id : sentence.labels) {
            if (id == 0 || id >= labels.size()) throw std::invalid_argument("label id out of range");
        }
    }
}

std::vector<std::size_t> encode_tokens(std::span<const std::string> tokens,
                                       const Vocabulary& words) {
    const std::size_t unk = *words.find(Vocabulary::kUnk);
    std::vector<std::size_t> out;
    out.reserve(tokens.size());
    for (const std::string& token : tokens) out.push_back(words.find(token).value_or(unk));
    return out;
}

LabeledSentence encode_sentence(const RawSentence& raw, const Vocabulary& words,
                                const Vocabulary& labels) {
    if (raw.tokens.empty() || raw.tokens.size() != raw.labels.size()) {
        throw std::invalid_argument("sentence must have equally many tokens and labels");
    }
    LabeledSentence out;
    out.tokens = encode_tokens(raw.tokens, words);
    for (const std::string& label : raw.labels) {
        auto id = labels.find(label);
        if (!id || *id < labels.reserved()) {
            throw std::invalid_argument("unknown label '" + label + "'");
        }
        out.labels.push_back(*id);
    }
    return out;
}

Corpus encode_corpus(std::span<const RawSentence> raw, const Vocabulary& words,
                     const Vocabulary& labels) {
    Corpus corpus;
    corpus.words = words;
    corpus.labels = labels;
    corpus.sentences.reserve(raw.size());
    for (const RawSentence& s : raw) corpus.sentences.push_back(encode_sentence(s, words, labels));
    return corpus;
}

Corpus build_vocab(std::span<const RawSentence> raw, std::size_t min_count) {
    if (raw.empty()) throw std::invalid_argument("build_vocab: no sentences");
    std::unordered_map<std::string, std::size_t> counts;
    for (const RawSentence& s : raw) {
        for (const std::string& token : s.tokens) ++counts[token];
    }
    Vocabulary words = Vocabulary::words();
    Vocabulary labels = Vocabulary::labels();
    for (const RawSentence& s : raw) {
        for (const std::string& token : s.tokens) {
            if (counts[token] >= min_count && token != Vocabulary::kPad &&
                token != Vocabulary::kUnk) {
                words.add(token);
            }
        }
        for (const std::string& label : s.labels) {
            if (label == Vocabulary::kBegin) {
                throw std::invalid_argument("build_vocab: '<B>' is reserved");
            }
            labels.add(label);
        }
    }
    return encode_corpus(raw, words, labels);
}

std::pair<Corpus, Corpus> split_train_heldout(const Corpus& corpus, double ratio,
                                              std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw std::invalid_argument("split_train_heldout: ratio must lie in (0, 1)");
    }
    const std::size_t n = corpus.sentences.size();
    const auto heldout = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    if (n < 2 || heldout == 0 || heldout >= n) {
        throw std::invalid_argument("split_train_heldout: ratio " + std::to_string(ratio) +
                                    " leaves an empty side for " + std::to_string(n) +
                                    " sentences");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    shuffle(order, rng);
    const std::span<const std::size_t> all(order);
    return {corpus.subset(all.subspan(0, n - heldout)), corpus.subset(all.subspan(n - heldout))};
}

Corpus merge_corpora(std::span<const std::vector<RawSentence>> corpora, std::size_t min_count) {
    if (corpora.empty()) throw std::invalid_argument("merge_corpora: no corpora");
    std::vector<RawSentence> merged;
    for (const auto& corpus : corpora) merged.insert(merged.end(), corpus.begin(), corpus.end());
    return build_vocab(merged, min_count);
}

std::vector<RawSentence> synth_global_sentences(std::size_t n, std::uint64_t seed,
                                                std::size_t vocab_size, std::size_t num_types) {
    if (n < 2) throw std::invalid_argument("synth_global_task: need at least 2 sentences");
    if (num_types < 1 || num_types > 26) {
        throw std::invalid_argument("synth_global_task: num_types must lie in [1, 26]");
    }
    if (vocab_size < num_types + 2) {
        throw std::invalid_argument("synth_global_task: vocab_size must be >= num_types + 2");
    }
    constexpr std::size_t kMinBody = 3;
    constexpr std::size_t kMaxBody = 8;
    constexpr double kMarkerRate = 0.3;

    const std::size_t content = vocab_size - num_types;
    const std::size_t markers = std::max<std::size_t>(1, content / 3);
    const std::size_t fillers = content - markers;

    Rng rng(seed);
    std::vector<RawSentence> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t mode = rng.next_below(num_types);
        const std::string type = std::string("B-Type") + static_cast<char>('A' + mode);
        const std::size_t body = kMinBody + rng.next_below(kMaxBody - kMinBody + 1);
        std::vector<bool> marked(body);
        bool any = false;
        for (std::size_t t = 0; t < body; ++t) {
            marked[t] = rng.next_double() < kMarkerRate;
            any = any || marked[t];
        }
        if (!any) marked[rng.next_below(body)] = true;

        RawSentence sentence;
        for (std::size_t t = 0; t < body; ++t) {
            if (marked[t]) {
                sentence.tokens.push_back("m" + std::to_string(rng.next_below(markers)));
                sentence.labels.push_back(type);
            } else {
                sentence.tokens.push_back("w" + std::to_string(rng.next_below(fillers)));
                sentence.labels.push_back("O");
            }
        }
        sentence.tokens.push_back("M" + std::to_string(mode + 1));
        sentence.labels.push_back("O");
        out.push_back(std::move(sentence));
    }
    return out;
}

Corpus synth_global_task(std::size_t n, std::uint64_t seed, std::size_t vocab_size,
                         std::size_t num_types) {
    return build_vocab(synth_global_sentences(n, seed, vocab_size, num_types));
}

}  // namespace slotfill
