#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "slotfill/architectures.hpp"
#include "slotfill/corpus.hpp"

namespace slotfill {

inline constexpr int kModelFormatVersion = 1;

// A trained model together with the vocabularies that define its indices.
struct SavedModel {
    ModelParams params;
    Vocabulary words = Vocabulary::words();
    Vocabulary labels = Vocabulary::labels();
    std::size_t beam = 1;  // decoding beam used during training
};

class ModelFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Text format: a header of `key value` lines (format version, architecture,
// depth, d_e, d_h, k, label_dim, beam), the word and label listings, then
// every tensor as a name line, a `rows cols` line and one line per row, and a
// final `end` line so that truncation is always detected.
// Values use 17 significant digits and are locale independent.
void write_model(std::ostream& out, const SavedModel& model);
SavedModel read_model(std::istream& in);

void save_model(const SavedModel& model, const std::filesystem::path& path);
SavedModel load_model(const std::filesystem::path& path);

std::string format_double(double value);

}  // namespace slotfill
