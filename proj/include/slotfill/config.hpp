#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "slotfill/training.hpp"

namespace slotfill {

// Flat `key=value` run configuration. Blank lines and lines starting with '#'
// are ignored; unknown keys are rejected. Missing keys keep the Hyperparams
// defaults (lr 0.001, d_e 30, dropout 0.5, epochs 100, heldout_ratio 0.2).
//
// Keys: arch, depth, d_e, d_h (comma list, one per layer), k, label_dim, lr,
// dropout, epochs, beam, seed, split_seed, heldout_ratio, clip, min_count,
// data, eval_data, out.
struct RunConfig {
    Hyperparams hyper;
    std::optional<std::string> data;
    std::optional<std::string> eval_data;
    std::optional<std::string> out;
};

// Applies one setting; throws std::invalid_argument for unknown keys or bad values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

// Search-space file, same syntax. Keys: d_e, d_h, k (comma lists) and
// lr (`lo:hi`). Keys that are absent keep the defaults of SearchSpace.
SearchSpace parse_search_space(std::istream& in);
SearchSpace load_search_space(const std::filesystem::path& path);

}  // namespace slotfill
