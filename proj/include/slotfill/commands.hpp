#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace slotfill {

// Settings given on the command line, as (config key, value) pairs applied
// on top of the config file.
using SettingOverrides = std::vector<std::pair<std::string, std::string>>;

struct TrainCommand {
    std::optional<std::string> config_path;
    SettingOverrides overrides;
};

struct EvalCommand {
    std::string model_path;
    std::string data_path;
    std::optional<std::size_t> beam;
};

struct PredictCommand {
    std::string model_path;
    std::string input_path = "-";  // "-" reads standard input
    std::optional<std::size_t> beam;
};

struct SearchCommand {
    std::optional<std::string> config_path;
    std::optional<std::string> space_path;
    SettingOverrides overrides;
    std::size_t budget = 10;
    std::uint64_t master_seed = 1;
    std::size_t workers = 0;  // 0: SLOTFILL_WORKERS or 1
};

struct SynthCommand {
    std::size_t sentences = 600;
    std::uint64_t seed = 1;
    std::size_t vocab_size = 40;
    std::size_t num_types = 2;
    std::string out_path = "-";
};

// Each command writes its report to `out`, diagnostics to `err`, and returns
// the process exit status. Errors are reported on `err` with status 1.
int cmd_train(const TrainCommand& command, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalCommand& command, std::ostream& out, std::ostream& err);
int cmd_predict(const PredictCommand& command, std::istream& in, std::ostream& out,
                std::ostream& err);
int cmd_search(const SearchCommand& command, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthCommand& command, std::ostream& out, std::ostream& err);

// Worker count from SLOTFILL_WORKERS, or 1 when unset or invalid.
std::size_t default_worker_count();

}  // namespace slotfill
