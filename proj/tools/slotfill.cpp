// slotfill: train, evaluate and run LSTM slot-filling models.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "slotfill/commands.hpp"

namespace {

void add_hyper_flags(CLI::App* app, std::vector<std::pair<std::string, std::string>>& storage) {
    static const std::pair<const char*, const char*> kFlags[] = {
        {"arch", "Architecture: labeler-w, labeler-wl, enc-dec, enc-labeler-w, enc-labeler-wl"},
        {"depth", "Number of stacked LSTM layers (1 or 2)"},
        {"d-e", "Word embedding dimension"},
        {"d-h", "Hidden units, comma-separated per layer"},
        {"k", "Context window half-width"},
        {"label-dim", "Label embedding dimension (default d_e)"},
        {"lr", "Initial ADAM learning rate"},
        {"dropout", "Dropout rate"},
        {"epochs", "Training epochs"},
        {"beam", "Beam size for label-fed models"},
        {"seed", "Random seed"},
        {"split-seed", "Seed of the train/heldout split (default: seed)"},
        {"heldout-ratio", "Fraction of training data held out"},
        {"clip", "Elementwise gradient clip (0 disables)"},
        {"min-count", "Words seen fewer times map to UNK"},
        {"data", "Training data (IOB)"},
        {"eval-data", "Optional evaluation data (IOB)"},
        {"out", "Output model path"},
    };
    storage.reserve(std::size(kFlags));
    for (const auto& [flag, help] : kFlags) {
        std::string key = flag;
        for (char& c : key) {
            if (c == '-') c = '_';
        }
        storage.emplace_back(key, std::string{});
        app->add_option("--" + std::string(flag), storage.back().second, help);
    }
}

slotfill::SettingOverrides collect(const std::vector<std::pair<std::string, std::string>>& storage,
                                   const CLI::App* app) {
    slotfill::SettingOverrides overrides;
    for (const auto& [key, value] : storage) {
        std::string flag = key;
        for (char& c : flag) {
            if (c == '_') c = '-';
        }
        if (app->count("--" + flag) > 0) {
            // `depth` must follow `d_h` so a single d_h is replicated per layer.
            if (key == "depth") continue;
            overrides.emplace_back(key, value);
        }
    }
    if (app->count("--depth") > 0) {
        for (const auto& [key, value] : storage) {
            if (key == "depth") overrides.emplace_back(key, value);
        }
    }
    return overrides;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LSTM encoder-labeler slot filling toolkit"};
    app.require_subcommand(1);

    slotfill::TrainCommand train;
    std::vector<std::pair<std::string, std::string>> train_flags;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a model with heldout selection");
    train_cmd->add_option("--config", train.config_path, "key=value run configuration file");
    add_hyper_flags(train_cmd, train_flags);

    slotfill::EvalCommand eval;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Report precision/recall/F1 on IOB data");
    eval_cmd->add_option("--model", eval.model_path, "Model file")->required();
    eval_cmd->add_option("--data", eval.data_path, "IOB data")->required();
    eval_cmd->add_option("--beam", eval.beam, "Beam size (label-fed models)");

    slotfill::PredictCommand predict;
    CLI::App* predict_cmd = app.add_subcommand("predict", "Label tokenized sentences");
    predict_cmd->add_option("--model", predict.model_path, "Model file")->required();
    predict_cmd->add_option("--input", predict.input_path,
                            "One whitespace-tokenized sentence per line ('-' for stdin)");
    predict_cmd->add_option("--beam", predict.beam, "Beam size (label-fed models)");

    slotfill::SearchCommand search;
    std::vector<std::pair<std::string, std::string>> search_flags;
    CLI::App* search_cmd = app.add_subcommand("search", "Random hyper-parameter search");
    search_cmd->add_option("--config", search.config_path, "Base run configuration");
    search_cmd->add_option("--space", search.space_path, "Search-space file");
    search_cmd->add_option("--budget", search.budget, "Number of trials")->check(CLI::PositiveNumber);
    search_cmd->add_option("--master-seed", search.master_seed, "Seed for trial sampling");
    search_cmd->add_option("--workers", search.workers,
                           "Parallel trials (default: $SLOTFILL_WORKERS or 1)");
    add_hyper_flags(search_cmd, search_flags);

    slotfill::SynthCommand synth;
    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate the synthetic sentence-level task");
    synth_cmd->add_option("--n", synth.sentences, "Number of sentences");
    synth_cmd->add_option("--seed", synth.seed, "Random seed");
    synth_cmd->add_option("--vocab-size", synth.vocab_size, "Surface word types");
    synth_cmd->add_option("--num-types", synth.num_types, "Number of mode tokens / slot types");
    synth_cmd->add_option("--out", synth.out_path, "Output IOB file ('-' for stdout)");

    CLI11_PARSE(app, argc, argv);

    if (train_cmd->parsed()) {
        train.overrides = collect(train_flags, train_cmd);
        return slotfill::cmd_train(train, std::cout, std::cerr);
    }
    if (eval_cmd->parsed()) return slotfill::cmd_eval(eval, std::cout, std::cerr);
    if (predict_cmd->parsed()) return slotfill::cmd_predict(predict, std::cin, std::cout, std::cerr);
    if (search_cmd->parsed()) {
        search.overrides = collect(search_flags, search_cmd);
        return slotfill::cmd_search(search, std::cout, std::cerr);
    }
    if (synth_cmd->parsed()) return slotfill::cmd_synth(synth, std::cout, std::cerr);
    return 1;
}
