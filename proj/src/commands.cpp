#include "slotfill/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "slotfill/config.hpp"
#include "slotfill/corpus.hpp"
#include "slotfill/decoding.hpp"
#include "slotfill/evaluation.hpp"
#include "slotfill/model_io.hpp"
#include "slotfill/training.hpp"

namespace slotfill {

namespace {

std::string percent(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.2f", 100.0 * value);
    return buffer;
}

std::string join(const std::vector<std::size_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

RunConfig resolve_config(const std::optional<std::string>& path, const SettingOverrides& overrides) {
    RunConfig config = path ? load_run_config(*path) : RunConfig{};
    for (const auto& [key, value] : overrides) apply_setting(config, key, value);
    config.hyper.validate();
    return config;
}

// Training data plus optional evaluation data encoded with the same vocabularies.
std::pair<Corpus, std::optional<Corpus>> load_corpora(const RunConfig& config) {
    if (!config.data) throw std::invalid_argument("no training data given (data=...)");
    const auto raw = read_iob_file(*config.data);
    Corpus train = build_vocab(raw, config.hyper.min_count);
    std::optional<Corpus> eval;
    if (config.eval_data) {
        eval = encode_corpus(read_iob_file(*config.eval_data), train.words, train.labels);
    }
    return {std::move(train), std::move(eval)};
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

void warn_unused_beam(const SavedModel& model, const std::optional<std::size_t>& beam,
                      std::ostream& err) {
    if (beam && !uses_label_feedback(model.params.config.arch)) {
        err << "warning: --beam ignored for " << architecture_name(model.params.config.arch)
            << " (no label feedback; greedy decoding is exact)\n";
    }
}

}  // namespace

std::size_t default_worker_count() {
    if (const char* env = std::getenv("SLOTFILL_WORKERS")) {
        char* end = nullptr;
        const unsigned long n = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && n > 0) return n;
    }
    return 1;
}

int cmd_train(const TrainCommand& command, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig config = resolve_config(command.config_path, command.overrides);
        if (!config.out) throw std::invalid_argument("no output model path given (out=...)");
        auto [train, eval] = load_corpora(config);
        const Hyperparams& h = config.hyper;

        out << "arch=" << architecture_name(h.arch) << " depth=" << h.hidden_dims.size()
            << " d_e=" << h.embedding_dim << " d_h=" << join(h.hidden_dims) << " k=" << h.context
            << " lr=" << format_double(h.learning_rate) << " dropout=" << h.dropout
            << " epochs=" << h.epochs << " beam=" << h.beam << " seed=" << h.seed << '\n';
        out << "sentences=" << train.sentences.size() << " vocab=" << train.words.size()
            << " labels=" << train.num_labels() << '\n';
        out << "epoch\ttrain_nll\theldout_f1" << (eval ? "\teval_f1" : "") << '\n';
        auto report = [&](const EpochRecord& r) {
            char nll[32];
            std::snprintf(nll, sizeof(nll), "%.6f", r.train_nll);
            out << r.epoch << '\t' << nll << '\t' << percent(r.heldout_f1);
            if (r.eval_f1) out << '\t' << percent(*r.eval_f1);
            out << '\n';
        };
        const FitResult fitted = fit(train, h, eval ? &*eval : nullptr, report);
        const EpochRecord& best = fitted.history.best();

        save_model(SavedModel{fitted.model, train.words, train.labels, h.beam}, *config.out);
        out << "selected_epoch=" << best.epoch << '\n';
        out << "heldout_f1=" << percent(best.heldout_f1) << '\n';
        if (best.eval_f1) out << "eval_f1=" << percent(*best.eval_f1) << '\n';
        out << "model=" << *config.out << '\n';
        return 0;
    });
}

int cmd_eval(const EvalCommand& command, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const SavedModel model = load_model(command.model_path);
        warn_unused_beam(model, command.beam, err);
        const Corpus data =
            encode_corpus(read_iob_file(command.data_path), model.words, model.labels);
        const PrfReport report = evaluate_corpus(model.params, data, command.beam.value_or(model.beam));
        out << format_report(report);
        return 0;
    });
}

int cmd_predict(const PredictCommand& command, std::istream& in, std::ostream& out,
                std::ostream& err) {
    return guarded(err, [&] {
        const SavedModel model = load_model(command.model_path);
        warn_unused_beam(model, command.beam, err);
        const std::size_t beam = command.beam.value_or(model.beam);

        std::ifstream file;
        std::istream* source = &in;
        if (command.input_path != "-") {
            file.open(command.input_path);
            if (!file) throw std::runtime_error("cannot open " + command.input_path);
            source = &file;
        }
        std::string line;
        std::size_t line_number = 0;
        while (std::getline(*source, line)) {
            ++line_number;
            std::istringstream fields(line);
            RawSentence sentence;
            for (std::string token; fields >> token;) sentence.tokens.push_back(token);
            if (sentence.tokens.empty()) {
                err << "warning: skipping empty line " << line_number << '\n';
                continue;
            }
            const auto ids = encode_tokens(sentence.tokens, model.words);
            for (std::size_t label : decode(model.params, ids, beam)) {
                sentence.labels.push_back(model.labels.at(label));
            }
            write_iob(out, std::span<const RawSentence>(&sentence, 1));
        }
        return 0;
    });
}

int cmd_search(const SearchCommand& command, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig config = resolve_config(command.config_path, command.overrides);
        const SearchSpace space =
            command.space_path ? load_search_space(*command.space_path) : SearchSpace{};
        auto [train, eval] = load_corpora(config);
        const std::size_t workers =
            command.workers > 0 ? command.workers : default_worker_count();

        const SearchResult result = random_search(train, config.hyper, space, command.budget,
                                                  command.master_seed, workers,
                                                  eval ? &*eval : nullptr);
        out << "rank\ttrial\td_e\td_h\tk\tlr\tepoch\theldout_f1" << (eval ? "\teval_f1" : "")
            << '\n';
        for (std::size_t r = 0; r < result.ranked.size(); ++r) {
            const TrialResult& t = result.ranked[r];
            out << r + 1 << '\t' << t.trial << '\t' << t.hyper.embedding_dim << '\t'
                << join(t.hyper.hidden_dims) << '\t' << t.hyper.context << '\t'
                << format_double(t.hyper.learning_rate) << '\t' << t.history.best().epoch << '\t'
                << percent(t.heldout_f1);
            if (t.eval_f1) out << '\t' << percent(*t.eval_f1);
            out << '\n';
        }
        const TrialResult& best = result.ranked.front();
        out << "best_trial=" << best.trial << '\n';
        out << "heldout_f1=" << percent(best.heldout_f1) << '\n';
        if (config.out) {
            save_model(SavedModel{*result.best_model, train.words, train.labels, best.hyper.beam},
                       *config.out);
            out << "model=" << *config.out << '\n';
        }
        return 0;
    });
}

int cmd_synth(const SynthCommand& command, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto sentences = synth_global_sentences(command.sentences, command.seed,
                                                      command.vocab_size, command.num_types);
        if (command.out_path == "-") {
            write_iob(out, sentences);
        } else {
            std::ofstream file(command.out_path, std::ios::binary);
            if (!file) throw std::runtime_error("cannot write " + command.out_path);
            write_iob(file, sentences);
            out << "wrote " << sentences.size() << " sentences to " << command.out_path << '\n';
        }
        return 0;
    });
}

}  // namespace slotfill
