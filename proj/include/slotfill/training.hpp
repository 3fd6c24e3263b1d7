#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "slotfill/architectures.hpp"
#include "slotfill/corpus.hpp"
#include "slotfill/numerics.hpp"

namespace slotfill {

struct Hyperparams {
    Architecture arch = Architecture::kLabelerW;
    std::size_t embedding_dim = 30;
    std::vector<std::size_t> hidden_dims = {100};  // one entry per layer
    std::size_t context = 1;
    std::size_t label_embedding_dim = 0;           // 0 means "same as embedding_dim"
    double learning_rate = 0.001;
    double dropout = 0.5;
    std::size_t epochs = 100;
    std::size_t beam = 4;
    std::uint64_t seed = 1;
    std::optional<std::uint64_t> split_seed;  // defaults to `seed`
    double heldout_ratio = 0.2;
    double clip = 5.0;  // elementwise gradient clip; 0 disables
    std::size_t min_count = 1;

    void validate() const;
    ModelConfig model_config(std::size_t vocab_size, std::size_t num_labels) const;
};

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;

    static AdamState for_shapes(std::span<const Matrix* const> params);
    static AdamState for_model(const ModelParams& model);
};

// One bias-corrected ADAM update of every tensor in `params`.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
               AdamState& state, double learning_rate);
void adam_step(ModelParams& model, const ModelParams& grads, AdamState& state,
               double learning_rate);

void clip_gradients(ModelParams& grads, double limit);

// One pass over `train` in a seeded random order with per-sentence updates.
// Returns the mean per-token NLL observed during the pass.
double train_epoch(ModelParams& model, AdamState& adam, const Corpus& train,
                   const Hyperparams& hyper, Rng& rng);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_nll = 0.0;
    double heldout_f1 = 0.0;
    std::optional<double> eval_f1;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
    std::size_t selected = 0;  // index into `epochs`

    const EpochRecord& best() const { return epochs.at(selected); }
};

struct FitResult {
    ModelParams model;  // snapshot at the selected epoch
    TrainingHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Splits `corpus` into train/heldout, then trains `hyper.epochs` epochs and
// keeps the model from the epoch with the highest heldout F1 (first on ties).
FitResult fit(const Corpus& corpus, const Hyperparams& hyper, const Corpus* eval = nullptr,
              const EpochCallback& on_epoch = {});

// Same protocol with an explicit heldout set.
FitResult fit_split(const Corpus& train, const Corpus& heldout, const Hyperparams& hyper,
                    const Corpus* eval = nullptr, const EpochCallback& on_epoch = {});

struct SearchSpace {
    std::vector<std::size_t> embedding_dims = {30, 50, 75};
    std::vector<std::size_t> hidden_dims = {100, 150, 200, 250, 300};
    std::vector<std::size_t> contexts = {0, 1, 2};
    double lr_min = 0.0001;
    double lr_max = 0.01;

    void validate() const;
};

struct TrialResult {
    std::size_t trial = 0;
    Hyperparams hyper;
    TrainingHistory history;
    double heldout_f1 = 0.0;
    std::optional<double> eval_f1;
};

struct SearchResult {
    std::vector<TrialResult> ranked;  // best heldout F1 first, ties by trial index
    std::optional<ModelParams> best_model;
};

// Trial hyper-parameters drawn from `space`; the depth of `base` decides how
// many d_h values are drawn. Every trial shares the heldout split of master_seed.
std::vector<Hyperparams> sample_trials(const Hyperparams& base, const SearchSpace& space,
                                       std::size_t budget, std::uint64_t master_seed);

SearchResult random_search(const Corpus& corpus, const Hyperparams& base,
                           const SearchSpace& space, std::size_t budget,
                           std::uint64_t master_seed, std::size_t workers = 1,
                           const Corpus* eval = nullptr);

}  // namespace slotfill
