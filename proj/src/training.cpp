#include "slotfill/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "slotfill/evaluation.hpp"

namespace slotfill {

namespace {

// Independent RNG streams derived from one seed.
enum Stream : std::uint64_t { kSplitStream = 1, kInitStream = 2, kTrainStream = 3 };

void require_compatible(const Corpus& a, const Corpus& b, const char* what) {
    if (!(a.words == b.words) || !(a.labels == b.labels)) {
        throw std::invalid_argument(std::string(what) +
                                    " corpus uses a different word or label vocabulary");
    }
}

}  // namespace

void Hyperparams::validate() const {
    if (embedding_dim < 1) throw std::invalid_argument("hyperparams: d_e must be >= 1");
    if (hidden_dims.empty() || hidden_dims.size() > 2) {
        throw std::invalid_argument("hyperparams: depth must be 1 or 2");
    }
    for (std::size_t d : hidden_dims) {
        if (d < 1) throw std::invalid_argument("hyperparams: d_h entries must be >= 1");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw std::invalid_argument("hyperparams: dropout must lie in [0, 1)");
    }
    if (!(heldout_ratio > 0.0 && heldout_ratio < 1.0)) {
        throw std::invalid_argument("hyperparams: heldout_ratio must lie in (0, 1)");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("hyperparams: learning rate must be finite and >= 0");
    }
    if (beam < 1) throw std::invalid_argument("hyperparams: beam must be >= 1");
    if (!(clip >= 0.0)) throw std::invalid_argument("hyperparams: clip must be >= 0");
    if (min_count < 1) throw std::invalid_argument("hyperparams: min_count must be >= 1");
}

ModelConfig Hyperparams::model_config(std::size_t vocab_size, std::size_t num_labels) const {
    ModelConfig config;
    config.arch = arch;
    config.vocab_size = vocab_size;
    config.num_labels = num_labels;
    config.embedding_dim = embedding_dim;
    config.hidden_dims = hidden_dims;
    config.context = context;
    config.label_embedding_dim = label_embedding_dim == 0 ? embedding_dim : label_embedding_dim;
    return config;
}

AdamState AdamState::for_shapes(std::span<const Matrix* const> params) {
    AdamState state;
    for (const Matrix* p : params) {
        state.m.emplace_back(p->rows(), p->cols());
        state.v.emplace_back(p->rows(), p->cols());
    }
    return state;
}

AdamState AdamState::for_model(const ModelParams& model) {
    std::vector<const Matrix*> params;
    for (const auto& t : model.tensors()) params.push_back(t.tensor);
    return for_shapes(params);
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
               AdamState& state, double learning_rate) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: parameter, gradient and state counts differ");
    }
    for (std::size_t n = 0; n < params.size(); ++n) {
        if (!params[n]->same_shape(*grads[n]) || !params[n]->same_shape(state.m[n])) {
            throw std::invalid_argument("adam_step: shape mismatch at tensor " + std::to_string(n));
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t n = 0; n < params.size(); ++n) {
        auto theta = params[n]->values();
        auto g = grads[n]->values();
        auto m = state.m[n].values();
        auto v = state.v[n].values();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            theta[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

void adam_step(ModelParams& model, const ModelParams& grads, AdamState& state,
               double learning_rate) {
    std::vector<Matrix*> params;
    std::vector<const Matrix*> gradients;
    for (const auto& t : model.tensors()) params.push_back(t.tensor);
    for (const auto& t : grads.tensors()) gradients.push_back(t.tensor);
    adam_step(params, gradients, state, learning_rate);
}

void clip_gradients(ModelParams& grads, double limit) {
    if (limit <= 0.0) return;
    for (const auto& t : grads.tensors()) {
        for (double& g : t.tensor->values()) g = std::clamp(g, -limit, limit);
    }
}

double train_epoch(ModelParams& model, AdamState& adam, const Corpus& train,
                   const Hyperparams& hyper, Rng& rng) {
    if (train.sentences.empty()) throw std::invalid_argument("train_epoch: empty training set");
    std::vector<std::size_t> order(train.sentences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);

    const ForwardOptions options{Mode::kTrain, hyper.dropout, &rng};
    double total_nll = 0.0;
    std::size_t total_tokens = 0;
    for (std::size_t index : order) {
        const LabeledSentence& sentence = train.sentences[index];
        const ForwardTrace trace = forward(model, sentence.tokens, sentence.labels, options);
        ModelParams grads = backward(model, trace);
        clip_gradients(grads, hyper.clip);
        adam_step(model, grads, adam, hyper.learning_rate);
        total_nll += trace.nll;
        total_tokens += sentence.tokens.size();
    }
    return total_nll / static_cast<double>(total_tokens);
}

FitResult fit_split(const Corpus& train, const Corpus& heldout, const Hyperparams& hyper,
                    const Corpus* eval, const EpochCallback& on_epoch) {
    hyper.validate();
    if (hyper.epochs < 1) throw std::invalid_argument("fit: epochs must be >= 1");
    if (train.sentences.empty() || heldout.sentences.empty()) {
        throw std::invalid_argument("fit: train and heldout sets must be non-empty");
    }
    require_compatible(train, heldout, "heldout");
    if (eval) require_compatible(train, *eval, "evaluation");

    Rng init_rng(derive_seed(hyper.seed, kInitStream));
    Rng train_rng(derive_seed(hyper.seed, kTrainStream));
    ModelParams model = ModelParams::initialized(
        hyper.model_config(train.words.size(), train.num_labels()), init_rng);
    AdamState adam = AdamState::for_model(model);

    FitResult result{model, {}};
    for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
        EpochRecord record;
        record.epoch = epoch;
        record.train_nll = train_epoch(model, adam, train, hyper, train_rng);
        record.heldout_f1 = evaluate_corpus(model, heldout, hyper.beam).f1;
        if (eval) record.eval_f1 = evaluate_corpus(model, *eval, hyper.beam).f1;

        auto& history = result.history;
        if (history.epochs.empty() || record.heldout_f1 > history.best().heldout_f1) {
            history.selected = history.epochs.size();
            result.model = model;
        }
        history.epochs.push_back(record);
        if (on_epoch) on_epoch(record);
    }
    return result;
}

FitResult fit(const Corpus& corpus, const Hyperparams& hyper, const Corpus* eval,
              const EpochCallback& on_epoch) {
    hyper.validate();
    const std::uint64_t split_seed = derive_seed(hyper.split_seed.value_or(hyper.seed), kSplitStream);
    auto [train, heldout] = split_train_heldout(corpus, hyper.heldout_ratio, split_seed);
    return fit_split(train, heldout, hyper, eval, on_epoch);
}

void SearchSpace::validate() const {
    if (embedding_dims.empty()) throw std::invalid_argument("search space: no d_e values");
    if (hidden_dims.empty()) throw std::invalid_argument("search space: no d_h values");
    if (contexts.empty()) throw std::invalid_argument("search space: no k values");
    if (!(lr_min > 0.0 && lr_min < lr_max)) {
        throw std::invalid_argument("search space: need 0 < lr_min < lr_max");
    }
}

std::vector<Hyperparams> sample_trials(const Hyperparams& base, const SearchSpace& space,
                                       std::size_t budget, std::uint64_t master_seed) {
    space.validate();
    if (budget < 1) throw std::invalid_argument("random_search: budget must be >= 1");
    auto pick = [](const std::vector<std::size_t>& values, Rng& rng) {
        return values[static_cast<std::size_t>(rng.next_below(values.size()))];
    };
    std::vector<Hyperparams> trials;
    for (std::size_t i = 0; i < budget; ++i) {
        Rng rng(derive_seed(master_seed, i));
        Hyperparams h = base;
        h.embedding_dim = pick(space.embedding_dims, rng);
        for (std::size_t& d : h.hidden_dims) d = pick(space.hidden_dims, rng);
        h.context = pick(space.contexts, rng);
        h.learning_rate = rng.uniform(space.lr_min, space.lr_max);
        h.seed = rng.next_u64();
        h.split_seed = master_seed;
        trials.push_back(std::move(h));
    }
    return trials;
}

SearchResult random_search(const Corpus& corpus, const Hyperparams& base,
                           const SearchSpace& space, std::size_t budget,
                           std::uint64_t master_seed, std::size_t workers, const Corpus* eval) {
    const std::vector<Hyperparams> trials = sample_trials(base, space, budget, master_seed);
    for (const Hyperparams& h : trials) h.validate();

    SearchResult result;
    result.ranked.resize(trials.size());
    std::vector<std::optional<ModelParams>> models(trials.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;

    auto worker = [&] {
        for (std::size_t i = next++; i < trials.size(); i = next++) {
            try {
                FitResult fitted = fit(corpus, trials[i], eval);
                TrialResult& r = result.ranked[i];
                r.trial = i;
                r.hyper = trials[i];
                r.heldout_f1 = fitted.history.best().heldout_f1;
                r.eval_f1 = fitted.history.best().eval_f1;
                r.history = std::move(fitted.history);
                models[i] = std::move(fitted.model);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(workers, 1, trials.size());
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    std::stable_sort(result.ranked.begin(), result.ranked.end(),
                     [](const TrialResult& a, const TrialResult& b) {
                         return a.heldout_f1 > b.heldout_f1;
                     });
    result.best_model = std::move(models[result.ranked.front().trial]);
    return result;
}

}  // namespace slotfill
