#include "slotfill/architectures.hpp"

#include <cmath>
#include <stdexcept>

namespace slotfill {

namespace {

struct ArchitectureInfo {
    Architecture arch;
    std::string_view name;
    bool encoder;
    bool feedback;
    bool words;
};

constexpr ArchitectureInfo kArchitectures[] = {
    {Architecture::kLabelerW, "labeler-w", false, false, true},
    {Architecture::kLabelerWL, "labeler-wl", false, true, true},
    {Architecture::kEncoderDecoder, "enc-dec", true, true, false},
    {Architecture::kEncoderLabelerW, "enc-labeler-w", true, false, true},
    {Architecture::kEncoderLabelerWL, "enc-labeler-wl", true, true, true},
};

const ArchitectureInfo& info(Architecture arch) {
    for (const auto& entry : kArchitectures) {
        if (entry.arch == arch) return entry;
    }
    throw std::invalid_argument("unknown architecture");
}

std::size_t argmax(const Matrix& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

bool training_dropout(const ForwardOptions& options) {
    if (options.mode != Mode::kTrain || options.dropout == 0.0) return false;
    if (!(options.dropout > 0.0 && options.dropout < 1.0)) {
        throw std::invalid_argument("forward: dropout rate must lie in [0, 1)");
    }
    if (options.rng == nullptr) throw std::invalid_argument("forward: dropout needs an Rng");
    return true;
}

// One timestep through a stack. Returns the top-layer hidden state.
Matrix stack_step(const std::vector<LstmCellParams>& layers, Matrix input, StackState& state,
                  const ForwardOptions& options, StackStep* record) {
    const bool drop = training_dropout(options);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (drop) {
            Matrix mask = dropout_mask(input.rows(), options.dropout, *options.rng);
            input = hadamard(input, mask);
            if (record) record->input_masks.push_back(std::move(mask));
        }
        LstmStepOutput out = lstm_step_forward(input, state[l].h, state[l].c, layers[l]);
        state[l] = LayerState{out.h, out.c};
        input = std::move(out.h);
        if (record) record->caches.push_back(std::move(out.cache));
    }
    if (record) record->output = input;
    return input;
}

// Backpropagates one recorded stack step. `carry` holds the (dh, dc) flowing
// in from the following timestep and is replaced by the gradient w.r.t. this
// step's incoming state. Returns the gradient w.r.t. the raw layer-0 input.
Matrix stack_step_backward(const std::vector<LstmCellParams>& layers,
                           std::vector<LstmCellParams>& grads, const StackStep& step,
                           const Matrix& dh_top, std::vector<LayerState>& carry) {
    if (step.caches.size() != layers.size()) {
        throw std::invalid_argument("backward: trace depth does not match model");
    }
    Matrix dh_above = dh_top;
    for (std::size_t l = layers.size(); l-- > 0;) {
        const Matrix dh = add(dh_above, carry[l].h);
        LstmStepGradients g = lstm_step_backward(step.caches[l], dh, carry[l].c, layers[l],
                                                 grads[l]);
        carry[l] = LayerState{std::move(g.dh_prev), std::move(g.dc_prev)};
        dh_above = step.input_masks.empty() ? std::move(g.dx) : hadamard(g.dx, step.input_masks[l]);
    }
    return dh_above;
}

void check_tokens(const ModelParams& model, std::span<const std::size_t> tokens) {
    if (tokens.empty()) throw std::invalid_argument("forward: empty sentence");
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (tokens[t] >= model.config.vocab_size) {
            throw std::out_of_range("forward: token id " + std::to_string(tokens[t]) +
                                    " at position " + std::to_string(t) + " outside vocabulary");
        }
    }
}

void check_labels(const ModelParams& model, std::span<const std::size_t> tokens,
                  std::span<const std::size_t> labels) {
    if (labels.empty()) return;
    if (labels.size() != tokens.size()) {
        throw std::invalid_argument("forward: " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(tokens.size()) + " tokens");
    }
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] == kBeginLabel || labels[t] > model.config.num_labels) {
            throw std::out_of_range("forward: label id " + std::to_string(labels[t]) +
                                    " at position " + std::to_string(t) + " is not a slot label");
        }
    }
}

Matrix labeler_input(const ModelParams& model, const std::vector<Matrix>& windows,
                     std::size_t t, std::size_t previous_label) {
    const Architecture arch = model.config.arch;
    if (!uses_label_feedback(arch)) return windows[t];
    if (previous_label > model.config.num_labels) {
        throw std::out_of_range("labeler input: previous label id out of range");
    }
    Matrix label = model.label_embedding.col(previous_label);
    if (!uses_word_input(arch)) return label;
    const Matrix parts[] = {windows[t], label};
    return vconcat(parts);
}

void scatter_window_gradient(const ModelParams& model, std::span<const std::size_t> tokens,
                             std::size_t t, std::span<const double> d_window,
                             Matrix& embedding_grad) {
    const std::size_t d_e = model.config.embedding_dim;
    std::size_t offset = 0;
    for (std::size_t index : window_indices(tokens, t, model.config.context, kPadToken)) {
        for (std::size_t r = 0; r < d_e; ++r) embedding_grad(r, index) += d_window[offset + r];
        offset += d_e;
    }
}

void scatter_labeler_input_gradient(const ModelParams& model, const ForwardTrace& trace,
                                    std::size_t t, const Matrix& d_input, ModelParams& grads) {
    const Architecture arch = model.config.arch;
    std::size_t offset = 0;
    if (uses_word_input(arch)) {
        const std::size_t width = model.config.window_dim();
        scatter_window_gradient(model, trace.tokens, t,
                                d_input.values().subspan(0, width), grads.embedding);
        offset = width;
    }
    if (uses_label_feedback(arch)) {
        const std::size_t column = trace.feedback[t];
        for (std::size_t r = 0; r < model.config.label_embedding_dim; ++r) {
            grads.label_embedding(r, column) += d_input[offset + r];
        }
    }
}

}  // namespace

std::string_view architecture_name(Architecture arch) { return info(arch).name; }

Architecture parse_architecture(std::string_view name) {
    for (const auto& entry : kArchitectures) {
        if (entry.name == name) return entry.arch;
    }
    throw std::invalid_argument("unknown architecture '" + std::string(name) +
                                "' (expected labeler-w, labeler-wl, enc-dec, enc-labeler-w, "
                                "enc-labeler-wl)");
}

bool has_encoder(Architecture arch) { return info(arch).encoder; }
bool uses_label_feedback(Architecture arch) { return info(arch).feedback; }
bool uses_word_input(Architecture arch) { return info(arch).words; }

std::size_t ModelConfig::labeler_input_dim() const {
    std::size_t dim = 0;
    if (uses_word_input(arch)) dim += window_dim();
    if (uses_label_feedback(arch)) dim += label_embedding_dim;
    return dim;
}

void ModelConfig::validate() const {
    if (vocab_size < 2) throw std::invalid_argument("ModelConfig: vocabulary needs PAD and >=1 word");
    if (num_labels < 1) throw std::invalid_argument("ModelConfig: need at least one label");
    if (embedding_dim < 1) throw std::invalid_argument("ModelConfig: d_e must be >= 1");
    if (hidden_dims.empty() || hidden_dims.size() > 2) {
        throw std::invalid_argument("ModelConfig: depth must be 1 or 2");
    }
    for (std::size_t d : hidden_dims) {
        if (d < 1) throw std::invalid_argument("ModelConfig: d_h entries must be >= 1");
    }
    if (uses_label_feedback(arch) && label_embedding_dim < 1) {
        throw std::invalid_argument("ModelConfig: label embedding dimension must be >= 1");
    }
}

StackState zero_state(const ModelConfig& config) {
    StackState state;
    for (std::size_t d : config.hidden_dims) state.push_back({Matrix(d, 1), Matrix(d, 1)});
    return state;
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
    config.validate();
    ModelParams m;
    m.config = config;
    m.embedding = Matrix(config.embedding_dim, config.vocab_size);
    if (uses_label_feedback(config.arch)) {
        m.label_embedding = Matrix(config.label_embedding_dim, config.num_labels + 1);
    }
    if (has_encoder(config.arch)) {
        std::size_t in = config.window_dim();
        for (std::size_t d : config.hidden_dims) {
            m.encoder.push_back(LstmCellParams::zeros(in, d));
            in = d;
        }
    }
    std::size_t in = config.labeler_input_dim();
    for (std::size_t d : config.hidden_dims) {
        m.labeler.push_back(LstmCellParams::zeros(in, d));
        in = d;
    }
    m.softmax = SoftmaxParams::zeros(config.hidden_dims.back(), config.num_labels);
    return m;
}

ModelParams ModelParams::initialized(const ModelConfig& config, Rng& rng) {
    config.validate();
    ModelParams m;
    m.config = config;
    m.embedding = glorot_init(config.vocab_size, config.embedding_dim, rng);
    if (uses_label_feedback(config.arch)) {
        m.label_embedding = glorot_init(config.num_labels + 1, config.label_embedding_dim, rng);
    }
    if (has_encoder(config.arch)) {
        std::size_t in = config.window_dim();
        for (std::size_t d : config.hidden_dims) {
            m.encoder.push_back(LstmCellParams::initialized(in, d, rng));
            in = d;
        }
    }
    std::size_t in = config.labeler_input_dim();
    for (std::size_t d : config.hidden_dims) {
        m.labeler.push_back(LstmCellParams::initialized(in, d, rng));
        in = d;
    }
    m.softmax = SoftmaxParams::initialized(config.hidden_dims.back(), config.num_labels, rng);
    return m;
}

std::vector<ModelParams::NamedTensor> ModelParams::tensors() {
    std::vector<NamedTensor> out;
    out.push_back({"embedding", &embedding});
    if (!label_embedding.empty()) out.push_back({"label_embedding", &label_embedding});
    auto add_stack = [&](const char* prefix, std::vector<LstmCellParams>& stack) {
        for (std::size_t l = 0; l < stack.size(); ++l) {
            const auto cell = stack[l].tensors();
            for (std::size_t n = 0; n < cell.size(); ++n) {
                out.push_back({std::string(prefix) + "." + std::to_string(l) + "." +
                                   std::string(LstmCellParams::kTensorNames[n]),
                               cell[n]});
            }
        }
    };
    add_stack("encoder", encoder);
    add_stack("labeler", labeler);
    out.push_back({"softmax.W", &softmax.w});
    out.push_back({"softmax.b", &softmax.b});
    return out;
}

std::vector<ModelParams::ConstNamedTensor> ModelParams::tensors() const {
    std::vector<ConstNamedTensor> out;
    for (auto& [name, tensor] : const_cast<ModelParams*>(this)->tensors()) {
        out.push_back({std::move(name), tensor});
    }
    return out;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors()) n += t.tensor->size();
    return n;
}

void ModelParams::validate() const {
    const ModelParams reference = zeros(config);
    const auto expected = reference.tensors();
    const auto actual = tensors();
    if (expected.size() != actual.size()) {
        throw std::invalid_argument("ModelParams: tensor set does not match architecture");
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (!expected[i].tensor->same_shape(*actual[i].tensor)) {
            throw std::invalid_argument("ModelParams: " + actual[i].name + " has shape " +
                                        actual[i].tensor->shape_string() + ", expected " +
                                        expected[i].tensor->shape_string());
        }
    }
}

EncoderResult encode(const ModelParams& model, std::span<const std::size_t> tokens,
                     const ForwardOptions& options) {
    if (!has_encoder(model.config.arch)) {
        throw std::invalid_argument("encode: architecture " +
                                    std::string(architecture_name(model.config.arch)) +
                                    " has no encoder");
    }
    check_tokens(model, tokens);
    const std::vector<Matrix> windows =
        embed_window(tokens, model.embedding, model.config.context, kPadToken);
    EncoderResult result;
    result.final_state = zero_state(model.config);
    result.steps.reserve(tokens.size());
    for (std::size_t t = tokens.size(); t-- > 0;) {
        StackStep step;
        stack_step(model.encoder, windows[t], result.final_state, options, &step);
        result.steps.push_back(std::move(step));
    }
    return result;
}

namespace {

ForwardTrace run_labeler(const ModelParams& model, std::span<const std::size_t> tokens,
                         std::span<const std::size_t> labels, StackState state,
                         const ForwardOptions& options) {
    check_tokens(model, tokens);
    check_labels(model, tokens, labels);
    const Architecture arch = model.config.arch;
    if (options.mode == Mode::kTrain && labels.empty()) {
        throw std::invalid_argument("forward: train mode requires gold labels");
    }
    const bool drop = training_dropout(options);

    ForwardTrace trace;
    trace.mode = options.mode;
    trace.tokens.assign(tokens.begin(), tokens.end());
    trace.gold.assign(labels.begin(), labels.end());
    std::vector<Matrix> windows;
    if (uses_word_input(arch)) {
        windows = embed_window(tokens, model.embedding, model.config.context, kPadToken);
    }

    const std::size_t length = tokens.size();
    for (std::size_t t = 0; t < length; ++t) {
        std::size_t previous = kBeginLabel;
        if (t > 0) previous = labels.empty() ? trace.predicted[t - 1] : labels[t - 1];
        if (uses_label_feedback(arch)) trace.feedback.push_back(previous);

        StackStep step;
        Matrix h = stack_step(model.labeler, labeler_input(model, windows, t, previous), state,
                              options, &step);
        if (drop) {
            Matrix mask = dropout_mask(h.rows(), options.dropout, *options.rng);
            h = hadamard(h, mask);
            trace.output_masks.push_back(std::move(mask));
        }
        Matrix probs = softmax_probs(h, model.softmax);
        if (!labels.empty()) trace.nll -= std::log(probs[labels[t] - 1]);
        trace.predicted.push_back(argmax(probs) + 1);
        trace.probs.push_back(std::move(probs));
        trace.labeler.push_back(std::move(step));
    }
    return trace;
}

}  // namespace

ForwardTrace forward_labeler(const ModelParams& model, std::span<const std::size_t> tokens,
                             std::span<const std::size_t> labels,
                             const std::optional<StackState>& init_state,
                             const ForwardOptions& options) {
    const Architecture arch = model.config.arch;
    if (arch == Architecture::kEncoderDecoder) {
        throw std::invalid_argument("forward_labeler: use forward_encoder_decoder for enc-dec");
    }
    if (has_encoder(arch) && !init_state) {
        throw std::invalid_argument("forward_labeler: " + std::string(architecture_name(arch)) +
                                    " requires an initial state from the encoder");
    }
    if (!has_encoder(arch) && init_state) {
        throw std::invalid_argument("forward_labeler: " + std::string(architecture_name(arch)) +
                                    " starts from the zero state");
    }
    StackState state = init_state ? *init_state : zero_state(model.config);
    if (state.size() != model.config.depth()) {
        throw std::invalid_argument("forward_labeler: initial state depth mismatch");
    }
    return run_labeler(model, tokens, labels, std::move(state), options);
}

ForwardTrace forward_encoder_decoder(const ModelParams& model,
                                     std::span<const std::size_t> tokens,
                                     std::span<const std::size_t> labels,
                                     const ForwardOptions& options) {
    if (model.config.arch != Architecture::kEncoderDecoder) {
        throw std::invalid_argument("forward_encoder_decoder: architecture is " +
                                    std::string(architecture_name(model.config.arch)));
    }
    EncoderResult encoded = encode(model, tokens, options);
    ForwardTrace trace = run_labeler(model, tokens, labels, encoded.final_state, options);
    trace.has_encoder = true;
    trace.encoder = std::move(encoded);
    return trace;
}

ForwardTrace forward(const ModelParams& model, std::span<const std::size_t> tokens,
                     std::span<const std::size_t> labels, const ForwardOptions& options) {
    const Architecture arch = model.config.arch;
    if (arch == Architecture::kEncoderDecoder) {
        return forward_encoder_decoder(model, tokens, labels, options);
    }
    if (!has_encoder(arch)) return forward_labeler(model, tokens, labels, std::nullopt, options);
    EncoderResult encoded = encode(model, tokens, options);
    ForwardTrace trace = forward_labeler(model, tokens, labels, encoded.final_state, options);
    trace.has_encoder = true;
    trace.encoder = std::move(encoded);
    return trace;
}

ModelParams backward(const ModelParams& model, const ForwardTrace& trace,
                     const BackwardOptions& options) {
    const std::size_t length = trace.tokens.size();
    if (trace.gold.size() != length || length == 0) {
        throw std::invalid_argument("backward: trace has no gold labels");
    }
    if (trace.labeler.size() != length || trace.probs.size() != length) {
        throw std::invalid_argument("backward: trace length mismatch");
    }
    if (trace.has_encoder != has_encoder(model.config.arch) ||
        (trace.has_encoder && trace.encoder.steps.size() != length)) {
        throw std::invalid_argument("backward: trace does not match the model architecture");
    }
    if (uses_label_feedback(model.config.arch) && trace.feedback.size() != length) {
        throw std::invalid_argument("backward: trace is missing label feedback");
    }

    ModelParams grads = model.zeros_like();
    std::vector<LayerState> carry = zero_state(model.config);
    for (std::size_t t = length; t-- > 0;) {
        const StackStep& step = trace.labeler[t];
        const Matrix* mask = trace.output_masks.empty() ? nullptr : &trace.output_masks[t];
        const Matrix h = mask ? hadamard(step.output, *mask) : step.output;
        Matrix dh = softmax_xent_backward(h, trace.probs[t], trace.gold[t] - 1, model.softmax,
                                          grads.softmax);
        if (mask) dh = hadamard(dh, *mask);
        const Matrix d_input = stack_step_backward(model.labeler, grads.labeler, step, dh, carry);
        scatter_labeler_input_gradient(model, trace, t, d_input, grads);
    }

    if (trace.has_encoder && !options.detach_encoder) {
        // `carry` now holds the gradient w.r.t. the encoder's final state.
        for (std::size_t s = length; s-- > 0;) {
            const StackStep& step = trace.encoder.steps[s];
            const Matrix zero(step.output.rows(), 1);
            const Matrix d_input = stack_step_backward(model.encoder, grads.encoder, step, zero,
                                                       carry);
            scatter_window_gradient(model, trace.tokens, length - 1 - s, d_input.values(),
                                    grads.embedding);
        }
    }
    return grads;
}

DecodeContext prepare_decoding(const ModelParams& model, std::span<const std::size_t> tokens) {
    check_tokens(model, tokens);
    DecodeContext context;
    if (uses_word_input(model.config.arch)) {
        context.windows = embed_window(tokens, model.embedding, model.config.context, kPadToken);
    }
    context.initial_state = has_encoder(model.config.arch) ? encode(model, tokens).final_state
                                                           : zero_state(model.config);
    return context;
}

std::vector<double> step_log_probs(const ModelParams& model, const DecodeContext& context,
                                   std::size_t t, std::size_t previous_label, StackState& state) {
    const Matrix h = stack_step(model.labeler, labeler_input(model, context.windows, t, previous_label),
                                state, ForwardOptions{}, nullptr);
    return softmax_log_probs(h, model.softmax);
}

}  // namespace slotfill
