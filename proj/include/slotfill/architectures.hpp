#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slotfill/layers.hpp"
#include "slotfill/numerics.hpp"

namespace slotfill {

enum class Architecture {
    kLabelerW,          // words -> labeler
    kLabelerWL,         // words + previous label -> labeler
    kEncoderDecoder,    // backward encoder, decoder fed previous labels only
    kEncoderLabelerW,   // backward encoder state initializes a word labeler
    kEncoderLabelerWL,  // same, labeler also fed the previous label
};

std::string_view architecture_name(Architecture arch);
// Accepts the CLI names: labeler-w, labeler-wl, enc-dec, enc-labeler-w, enc-labeler-wl.
Architecture parse_architecture(std::string_view name);

bool has_encoder(Architecture arch);
bool uses_label_feedback(Architecture arch);
bool uses_word_input(Architecture arch);

// Label ids: 0 is the beginning symbol <B>, real slot labels are 1..L and map
// to softmax class id-1. Token ids index columns of the embedding; 0 is PAD.
inline constexpr std::size_t kBeginLabel = 0;
inline constexpr std::size_t kPadToken = 0;

struct ModelConfig {
    Architecture arch = Architecture::kLabelerW;
    std::size_t vocab_size = 0;   // V, including reserved entries
    std::size_t num_labels = 0;   // L, excluding <B>
    std::size_t embedding_dim = 0;
    std::vector<std::size_t> hidden_dims;  // one per layer; size() is the depth
    std::size_t context = 0;               // k
    std::size_t label_embedding_dim = 0;   // ignored by feedback-free tags

    std::size_t depth() const { return hidden_dims.size(); }
    std::size_t window_dim() const { return embedding_dim * (2 * context + 1); }
    std::size_t labeler_input_dim() const;
    void validate() const;
};

struct LayerState {
    Matrix h;
    Matrix c;
};
using StackState = std::vector<LayerState>;

StackState zero_state(const ModelConfig& config);

struct ModelParams {
    ModelConfig config;
    Matrix embedding;        // (d_e x V); shared by encoder and labeler
    Matrix label_embedding;  // (d_l x (L+1)); column 0 is <B>; empty for W tags
    std::vector<LstmCellParams> encoder;  // empty for encoder-less tags
    std::vector<LstmCellParams> labeler;  // labeler (or decoder) stack
    SoftmaxParams softmax;

    static ModelParams zeros(const ModelConfig& config);
    static ModelParams initialized(const ModelConfig& config, Rng& rng);
    ModelParams zeros_like() const { return zeros(config); }

    struct NamedTensor {
        std::string name;
        Matrix* tensor;
    };
    struct ConstNamedTensor {
        std::string name;
        const Matrix* tensor;
    };
    // Canonical order; shared by the optimizer, serialization and gradient checks.
    std::vector<NamedTensor> tensors();
    std::vector<ConstNamedTensor> tensors() const;
    std::size_t parameter_count() const;
    void validate() const;
};

enum class Mode { kTrain, kInfer };

struct ForwardOptions {
    Mode mode = Mode::kInfer;
    double dropout = 0.0;  // only used in train mode
    Rng* rng = nullptr;    // required when training with dropout > 0
};

// Per-timestep record of one pass through an LSTM stack.
struct StackStep {
    std::vector<LstmStepCache> caches;  // one per layer
    std::vector<Matrix> input_masks;    // dropout masks on each layer's input; empty if none
    Matrix output;                      // top-layer h before output dropout
};

struct EncoderResult {
    StackState final_state;
    std::vector<StackStep> steps;  // processing order, i.e. positions T-1 .. 0
};

struct ForwardTrace {
    std::vector<std::size_t> tokens;
    std::vector<std::size_t> gold;      // label ids; empty when unknown
    std::vector<std::size_t> feedback;  // label id fed at each step; empty for W tags
    std::vector<std::size_t> predicted; // argmax label id per step
    bool has_encoder = false;
    EncoderResult encoder;
    std::vector<StackStep> labeler;
    std::vector<Matrix> output_masks;   // dropout on h before softmax; empty if none
    std::vector<Matrix> probs;          // per-step posteriors over L classes
    double nll = 0.0;
    Mode mode = Mode::kInfer;
};

// Runs the encoder stack over the context-windowed inputs in reverse order.
EncoderResult encode(const ModelParams& model, std::span<const std::size_t> tokens,
                     const ForwardOptions& options = {});

// Labeler pass for the four labeler tags. `labels` are gold label ids: when
// given they are used for teacher forcing and the NLL; when empty (infer
// mode only) label-fed tags consume their own argmax predictions.
// `init_state` is required for encoder-labeler tags and forbidden otherwise.
ForwardTrace forward_labeler(const ModelParams& model, std::span<const std::size_t> tokens,
                             std::span<const std::size_t> labels,
                             const std::optional<StackState>& init_state,
                             const ForwardOptions& options = {});

// Encoder-decoder pass: decoder sees only previous-label embeddings, emits T labels.
ForwardTrace forward_encoder_decoder(const ModelParams& model,
                                     std::span<const std::size_t> tokens,
                                     std::span<const std::size_t> labels,
                                     const ForwardOptions& options = {});

// Full forward for any tag, including the encoder hand-off.
ForwardTrace forward(const ModelParams& model, std::span<const std::size_t> tokens,
                     std::span<const std::size_t> labels, const ForwardOptions& options = {});

struct BackwardOptions {
    // Drop the gradient flowing from the labeler's initial state into the encoder.
    bool detach_encoder = false;
};

// Exact gradients of trace.nll with respect to every parameter.
ModelParams backward(const ModelParams& model, const ForwardTrace& trace,
                     const BackwardOptions& options = {});

// Incremental inference used by the decoders.
struct DecodeContext {
    std::vector<Matrix> windows;
    StackState initial_state;
};

DecodeContext prepare_decoding(const ModelParams& model, std::span<const std::size_t> tokens);

// Advances `state` by position t given the previously emitted label id and
// returns log-posteriors over the L classes.
std::vector<double> step_log_probs(const ModelParams& model, const DecodeContext& context,
                                   std::size_t t, std::size_t previous_label, StackState& state);

}  // namespace slotfill
