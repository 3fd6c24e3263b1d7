#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "slotfill/numerics.hpp"

namespace slotfill {

// Peephole-free LSTM cell. W_* map the input (d_h x d_in), U_* the previous
// hidden state (d_h x d_h), b_* are (d_h x 1) biases.
struct LstmCellParams {
    Matrix w_i, w_f, w_o, w_g;
    Matrix u_i, u_f, u_o, u_g;
    Matrix b_i, b_f, b_o, b_g;

    static constexpr std::array<std::string_view, 12> kTensorNames = {
        "W_i", "W_f", "W_o", "W_g", "U_i", "U_f", "U_o", "U_g", "b_i", "b_f", "b_o", "b_g"};

    static LstmCellParams zeros(std::size_t input_dim, std::size_t hidden_dim);
    // Glorot-uniform weights, forget-gate bias +1, other biases 0.
    static LstmCellParams initialized(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

    std::size_t input_dim() const { return w_i.cols(); }
    std::size_t hidden_dim() const { return w_i.rows(); }

    std::array<Matrix*, 12> tensors();
    std::array<const Matrix*, 12> tensors() const;
    // Throws unless all twelve tensors agree with (input_dim, hidden_dim).
    void validate() const;
};

struct LstmStepCache {
    Matrix x, h_prev, c_prev;
    Matrix i, f, o, g;  // gate activations
    Matrix c, tanh_c;
};

struct LstmStepOutput {
    Matrix h;
    Matrix c;
    LstmStepCache cache;
};

struct LstmStepGradients {
    Matrix dx;
    Matrix dh_prev;
    Matrix dc_prev;
};

LstmStepOutput lstm_step_forward(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                                 const LstmCellParams& p);

// Backpropagates (dh, dc) through one step. Parameter gradients are added
// into `grads`, so calling this over every timestep yields BPTT totals.
LstmStepGradients lstm_step_backward(const LstmStepCache& cache, const Matrix& dh,
                                     const Matrix& dc, const LstmCellParams& p,
                                     LstmCellParams& grads);

struct SoftmaxParams {
    Matrix w;  // (L x d_h)
    Matrix b;  // (L x 1)

    static SoftmaxParams zeros(std::size_t hidden_dim, std::size_t num_labels);
    static SoftmaxParams initialized(std::size_t hidden_dim, std::size_t num_labels, Rng& rng);
    std::size_t num_labels() const { return w.rows(); }
};

struct SoftmaxXent {
    Matrix probs;
    double loss = 0.0;
};

Matrix softmax_probs(const Matrix& h, const SoftmaxParams& p);
// Natural-log posteriors, computed with log-sum-exp.
std::vector<double> softmax_log_probs(const Matrix& h, const SoftmaxParams& p);
// `gold` is a class index in [0, L).
SoftmaxXent softmax_xent(const Matrix& h, const SoftmaxParams& p, std::size_t gold);
// Gradient of -log probs[gold] w.r.t. h; parameter gradients added into `grads`.
Matrix softmax_xent_backward(const Matrix& h, const Matrix& probs, std::size_t gold,
                             const SoftmaxParams& p, SoftmaxParams& grads);

// (fan_out x fan_in), uniform in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Inverted dropout: each coordinate is 0 with probability `rate`, else 1/(1-rate).
Matrix dropout_mask(std::size_t dim, double rate, Rng& rng);

// Vocabulary positions feeding the window around position t; out-of-range
// neighbours are replaced by `pad_index`.
std::vector<std::size_t> window_indices(std::span<const std::size_t> tokens, std::size_t t,
                                        std::size_t k, std::size_t pad_index);

// One (d_e * (2k+1) x 1) vector per position: the embeddings of tokens
// t-k .. t+k stacked top to bottom. `embedding` is (d_e x V).
std::vector<Matrix> embed_window(std::span<const std::size_t> tokens, const Matrix& embedding,
                                 std::size_t k, std::size_t pad_index);

}  // namespace slotfill
