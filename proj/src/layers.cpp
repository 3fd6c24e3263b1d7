#include "slotfill/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace slotfill {

namespace {

void require_column(const Matrix& v, std::size_t n, const char* what) {
    if (v.rows() != n || v.cols() != 1) {
        throw std::invalid_argument(std::string(what) + ": expected (" + std::to_string(n) +
                                    "x1), got " + v.shape_string());
    }
}

}  // namespace

LstmCellParams LstmCellParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
    if (input_dim == 0 || hidden_dim == 0) {
        throw std::invalid_argument("LstmCellParams: dimensions must be positive");
    }
    LstmCellParams p;
    for (Matrix* w : {&p.w_i, &p.w_f, &p.w_o, &p.w_g}) *w = Matrix(hidden_dim, input_dim);
    for (Matrix* u : {&p.u_i, &p.u_f, &p.u_o, &p.u_g}) *u = Matrix(hidden_dim, hidden_dim);
    for (Matrix* b : {&p.b_i, &p.b_f, &p.b_o, &p.b_g}) *b = Matrix(hidden_dim, 1);
    return p;
}

LstmCellParams LstmCellParams::initialized(std::size_t input_dim, std::size_t hidden_dim,
                                           Rng& rng) {
    LstmCellParams p = zeros(input_dim, hidden_dim);
    for (Matrix* w : {&p.w_i, &p.w_f, &p.w_o, &p.w_g}) *w = glorot_init(input_dim, hidden_dim, rng);
    for (Matrix* u : {&p.u_i, &p.u_f, &p.u_o, &p.u_g}) *u = glorot_init(hidden_dim, hidden_dim, rng);
    p.b_f.fill(1.0);
    return p;
}

std::array<Matrix*, 12> LstmCellParams::tensors() {
    return {&w_i, &w_f, &w_o, &w_g, &u_i, &u_f, &u_o, &u_g, &b_i, &b_f, &b_o, &b_g};
}

std::array<const Matrix*, 12> LstmCellParams::tensors() const {
    return {&w_i, &w_f, &w_o, &w_g, &u_i, &u_f, &u_o, &u_g, &b_i, &b_f, &b_o, &b_g};
}

void LstmCellParams::validate() const {
    const std::size_t d_in = input_dim();
    const std::size_t d_h = hidden_dim();
    if (d_in == 0 || d_h == 0) throw std::invalid_argument("LstmCellParams: empty cell");
    const auto t = tensors();
    for (std::size_t n = 0; n < t.size(); ++n) {
        const std::size_t cols = n < 4 ? d_in : (n < 8 ? d_h : 1);
        if (t[n]->rows() != d_h || t[n]->cols() != cols) {
            throw std::invalid_argument("LstmCellParams: " + std::string(kTensorNames[n]) +
                                        " has shape " + t[n]->shape_string());
        }
    }
}

LstmStepOutput lstm_step_forward(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                                 const LstmCellParams& p) {
    const std::size_t d_h = p.hidden_dim();
    require_column(x, p.input_dim(), "lstm_step_forward x");
    require_column(h_prev, d_h, "lstm_step_forward h_prev");
    require_column(c_prev, d_h, "lstm_step_forward c_prev");

    auto preactivation = [&](const Matrix& w, const Matrix& u, const Matrix& b) {
        Matrix z = b;
        gemv_accumulate(w, x.values(), z.values());
        gemv_accumulate(u, h_prev.values(), z.values());
        return z;
    };

    LstmStepOutput out;
    LstmStepCache& cache = out.cache;
    cache.x = x;
    cache.h_prev = h_prev;
    cache.c_prev = c_prev;
    cache.i = map_sigmoid(preactivation(p.w_i, p.u_i, p.b_i));
    cache.f = map_sigmoid(preactivation(p.w_f, p.u_f, p.b_f));
    cache.o = map_sigmoid(preactivation(p.w_o, p.u_o, p.b_o));
    cache.g = map_tanh(preactivation(p.w_g, p.u_g, p.b_g));

    out.c = Matrix(d_h, 1);
    out.h = Matrix(d_h, 1);
    cache.tanh_c = Matrix(d_h, 1);
    for (std::size_t j = 0; j < d_h; ++j) {
        out.c[j] = cache.f[j] * c_prev[j] + cache.i[j] * cache.g[j];
        cache.tanh_c[j] = std::tanh(out.c[j]);
        out.h[j] = cache.o[j] * cache.tanh_c[j];
    }
    cache.c = out.c;
    return out;
}

LstmStepGradients lstm_step_backward(const LstmStepCache& cache, const Matrix& dh,
                                     const Matrix& dc, const LstmCellParams& p,
                                     LstmCellParams& grads) {
    const std::size_t d_h = p.hidden_dim();
    require_column(dh, d_h, "lstm_step_backward dh");
    require_column(dc, d_h, "lstm_step_backward dc");
    require_column(cache.x, p.input_dim(), "lstm_step_backward cache.x");
    require_column(cache.i, d_h, "lstm_step_backward cache");
    if (!grads.w_i.same_shape(p.w_i) || !grads.u_i.same_shape(p.u_i)) {
        throw std::invalid_argument("lstm_step_backward: gradient buffers do not match cell");
    }

    // Gradients w.r.t. gate pre-activations.
    Matrix dz_i(d_h, 1), dz_f(d_h, 1), dz_o(d_h, 1), dz_g(d_h, 1);
    LstmStepGradients out;
    out.dc_prev = Matrix(d_h, 1);
    for (std::size_t j = 0; j < d_h; ++j) {
        const double i = cache.i[j], f = cache.f[j], o = cache.o[j], g = cache.g[j];
        const double tc = cache.tanh_c[j];
        const double dc_total = dc[j] + dh[j] * o * (1.0 - tc * tc);
        dz_o[j] = dh[j] * tc * o * (1.0 - o);
        dz_i[j] = dc_total * g * i * (1.0 - i);
        dz_f[j] = dc_total * cache.c_prev[j] * f * (1.0 - f);
        dz_g[j] = dc_total * i * (1.0 - g * g);
        out.dc_prev[j] = dc_total * f;
    }

    out.dx = Matrix(p.input_dim(), 1);
    out.dh_prev = Matrix(d_h, 1);
    auto accumulate = [&](const Matrix& dz, const Matrix& w, const Matrix& u, Matrix& gw,
                          Matrix& gu, Matrix& gb) {
        outer_accumulate(gw, dz.values(), cache.x.values());
        outer_accumulate(gu, dz.values(), cache.h_prev.values());
        for (std::size_t j = 0; j < d_h; ++j) gb[j] += dz[j];
        gemv_transposed_accumulate(w, dz.values(), out.dx.values());
        gemv_transposed_accumulate(u, dz.values(), out.dh_prev.values());
    };
    accumulate(dz_i, p.w_i, p.u_i, grads.w_i, grads.u_i, grads.b_i);
    accumulate(dz_f, p.w_f, p.u_f, grads.w_f, grads.u_f, grads.b_f);
    accumulate(dz_o, p.w_o, p.u_o, grads.w_o, grads.u_o, grads.b_o);
    accumulate(dz_g, p.w_g, p.u_g, grads.w_g, grads.u_g, grads.b_g);
    return out;
}

SoftmaxParams SoftmaxParams::zeros(std::size_t hidden_dim, std::size_t num_labels) {
    if (hidden_dim == 0 || num_labels == 0) {
        throw std::invalid_argument("SoftmaxParams: dimensions must be positive");
    }
    return SoftmaxParams{Matrix(num_labels, hidden_dim), Matrix(num_labels, 1)};
}

SoftmaxParams SoftmaxParams::initialized(std::size_t hidden_dim, std::size_t num_labels,
                                         Rng& rng) {
    SoftmaxParams p = zeros(hidden_dim, num_labels);
    p.w = glorot_init(hidden_dim, num_labels, rng);
    return p;
}

namespace {

Matrix logits(const Matrix& h, const SoftmaxParams& p) {
    require_column(h, p.w.cols(), "softmax h");
    Matrix z = p.b;
    gemv_accumulate(p.w, h.values(), z.values());
    return z;
}

}  // namespace

Matrix softmax_probs(const Matrix& h, const SoftmaxParams& p) {
    Matrix z = logits(h, p);
    const double zmax = *std::max_element(z.values().begin(), z.values().end());
    double total = 0.0;
    for (double& v : z.values()) {
        v = std::exp(v - zmax);
        total += v;
    }
    for (double& v : z.values()) v /= total;
    return z;
}

std::vector<double> softmax_log_probs(const Matrix& h, const SoftmaxParams& p) {
    Matrix z = logits(h, p);
    const double zmax = *std::max_element(z.values().begin(), z.values().end());
    double total = 0.0;
    for (double v : z.values()) total += std::exp(v - zmax);
    const double log_norm = zmax + std::log(total);
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - log_norm;
    return out;
}

SoftmaxXent softmax_xent(const Matrix& h, const SoftmaxParams& p, std::size_t gold) {
    if (gold >= p.num_labels()) {
        throw std::out_of_range("softmax_xent: gold label " + std::to_string(gold) +
                                " outside [0, " + std::to_string(p.num_labels()) + ")");
    }
    SoftmaxXent out;
    out.probs = softmax_probs(h, p);
    out.loss = -std::log(out.probs[gold]);
    return out;
}

Matrix softmax_xent_backward(const Matrix& h, const Matrix& probs, std::size_t gold,
                             const SoftmaxParams& p, SoftmaxParams& grads) {
    if (gold >= p.num_labels()) throw std::out_of_range("softmax_xent_backward: gold label");
    require_column(probs, p.num_labels(), "softmax_xent_backward probs");
    require_column(h, p.w.cols(), "softmax_xent_backward h");
    Matrix dz = probs;
    dz[gold] -= 1.0;
    outer_accumulate(grads.w, dz.values(), h.values());
    for (std::size_t j = 0; j < dz.size(); ++j) grads.b[j] += dz[j];
    Matrix dh(h.rows(), 1);
    gemv_transposed_accumulate(p.w, dz.values(), dh.values());
    return dh;
}

Matrix glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    if (fan_in == 0 || fan_out == 0) {
        throw std::invalid_argument("glorot_init: fan_in and fan_out must be >= 1");
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return sample_uniform(rng, -bound, bound, fan_out, fan_in);
}

Matrix dropout_mask(std::size_t dim, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw std::invalid_argument("dropout_mask: rate must lie in [0, 1)");
    }
    Matrix mask(dim, 1, 1.0);
    if (rate == 0.0) return mask;
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& m : mask.values()) m = rng.next_double() < rate ? 0.0 : keep_scale;
    return mask;
}

std::vector<std::size_t> window_indices(std::span<const std::size_t> tokens, std::size_t t,
                                        std::size_t k, std::size_t pad_index) {
    std::vector<std::size_t> out;
    out.reserve(2 * k + 1);
    const auto pos = static_cast<std::ptrdiff_t>(t);
    const auto half = static_cast<std::ptrdiff_t>(k);
    const auto len = static_cast<std::ptrdiff_t>(tokens.size());
    for (std::ptrdiff_t j = pos - half; j <= pos + half; ++j) {
        out.push_back(j < 0 || j >= len ? pad_index : tokens[static_cast<std::size_t>(j)]);
    }
    return out;
}

std::vector<Matrix> embed_window(std::span<const std::size_t> tokens, const Matrix& embedding,
                                 std::size_t k, std::size_t pad_index) {
    const std::size_t vocab = embedding.cols();
    const std::size_t d_e = embedding.rows();
    if (pad_index >= vocab) throw std::out_of_range("embed_window: pad index outside vocabulary");
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (tokens[t] >= vocab) {
            throw std::out_of_range("embed_window: token " + std::to_string(tokens[t]) +
                                    " at position " + std::to_string(t) +
                                    " outside vocabulary of " + std::to_string(vocab));
        }
    }
    std::vector<Matrix> out;
    out.reserve(tokens.size());
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        Matrix v(d_e * (2 * k + 1), 1);
        std::size_t offset = 0;
        for (std::size_t index : window_indices(tokens, t, k, pad_index)) {
            for (std::size_t r = 0; r < d_e; ++r) v[offset + r] = embedding(r, index);
            offset += d_e;
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace slotfill
