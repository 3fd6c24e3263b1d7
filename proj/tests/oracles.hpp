#pragma once

// Independent reference computations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "slotfill/architectures.hpp"
#include "slotfill/corpus.hpp"
#include "slotfill/numerics.hpp"

namespace slotfill::testing {

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    return sample_uniform(rng, -scale, scale, rows, cols);
}

// Every tensor filled uniformly in [-scale, scale], biases included.
inline ModelParams random_model(const ModelConfig& config, Rng& rng, double scale = 0.5) {
    ModelParams model = ModelParams::zeros(config);
    for (auto& t : model.tensors()) {
        for (double& x : t.tensor->values()) x = rng.uniform(-scale, scale);
    }
    return model;
}

inline std::vector<std::size_t> random_ids(Rng& rng, std::size_t n, std::size_t lo,
                                           std::size_t hi_exclusive) {
    std::vector<std::size_t> out(n);
    for (auto& x : out) x = lo + rng.next_below(hi_exclusive - lo);
    return out;
}

struct GradientComparison {
    double max_relative_error = 0.0;
    std::string worst;  // "tensor[index]"
    std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, floor). Central differences with h = 1e-5 carry
// about 1e-11 of absolute roundoff, so entries below the floor (including
// exact zeros) are judged against the floor instead of their own magnitude.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) /
           std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences of `loss` w.r.t. every coordinate of every tensor,
// compared with the analytic gradient tensors in the same order.
inline GradientComparison compare_gradients(std::vector<Matrix*> params,
                                            const std::vector<const Matrix*>& analytic,
                                            const std::vector<std::string>& names,
                                            const std::function<double()>& loss,
                                            double step = 1e-5) {
    GradientComparison result;
    for (std::size_t n = 0; n < params.size(); ++n) {
        Matrix& p = *params[n];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p[i];
            p[i] = saved + step;
            const double up = loss();
            p[i] = saved - step;
            const double down = loss();
            p[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double err = relative_error((*analytic[n])[i], numeric);
            ++result.checked;
            if (err > result.max_relative_error) {
                result.max_relative_error = err;
                char detail[128];
                std::snprintf(detail, sizeof(detail), "] analytic %.6e numeric %.6e", (*analytic[n])[i],
                              numeric);
                result.worst = names[n] + "[" + std::to_string(i) + detail;
            }
        }
    }
    return result;
}

// Full-model finite-difference check of backward() on one sentence.
inline GradientComparison check_model_gradients(ModelParams model,
                                                const std::vector<std::size_t>& tokens,
                                                const std::vector<std::size_t>& labels) {
    const ForwardTrace trace = forward(model, tokens, labels, {Mode::kTrain, 0.0, nullptr});
    const ModelParams grads = backward(model, trace);
    std::vector<Matrix*> params;
    std::vector<const Matrix*> analytic;
    std::vector<std::string> names;
    for (const auto& t : model.tensors()) {
        params.push_back(t.tensor);
        names.push_back(t.name);
    }
    for (const auto& t : grads.tensors()) analytic.push_back(t.tensor);
    return compare_gradients(params, analytic, names,
                             [&] { return forward(model, tokens, labels).nll; });
}

// Brute-force segment matcher: reads spans straight off the IOB strings with
// an explicit state machine and counts matches with a quadratic scan.
struct BruteSpan {
    std::string type;
    std::size_t start, end;
};

inline std::vector<BruteSpan> brute_spans(const std::vector<std::string>& labels) {
    std::vector<BruteSpan> spans;
    std::string current;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        const std::string& l = labels[t];
        if (l == "O") {
            current.clear();
            continue;
        }
        const char prefix = l[0];
        const std::string type = l.substr(2);
        if (prefix == 'I' && current == type) {
            spans.back().end = t;
        } else {
            spans.push_back({type, t, t});
            current = type;
        }
    }
    return spans;
}

struct BruteCounts {
    std::size_t gold = 0, predicted = 0, correct = 0;
};

inline BruteCounts brute_match(const std::vector<std::vector<std::string>>& gold,
                               const std::vector<std::vector<std::string>>& pred) {
    BruteCounts c;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        const auto g = brute_spans(gold[s]);
        const auto p = brute_spans(pred[s]);
        c.gold += g.size();
        c.predicted += p.size();
        for (const auto& ps : p) {
            for (const auto& gs : g) {
                if (ps.type == gs.type && ps.start == gs.start && ps.end == gs.end) {
                    ++c.correct;
                    break;
                }
            }
        }
    }
    return c;
}

inline std::vector<std::string> random_iob(Rng& rng, std::size_t length,
                                           const std::vector<std::string>& types) {
    std::vector<std::string> out;
    for (std::size_t t = 0; t < length; ++t) {
        const auto r = rng.next_below(3);
        if (r == 0) {
            out.push_back("O");
        } else {
            const std::string& type = types[rng.next_below(types.size())];
            out.push_back((r == 1 ? "B-" : "I-") + type);
        }
    }
    return out;
}

// Counts positions after each sentence's first error by direct iteration.
inline std::pair<std::size_t, std::size_t> brute_after_first_error(
    const std::vector<std::vector<std::size_t>>& gold,
    const std::vector<std::vector<std::size_t>>& pred) {
    std::size_t positions = 0, correct = 0;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        bool seen_error = false;
        for (std::size_t t = 0; t < gold[s].size(); ++t) {
            if (seen_error) {
                ++positions;
                correct += gold[s][t] == pred[s][t] ? 1 : 0;
            } else if (gold[s][t] != pred[s][t]) {
                seen_error = true;
            }
        }
    }
    return {positions, correct};
}

inline ModelConfig tiny_config(Architecture arch, std::size_t depth = 1) {
    ModelConfig c;
    c.arch = arch;
    c.vocab_size = 7;
    c.num_labels = 4;
    c.embedding_dim = 4;
    c.hidden_dims.assign(depth, 5);
    c.context = 1;
    c.label_embedding_dim = 4;
    return c;
}

inline constexpr Architecture kAllArchitectures[] = {
    Architecture::kLabelerW, Architecture::kLabelerWL, Architecture::kEncoderDecoder,
    Architecture::kEncoderLabelerW, Architecture::kEncoderLabelerWL};

}  // namespace slotfill::testing
