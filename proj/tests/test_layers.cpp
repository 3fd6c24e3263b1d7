#include "doctest.h"
#include "oracles.hpp"
#include "slotfill/layers.hpp"

#include <cmath>
#include <stdexcept>

using namespace slotfill;
using testing::random_matrix;

namespace {

LstmCellParams random_cell(Rng& rng, std::size_t d_in, std::size_t d_h) {
    LstmCellParams p = LstmCellParams::zeros(d_in, d_h);
    for (Matrix* t : p.tensors()) *t = random_matrix(rng, t->rows(), t->cols());
    return p;
}

double dot(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TEST_CASE("glorot_init bounds, mean and determinism") {
    Rng rng(1);
    const Matrix small = glorot_init(3, 3, rng);
    CHECK(small.rows() == 3);
    for (double v : small.values()) CHECK((v >= -1.0 && v <= 1.0));

    const Matrix big = glorot_init(100, 200, rng);
    CHECK(big.rows() == 200);
    CHECK(big.cols() == 100);
    const double bound = std::sqrt(6.0 / 300.0);
    double mean = 0.0;
    for (double v : big.values()) {
        CHECK(std::abs(v) <= bound);
        mean += v;
    }
    CHECK(std::abs(mean / static_cast<double>(big.size())) < 0.01);

    Rng a(8), b(8);
    CHECK(glorot_init(4, 6, a) == glorot_init(4, 6, b));
    CHECK_THROWS_AS(glorot_init(0, 3, rng), std::invalid_argument);
}

TEST_CASE("embed_window lookup and boundary padding") {
    // Column j of E is filled with the value j so lookups are easy to read.
    Matrix embedding(2, 9);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 9; ++c) embedding(r, c) = static_cast<double>(c) + 0.1 * r;
    const std::vector<std::size_t> sentence{3, 7};

    const auto plain = embed_window(sentence, embedding, 0, 0);
    REQUIRE(plain.size() == 2);
    CHECK(plain[0] == embedding.col(3));
    CHECK(plain[1] == embedding.col(7));

    const auto windowed = embed_window(sentence, embedding, 1, 0);
    const Matrix expected0[] = {embedding.col(0), embedding.col(3), embedding.col(7)};
    const Matrix expected1[] = {embedding.col(3), embedding.col(7), embedding.col(0)};
    CHECK(windowed[0] == vconcat(expected0));
    CHECK(windowed[1] == vconcat(expected1));

    CHECK_THROWS_AS(embed_window(std::vector<std::size_t>{9}, embedding, 1, 0), std::out_of_range);
}

TEST_CASE("embed_window output length is d_e(2k+1) everywhere") {
    Rng rng(2);
    const Matrix embedding = random_matrix(rng, 5, 12);
    // "I need a ticket to Seattle"
    const std::vector<std::size_t> sentence{2, 3, 4, 5, 6, 7};
    for (std::size_t k = 0; k <= 3; ++k) {
        const auto out = embed_window(sentence, embedding, k, 0);
        CHECK(out.size() == 6);
        for (const Matrix& v : out) CHECK(v.rows() == 5 * (2 * k + 1));
    }
}

TEST_CASE("lstm_step_forward analytic cases") {
    const LstmCellParams zero = LstmCellParams::zeros(3, 2);
    const Matrix x{{0.3}, {-1.2}, {2.0}};
    auto out = lstm_step_forward(x, Matrix(2, 1), Matrix(2, 1), zero);
    CHECK(out.h == Matrix(2, 1));
    CHECK(out.c == Matrix(2, 1));

    out = lstm_step_forward(x, Matrix(2, 1), Matrix(2, 1, 1.0), zero);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(out.c[j] == doctest::Approx(0.5));
        CHECK(out.h[j] == doctest::Approx(0.231059).epsilon(1e-6));
        CHECK(out.h[j] == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-15));
    }
    CHECK_THROWS_AS(lstm_step_forward(Matrix(2, 1), Matrix(2, 1), Matrix(2, 1), zero),
                    std::invalid_argument);
}

TEST_CASE("lstm_step_forward matches a scalar re-derivation") {
    Rng rng(17);
    const LstmCellParams p = random_cell(rng, 3, 2);
    const Matrix x = random_matrix(rng, 3, 1);
    const Matrix h_prev = random_matrix(rng, 2, 1);
    const Matrix c_prev = random_matrix(rng, 2, 1);
    const auto out = lstm_step_forward(x, h_prev, c_prev, p);

    auto gate = [&](const Matrix& w, const Matrix& u, const Matrix& b, std::size_t j) {
        double z = b(j, 0);
        for (std::size_t k = 0; k < 3; ++k) z += w(j, k) * x(k, 0);
        for (std::size_t k = 0; k < 2; ++k) z += u(j, k) * h_prev(k, 0);
        return z;
    };
    for (std::size_t j = 0; j < 2; ++j) {
        const double i = 1.0 / (1.0 + std::exp(-gate(p.w_i, p.u_i, p.b_i, j)));
        const double f = 1.0 / (1.0 + std::exp(-gate(p.w_f, p.u_f, p.b_f, j)));
        const double o = 1.0 / (1.0 + std::exp(-gate(p.w_o, p.u_o, p.b_o, j)));
        const double g = std::tanh(gate(p.w_g, p.u_g, p.b_g, j));
        const double c = f * c_prev(j, 0) + i * g;
        CHECK(std::abs(out.c[j] - c) < 1e-12);
        CHECK(std::abs(out.h[j] - o * std::tanh(c)) < 1e-12);
        CHECK((out.cache.i[j] > 0.0 && out.cache.i[j] < 1.0));
        CHECK((out.cache.f[j] > 0.0 && out.cache.f[j] < 1.0));
        CHECK((out.cache.o[j] > 0.0 && out.cache.o[j] < 1.0));
        CHECK((out.cache.g[j] > -1.0 && out.cache.g[j] < 1.0));
    }
}

TEST_CASE("lstm_step_backward with zero upstream gradient") {
    Rng rng(4);
    const LstmCellParams p = random_cell(rng, 3, 2);
    const auto out = lstm_step_forward(random_matrix(rng, 3, 1), random_matrix(rng, 2, 1),
                                       random_matrix(rng, 2, 1), p);
    LstmCellParams grads = LstmCellParams::zeros(3, 2);
    const auto g = lstm_step_backward(out.cache, Matrix(2, 1), Matrix(2, 1), p, grads);
    CHECK(g.dx == Matrix(3, 1));
    CHECK(g.dh_prev == Matrix(2, 1));
    CHECK(g.dc_prev == Matrix(2, 1));
    for (const Matrix* t : grads.tensors()) CHECK(*t == Matrix(t->rows(), t->cols()));
    CHECK_THROWS_AS(lstm_step_backward(out.cache, Matrix(3, 1), Matrix(2, 1), p, grads),
                    std::invalid_argument);
}

TEST_CASE("lstm_step_backward matches finite differences on one step") {
    Rng rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        LstmCellParams p = random_cell(rng, 3, 2);
        Matrix x = random_matrix(rng, 3, 1);
        Matrix h_prev = random_matrix(rng, 2, 1);
        Matrix c_prev = random_matrix(rng, 2, 1);
        const Matrix a = random_matrix(rng, 2, 1);
        const Matrix b = random_matrix(rng, 2, 1);
        auto loss = [&] {
            const auto out = lstm_step_forward(x, h_prev, c_prev, p);
            return dot(a, out.h) + dot(b, out.c);
        };
        const auto out = lstm_step_forward(x, h_prev, c_prev, p);
        LstmCellParams grads = LstmCellParams::zeros(3, 2);
        const auto g = lstm_step_backward(out.cache, a, b, p, grads);

        std::vector<Matrix*> params{&x, &h_prev, &c_prev};
        std::vector<const Matrix*> analytic{&g.dx, &g.dh_prev, &g.dc_prev};
        std::vector<std::string> names{"x", "h_prev", "c_prev"};
        const auto pt = p.tensors();
        const auto gt = grads.tensors();
        for (std::size_t n = 0; n < pt.size(); ++n) {
            params.push_back(pt[n]);
            analytic.push_back(gt[n]);
            names.emplace_back(LstmCellParams::kTensorNames[n]);
        }
        const auto cmp = testing::compare_gradients(params, analytic, names, loss);
        INFO(cmp.worst);
        CHECK(cmp.max_relative_error < 1e-6);
    }
}

TEST_CASE("lstm_step_backward accumulates over two chained steps") {
    Rng rng(29);
    LstmCellParams p = random_cell(rng, 3, 2);
    Matrix x1 = random_matrix(rng, 3, 1);
    Matrix x2 = random_matrix(rng, 3, 1);
    const Matrix a = random_matrix(rng, 2, 1);
    auto loss = [&] {
        const auto s1 = lstm_step_forward(x1, Matrix(2, 1), Matrix(2, 1), p);
        const auto s2 = lstm_step_forward(x2, s1.h, s1.c, p);
        return dot(a, s2.h) + dot(a, s1.h);
    };
    const auto s1 = lstm_step_forward(x1, Matrix(2, 1), Matrix(2, 1), p);
    const auto s2 = lstm_step_forward(x2, s1.h, s1.c, p);
    LstmCellParams grads = LstmCellParams::zeros(3, 2);
    const auto g2 = lstm_step_backward(s2.cache, a, Matrix(2, 1), p, grads);
    const auto g1 = lstm_step_backward(s1.cache, add(a, g2.dh_prev), g2.dc_prev, p, grads);

    std::vector<Matrix*> params{&x1, &x2};
    std::vector<const Matrix*> analytic{&g1.dx, &g2.dx};
    std::vector<std::string> names{"x1", "x2"};
    const auto pt = p.tensors();
    const auto gt = grads.tensors();
    for (std::size_t n = 0; n < pt.size(); ++n) {
        params.push_back(pt[n]);
        analytic.push_back(gt[n]);
        names.emplace_back(LstmCellParams::kTensorNames[n]);
    }
    const auto cmp = testing::compare_gradients(params, analytic, names, loss);
    INFO(cmp.worst);
    CHECK(cmp.max_relative_error < 1e-5);
}

TEST_CASE("softmax_xent uniform case, normalization and errors") {
    const SoftmaxParams zero = SoftmaxParams::zeros(3, 4);
    const auto r = softmax_xent(Matrix{{0.2}, {-0.1}, {0.5}}, zero, 2);
    for (double p : r.probs.values()) CHECK(p == doctest::Approx(0.25));
    CHECK(r.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(r.loss == doctest::Approx(1.386294).epsilon(1e-6));
    CHECK_THROWS_AS(softmax_xent(Matrix(3, 1), zero, 4), std::out_of_range);

    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        SoftmaxParams p{random_matrix(rng, 5, 3, 10.0), random_matrix(rng, 5, 1, 10.0)};
        const Matrix probs = softmax_probs(random_matrix(rng, 3, 1, 10.0), p);
        double total = 0.0;
        for (double v : probs.values()) {
            CHECK(v >= 0.0);
            total += v;
        }
        CHECK(std::abs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("softmax_xent gradient matches finite differences") {
    Rng rng(37);
    SoftmaxParams p{random_matrix(rng, 4, 3), random_matrix(rng, 4, 1)};
    Matrix h = random_matrix(rng, 3, 1);
    const std::size_t gold = 2;
    const auto r = softmax_xent(h, p, gold);
    SoftmaxParams grads = SoftmaxParams::zeros(3, 4);
    const Matrix dh = softmax_xent_backward(h, r.probs, gold, p, grads);
    const auto cmp = testing::compare_gradients(
        {&h, &p.w, &p.b}, {&dh, &grads.w, &grads.b}, {"h", "W", "b"},
        [&] { return softmax_xent(h, p, gold).loss; });
    INFO(cmp.worst);
    CHECK(cmp.max_relative_error < 1e-6);

    // Log-probabilities agree with the probabilities.
    const auto log_probs = softmax_log_probs(h, p);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(std::exp(log_probs[i]) - r.probs[i]) < 1e-12);
}

TEST_CASE("dropout_mask") {
    Rng rng(41);
    CHECK(dropout_mask(10, 0.0, rng) == Matrix(10, 1, 1.0));

    const Matrix half = dropout_mask(10000, 0.5, rng);
    std::size_t zeros = 0;
    for (double m : half.values()) {
        CHECK((m == 0.0 || m == 2.0));
        zeros += m == 0.0 ? 1 : 0;
    }
    CHECK(std::abs(static_cast<double>(zeros) / 10000.0 - 0.5) < 0.02);

    for (double rate : {0.1, 0.3, 0.7}) {
        const Matrix m = dropout_mask(20000, rate, rng);
        double mean = 0.0;
        for (double v : m.values()) mean += v;
        CHECK(std::abs(mean / 20000.0 - 1.0) < 0.05);
    }
    CHECK_THROWS_AS(dropout_mask(3, 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(dropout_mask(3, -0.1, rng), std::invalid_argument);
}

TEST_CASE("LSTM initialization biases") {
    Rng rng(43);
    const LstmCellParams p = LstmCellParams::initialized(6, 4, rng);
    CHECK(p.b_f == Matrix(4, 1, 1.0));
    CHECK(p.b_i == Matrix(4, 1));
    CHECK(p.b_o == Matrix(4, 1));
    CHECK(p.b_g == Matrix(4, 1));
    CHECK_NOTHROW(p.validate());
}
