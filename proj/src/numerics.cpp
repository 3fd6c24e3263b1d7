#include "slotfill/numerics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace slotfill {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() +
                                    " vs " + b.shape_string());
    }
}

template <typename F>
Matrix map(const Matrix& a, F f) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, const char* op, F f) {
    require_same_shape(a, b, op);
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if ((rows == 0) != (cols == 0)) {
        throw std::invalid_argument("Matrix: one dimension is zero");
    }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw std::invalid_argument("Matrix: data length " + std::to_string(data_.size()) +
                                    " does not match " + shape_string());
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
        if (row.size() != cols_) throw std::invalid_argument("Matrix: ragged initializer");
        data_.insert(data_.end(), row.begin(), row.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::column(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double value) {
    for (double& x : data_) x = value;
}

Matrix Matrix::col(std::size_t c) const {
    if (c >= cols_) throw std::out_of_range("Matrix::col: column " + std::to_string(c));
    Matrix out(rows_, 1);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

bool Matrix::all_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string Matrix::shape_string() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ " + a.shape_string() +
                                    " x " + b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    // i-k-j order keeps the inner loop contiguous in both b and out.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* out_row = out.data() + i * out.cols();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            const double* b_row = b.data() + k * b.cols();
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Matrix sub(const Matrix& a, const Matrix& b) {
    return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Matrix scale(const Matrix& a, double s) {
    return map(a, [s](double x) { return x * s; });
}

double sigmoid(double x) {
    // Split by sign so exp never overflows.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix map_sigmoid(const Matrix& a) { return map(a, sigmoid); }

Matrix map_tanh(const Matrix& a) {
    return map(a, [](double x) { return std::tanh(x); });
}

Matrix vconcat(std::span<const Matrix> parts) {
    std::size_t n = 0;
    for (const Matrix& p : parts) {
        if (p.cols() != 1) throw std::invalid_argument("vconcat: expects column vectors");
        n += p.rows();
    }
    std::vector<double> data;
    data.reserve(n);
    for (const Matrix& p : parts) data.insert(data.end(), p.values().begin(), p.values().end());
    return Matrix(n, 1, std::move(data));
}

void gemv_accumulate(const Matrix& a, std::span<const double> x, std::span<double> out) {
    if (x.size() != a.cols() || out.size() != a.rows()) {
        throw std::invalid_argument("gemv: " + a.shape_string() + " applied to vector of " +
                                    std::to_string(x.size()));
    }
    const std::size_t cols = a.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* row = a.data() + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        out[r] += acc;
    }
}

void gemv_transposed_accumulate(const Matrix& a, std::span<const double> y,
                                std::span<double> out) {
    if (y.size() != a.rows() || out.size() != a.cols()) {
        throw std::invalid_argument("gemv^T: " + a.shape_string() + " applied to vector of " +
                                    std::to_string(y.size()));
    }
    const std::size_t cols = a.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* row = a.data() + r * cols;
        const double yr = y[r];
        if (yr == 0.0) continue;
        for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * yr;
    }
}

void outer_accumulate(Matrix& a, std::span<const double> y, std::span<const double> x) {
    if (y.size() != a.rows() || x.size() != a.cols()) {
        throw std::invalid_argument("outer: target " + a.shape_string() + " vs " +
                                    std::to_string(y.size()) + "x" + std::to_string(x.size()));
    }
    const std::size_t cols = a.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double yr = y[r];
        if (yr == 0.0) continue;
        double* row = a.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) row[c] += yr * x[c];
    }
}

std::uint64_t Rng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    if (!(lo < hi)) {
        throw std::invalid_argument("Rng::uniform: lo must be < hi");
    }
    const double x = lo + (hi - lo) * next_double();
    // Rounding in lo + span * u can land exactly on hi.
    return x < hi ? x : std::nextafter(hi, lo);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::next_below: n must be positive");
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    Rng mixer(seed ^ (stream * 0xD1B54A32D192ED03ULL));
    mixer.next_u64();
    return mixer.next_u64();
}

Matrix sample_uniform(Rng& rng, double lo, double hi, std::size_t rows, std::size_t cols) {
    if (!(lo < hi)) {
        throw std::invalid_argument("sample_uniform: lo must be < hi");
    }
    Matrix out(rows, cols);
    for (double& x : out.values()) x = rng.uniform(lo, hi);
    return out;
}

}  // namespace slotfill
