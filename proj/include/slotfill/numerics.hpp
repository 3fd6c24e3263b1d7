#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace slotfill {

// Dense row-major matrix of doubles. Column vectors are (n x 1) matrices.
// A default-constructed matrix is empty (0 x 0) and marks an absent tensor.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix column(std::span<const double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void fill(double value);
    // Copy of column c as an (rows x 1) matrix.
    Matrix col(std::size_t c) const;
    bool all_finite() const;
    std::string shape_string() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix map_sigmoid(const Matrix& a);
Matrix map_tanh(const Matrix& a);
// Vertical concatenation of column vectors.
Matrix vconcat(std::span<const Matrix> parts);

double sigmoid(double x);

// out += a * x, where x is a column vector. No allocation.
void gemv_accumulate(const Matrix& a, std::span<const double> x, std::span<double> out);
// out += a^T * y.
void gemv_transposed_accumulate(const Matrix& a, std::span<const double> y,
                                std::span<double> out);
// a += y * x^T.
void outer_accumulate(Matrix& a, std::span<const double> y, std::span<const double> x);

// SplitMix64 (Steele, Lea, Flood 2014). State advances by the golden-ratio
// increment; output is the standard 64-bit finalizer. Fully specified integer
// arithmetic, so identical seeds give identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64();
    // Uniform in [0, 1) with 53 random mantissa bits.
    double next_double();
    // Uniform in [lo, hi).
    double uniform(double lo, double hi);
    // Uniform integer in [0, n), rejection-sampled so there is no modulo bias.
    std::uint64_t next_below(std::uint64_t n);

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

// Deterministic child seed for an independent stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

Matrix sample_uniform(Rng& rng, double lo, double hi, std::size_t rows, std::size_t cols);

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace slotfill
