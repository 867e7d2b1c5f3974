#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace deepen {

/// Dense row-major matrix of doubles. The only numeric container in the
/// library; column vectors are n x 1 matrices.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, data[i*cols + j]

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static Matrix identity(std::size_t n);

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const double& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
    bool all_finite() const;

    std::string shape_str() const;
};

bool operator==(const Matrix& a, const Matrix& b);

/// Standard matrix product. Throws std::invalid_argument with a shape report
/// when a.cols != b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

/// y += alpha * x (shapes must match).
void add_scaled(Matrix& y, const Matrix& x, double alpha);

/// Elementwise max(0, x).
Matrix relu(const Matrix& x);

/// Elementwise indicator x > 0. The derivative at exactly 0 is 0.
Matrix relu_prime(const Matrix& x);

/// Elementwise hyperbolic tangent and its derivative 1 - tanh(x)^2.
Matrix tanh_elem(const Matrix& x);
Matrix tanh_prime(const Matrix& x);

struct LossGrad {
    double loss = 0.0;
    Matrix grad;  // dloss/dlogits, same shape as logits
};

/// Softmax cross entropy of a logit column vector against a one-hot label.
/// The softmax is max-shifted; loss = -log softmax(logits)[label],
/// grad = softmax(logits) - label. Throws if the label is not one-hot.
LossGrad softmax_cross_entropy(const Matrix& logits, const Matrix& onehot_label);

}  // namespace deepen
