#include "deepen/matrix.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace deepen {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Matrix::shape_str() const {
    std::ostringstream os;
    os << rows << "x" << cols;
    return os.str();
}

bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: shape mismatch " + a.shape_str() + " * " +
                                    b.shape_str());
    }
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        double* orow = out.data.data() + i * b.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
    return out;
}

void add_scaled(Matrix& y, const Matrix& x, double alpha) {
    if (!y.same_shape(x)) {
        throw std::invalid_argument("add_scaled: shape mismatch " + y.shape_str() + " vs " +
                                    x.shape_str());
    }
    for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] += alpha * x.data[i];
}

Matrix relu(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.data) {
        if (v < 0.0) v = 0.0;
    }
    return out;
}

Matrix relu_prime(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = x.data[i] > 0.0 ? 1.0 : 0.0;
    return out;
}

Matrix tanh_elem(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.data) v = std::tanh(v);
    return out;
}

Matrix tanh_prime(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.data) {
        const double t = std::tanh(v);
        v = 1.0 - t * t;
    }
    return out;
}

LossGrad softmax_cross_entropy(const Matrix& logits, const Matrix& onehot_label) {
    if (logits.cols != 1 || !logits.same_shape(onehot_label)) {
        throw std::invalid_argument("softmax_cross_entropy: logits " + logits.shape_str() +
                                    " vs label " + onehot_label.shape_str() +
                                    "; both must be equal-length column vectors");
    }
    std::size_t hot = onehot_label.rows;
    for (std::size_t i = 0; i < onehot_label.rows; ++i) {
        const double v = onehot_label(i, 0);
        if (v == 1.0 && hot == onehot_label.rows) {
            hot = i;
        } else if (v != 0.0) {
            throw std::invalid_argument("softmax_cross_entropy: label is not one-hot");
        }
    }
    if (hot == onehot_label.rows) {
        throw std::invalid_argument("softmax_cross_entropy: label is not one-hot");
    }

    double max_logit = logits(0, 0);
    for (std::size_t i = 1; i < logits.rows; ++i) max_logit = std::max(max_logit, logits(i, 0));

    LossGrad result;
    result.grad = Matrix(logits.rows, 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double e = std::exp(logits(i, 0) - max_logit);
        result.grad(i, 0) = e;
        sum += e;
    }
    result.loss = std::log(sum) - (logits(hot, 0) - max_logit);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        result.grad(i, 0) = result.grad(i, 0) / sum - onehot_label(i, 0);
    }
    return result;
}

}  // namespace deepen
