#pragma once

#include <cstdint>
#include <vector>

#include "deepen/dataset.hpp"
#include "deepen/matrix.hpp"

namespace deepen {

enum class NetworkKind { Fnn, ResNet };

/// Architecture descriptor: widths h_0..h_{L+1} where h_0 is the input
/// dimension and h_{L+1} the output dimension. ResNets require all interior
/// widths to be equal (the residual blocks are square).
struct NetworkSpec {
    NetworkKind kind = NetworkKind::Fnn;
    std::vector<int> widths;

    int depth() const { return static_cast<int>(widths.size()) - 2; }  // hidden layers L
    int input_dim() const { return widths.front(); }
    int output_dim() const { return widths.back(); }

    /// Throws std::invalid_argument on malformed widths.
    void validate() const;
};

bool operator==(const NetworkSpec& a, const NetworkSpec& b);

/// Number of trainable scalars.
/// Fnn: sum over layers of h_k*h_{k-1} + h_k (every layer carries a bias,
/// including the affine output layer). ResNet: entry h_1*h_0, per block
/// 2*h^2 + h, exit h_{L+1}*h_L; entry and exit carry no bias.
long param_count(const NetworkSpec& spec);

struct DenseLayer {
    Matrix weight;  // h_k x h_{k-1}
    Matrix bias;    // h_k x 1
};

/// The map x -> x + w2 * tanh(w1 * x + bias); w1, w2 square.
struct ResidualBlock {
    Matrix w1;
    Matrix w2;
    Matrix bias;
};

/// Ordered trainable parameters of one network.
/// Fnn: layers[0..L] for layers 1..L+1 (hidden layers ReLU, output affine).
/// ResNet: entry_weight (no bias), blocks[0..L-2] connecting consecutive
/// hidden states, exit_weight (no bias).
struct ParamSet {
    NetworkSpec spec;
    std::vector<DenseLayer> layers;  // Fnn only
    Matrix entry_weight;             // ResNet only
    std::vector<ResidualBlock> blocks;
    Matrix exit_weight;

    long scalar_count() const;

    /// Pointers to every trainable scalar in the canonical order:
    /// Fnn: per layer weight (row-major) then bias; ResNet: entry, per block
    /// w1, w2, bias, then exit. Gradient containers use the same order.
    std::vector<double*> scalar_view();
    std::vector<const double*> scalar_view() const;

    bool all_finite() const;
};

/// Intermediate quantities of one forward evaluation, retained for backprop.
struct ForwardCache {
    std::vector<Matrix> states;       // x^0 .. x^{L+1}
    std::vector<Matrix> preacts;      // Fnn: z^k per layer; ResNet: w1*x+b per block
    std::vector<Matrix> activations;  // ResNet only: tanh of each block preact
};

/// Forward pass for either family; fills *cache when given.
Matrix forward(const ParamSet& params, const Matrix& input, ForwardCache* cache = nullptr);
Matrix forward_fnn(const ParamSet& params, const Matrix& input, ForwardCache* cache = nullptr);
Matrix forward_resnet(const ParamSet& params, const Matrix& input, ForwardCache* cache = nullptr);

/// Mean softmax cross entropy loss over the dataset. Throws on an empty
/// dataset or a feature/label dimension mismatch.
double objective(const ParamSet& params, const Dataset& data);

/// Argmax class of the network output; ties resolve to the lowest index.
int classify(const ParamSet& params, const Matrix& input);

/// Fraction of misclassified points, in [0, 1].
double test_error(const ParamSet& params, const Dataset& data);

/// Seeded parameter initialization: every weight and bias entry uniform in
/// [-1/sqrt(fan_in), +1/sqrt(fan_in)] with fan_in the layer's input width.
/// Pure function of (spec, seed).
ParamSet init_params(const NetworkSpec& spec, std::uint64_t seed);

}  // namespace deepen
