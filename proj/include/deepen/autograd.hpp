#pragma once

#include "deepen/dataset.hpp"
#include "deepen/network.hpp"

namespace deepen {

/// Gradient of the averaged loss with respect to every parameter; mirrors
/// the shapes of its ParamSet exactly.
struct GradientSet {
    NetworkSpec spec;
    std::vector<DenseLayer> layers;
    Matrix entry_weight;
    std::vector<ResidualBlock> blocks;
    Matrix exit_weight;
    int batch_size = 0;

    std::vector<double*> scalar_view();
    std::vector<const double*> scalar_view() const;
    void scale(double factor);
};

/// Zero gradients with the same shapes as params.
GradientSet zeros_like(const ParamSet& params);

struct BackpropResult {
    double loss = 0.0;
    GradientSet grads;
};

/// Reverse-mode gradient of (1/|batch|) sum_i loss_i through the cached
/// forward pass. loss is the averaged batch loss; per-sample gradients are
/// accumulated in index order.
BackpropResult backprop(const ParamSet& params, const Dataset& batch);

/// Central finite differences (f(th+step*e_j) - f(th-step*e_j)) / (2*step)
/// per scalar parameter. Verification oracle; independent of backprop.
GradientSet finite_diff_gradient(const ParamSet& params, const Dataset& batch, double step);

}  // namespace deepen
