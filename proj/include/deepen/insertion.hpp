#pragma once

#include <vector>

#include "deepen/autograd.hpp"
#include "deepen/network.hpp"

namespace deepen {

/// Where a new hidden layer could go.
/// Fnn: index k means "after hidden layer k" (1-based, k = 1..L); the new
/// layer reads the ReLU-rectified state x^k and has the same width h_k.
/// ResNet: index j means "between hidden states j and j+1" (1-based,
/// j = 1..L-1); the new block reads x^j. Positions before the first and
/// after the last hidden state are not offered.
struct CandidatePosition {
    int index = 0;
};

bool operator==(CandidatePosition a, CandidatePosition b);

/// All legal insertion positions for the architecture. Fnn with L hidden
/// layers has L candidates, ResNet has L-1. Throws when none exist.
std::vector<CandidatePosition> candidate_positions(const NetworkSpec& spec);

/// New-layer parameters that leave the propagation function unchanged.
/// Fnn: W = identity, b = 0. relu(relu(x)) == relu(x) and the predecessor
/// output is already nonnegative, so the layer is exactly the identity.
DenseLayer identity_dense_layer(int width);

/// ResNet: w1 = inner_scale * identity, b = 0, w2 = 0, so the block computes
/// x + 0 * tanh(...) = x exactly. inner_scale sets the magnitude of
/// tanh(w1 x + b) and with it the scale of the w2 gradient; it must keep
/// that activation away from identically zero.
ResidualBlock identity_residual_block(int width, double inner_scale = 0.8);

/// Scratch network with an identity-initialized layer at every candidate
/// position, used only to evaluate merits. slots maps each candidate to the
/// index of its layer (Fnn) or block (ResNet) inside params.
struct ExtendedNetwork {
    struct Slot {
        CandidatePosition position;
        int container_index;
    };
    ParamSet params;
    std::vector<Slot> slots;
};

/// Copies the base parameters around identity layers at all candidate
/// positions. The extended network computes the same input-output map as the
/// base network. resnet_inner_scale feeds identity_residual_block and is
/// ignored for Fnn.
ExtendedNetwork build_fully_extended(const ParamSet& base, double resnet_inner_scale = 0.8);

enum class Placement {
    MaxMerit,  // take the candidate with the largest merit
    MinMerit,  // deliberately take the smallest (control strategy)
    Fixed,     // take a caller-chosen position
};

struct InsertionStrategy {
    Placement placement = Placement::MaxMerit;
    int fixed_position = -1;  // used when placement == Fixed

    static InsertionStrategy max_merit() { return {Placement::MaxMerit, -1}; }
    static InsertionStrategy min_merit() { return {Placement::MinMerit, -1}; }
    static InsertionStrategy fixed(int position) { return {Placement::Fixed, position}; }
};

/// Per-candidate sensitivity indicator plus the raw gradient norms it was
/// derived from. merit = (1/h^2) * ||dL/dW||_F^2 where W is the candidate's
/// weight matrix (Fnn) or outer matrix w2 (ResNet); h is the layer width.
/// Bias gradients do not enter the merit. For a freshly inserted ResNet
/// block the w1 and bias gradients are exactly zero, so restricting the
/// merit to w2 loses nothing.
struct MeritCandidate {
    CandidatePosition position;
    double merit = 0.0;
    double weight_grad_norm = 0.0;        // Frobenius norm of the merit-carrying matrix
    double inner_weight_grad_norm = 0.0;  // ResNet w1 (0 for Fnn)
    double bias_grad_norm = 0.0;
};

struct MeritReport {
    std::vector<MeritCandidate> candidates;  // in candidate_positions order
    InsertionStrategy strategy;
    CandidatePosition chosen;
};

/// Merit values read off an already-computed gradient of the extended
/// network. Exposed so full-batch and mini-batch evaluation share one code
/// path and so merit scaling behaviour is testable in isolation.
std::vector<MeritCandidate> merits_from_gradients(const GradientSet& grads,
                                                  const ExtendedNetwork& ext);

/// One full-batch forward-backward pass over data with no parameter update
/// (a gradient descent step with learning rate zero), then merit evaluation
/// per candidate and selection per strategy. ext is untouched.
MeritReport compute_merits(const ExtendedNetwork& ext, const Dataset& data,
                           const InsertionStrategy& strategy = InsertionStrategy::max_merit());

/// Mini-batch variant: one epoch of zero-learning-rate passes over
/// contiguous index-order batches, gradients averaged back to the full-batch
/// gradient before merit evaluation. Equal to compute_merits up to float
/// summation order.
MeritReport compute_merits_minibatch(const ExtendedNetwork& ext, const Dataset& data,
                                     int batch_size,
                                     const InsertionStrategy& strategy = InsertionStrategy::max_merit());

/// New parameter set with one identity-initialized hidden layer/block at
/// report.chosen; every old parameter is copied verbatim. The fully extended
/// scratch network plays no part in the result.
ParamSet select_and_insert(const ParamSet& base, const MeritReport& report,
                           double resnet_inner_scale = 0.8);

}  // namespace deepen
