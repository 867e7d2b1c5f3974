#include "deepen/insertion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace deepen {

bool operator==(CandidatePosition a, CandidatePosition b) { return a.index == b.index; }

std::vector<CandidatePosition> candidate_positions(const NetworkSpec& spec) {
    spec.validate();
    const int hidden = spec.depth();
    std::vector<CandidatePosition> out;
    if (spec.kind == NetworkKind::Fnn) {
        // After each hidden layer: the predecessor output is ReLU-rectified
        // there, which the identity initialization needs. No candidate before
        // the first hidden layer or after the affine output layer.
        for (int k = 1; k <= hidden; ++k) out.push_back({k});
    } else {
        // Strictly between two existing hidden states.
        for (int j = 1; j <= hidden - 1; ++j) out.push_back({j});
    }
    if (out.empty()) {
        throw std::invalid_argument("candidate_positions: architecture has no legal position");
    }
    return out;
}

DenseLayer identity_dense_layer(int width) {
    if (width < 1) throw std::invalid_argument("identity_dense_layer: width must be >= 1");
    return {Matrix::identity(static_cast<std::size_t>(width)),
            Matrix(static_cast<std::size_t>(width), 1)};
}

ResidualBlock identity_residual_block(int width, double inner_scale) {
    if (width < 1) throw std::invalid_argument("identity_residual_block: width must be >= 1");
    const auto w = static_cast<std::size_t>(width);
    ResidualBlock block;
    block.w1 = Matrix::identity(w);
    for (double& v : block.w1.data) v *= inner_scale;
    block.w2 = Matrix(w, w);
    block.bias = Matrix(w, 1);
    return block;
}

ExtendedNetwork build_fully_extended(const ParamSet& base, double resnet_inner_scale) {
    const std::vector<CandidatePosition> candidates = candidate_positions(base.spec);
    const auto& h = base.spec.widths;

    ExtendedNetwork ext;
    ext.params.spec.kind = base.spec.kind;

    if (base.spec.kind == NetworkKind::Fnn) {
        ext.params.spec.widths.push_back(h[0]);
        for (std::size_t k = 1; k + 1 < h.size(); ++k) {
            ext.params.spec.widths.push_back(h[k]);
            ext.params.spec.widths.push_back(h[k]);  // identity twin of hidden layer k
        }
        ext.params.spec.widths.push_back(h.back());

        for (std::size_t k = 0; k < base.layers.size(); ++k) {
            ext.params.layers.push_back(base.layers[k]);
            if (k + 1 < base.layers.size()) {  // after hidden layer k+1
                ext.slots.push_back({candidates[k], static_cast<int>(ext.params.layers.size())});
                ext.params.layers.push_back(identity_dense_layer(h[k + 1]));
            }
        }
    } else {
        const int width = h[1];
        const std::size_t hidden = base.spec.widths.size() - 2;
        ext.params.spec.widths.push_back(h[0]);
        // one extra state per gap: L hidden states become 2L-1
        for (std::size_t k = 0; k < 2 * hidden - 1; ++k) ext.params.spec.widths.push_back(width);
        ext.params.spec.widths.push_back(h.back());

        ext.params.entry_weight = base.entry_weight;
        // New block j sits at hidden state j, ahead of the block that used to
        // consume it, so its input is exactly x^j.
        for (std::size_t b = 0; b < base.blocks.size(); ++b) {
            ext.slots.push_back(
                {candidates[b], static_cast<int>(ext.params.blocks.size())});
            ext.params.blocks.push_back(identity_residual_block(width, resnet_inner_scale));
            ext.params.blocks.push_back(base.blocks[b]);
        }
        ext.params.exit_weight = base.exit_weight;
    }
    ext.params.spec.validate();
    return ext;
}

std::vector<MeritCandidate> merits_from_gradients(const GradientSet& grads,
                                                  const ExtendedNetwork& ext) {
    std::vector<MeritCandidate> out;
    out.reserve(ext.slots.size());
    const bool is_fnn = ext.params.spec.kind == NetworkKind::Fnn;
    for (const auto& slot : ext.slots) {
        MeritCandidate c;
        c.position = slot.position;
        double weight_sq = 0.0, inner_sq = 0.0, bias_sq = 0.0;
        std::size_t width = 0;
        if (is_fnn) {
            const DenseLayer& g = grads.layers[static_cast<std::size_t>(slot.container_index)];
            width = g.weight.rows;
            for (double v : g.weight.data) weight_sq += v * v;
            for (double v : g.bias.data) bias_sq += v * v;
        } else {
            const ResidualBlock& g = grads.blocks[static_cast<std::size_t>(slot.container_index)];
            width = g.w2.rows;
            for (double v : g.w2.data) weight_sq += v * v;
            for (double v : g.w1.data) inner_sq += v * v;
            for (double v : g.bias.data) bias_sq += v * v;
        }
        const double hk = static_cast<double>(width);
        c.merit = weight_sq / (hk * hk);
        c.weight_grad_norm = std::sqrt(weight_sq);
        c.inner_weight_grad_norm = std::sqrt(inner_sq);
        c.bias_grad_norm = std::sqrt(bias_sq);
        out.push_back(c);
    }
    return out;
}

namespace {

CandidatePosition choose_position(const std::vector<MeritCandidate>& candidates,
                                  const InsertionStrategy& strategy) {
    if (candidates.empty()) {
        throw std::invalid_argument("merit selection: no candidates");
    }
    switch (strategy.placement) {
        case Placement::Fixed: {
            for (const auto& c : candidates) {
                if (c.position.index == strategy.fixed_position) return c.position;
            }
            throw std::invalid_argument("merit selection: fixed position " +
                                        std::to_string(strategy.fixed_position) +
                                        " is not a candidate");
        }
        case Placement::MaxMerit:
        case Placement::MinMerit: {
            // strict comparison keeps the smallest index on ties
            std::size_t best = 0;
            for (std::size_t i = 1; i < candidates.size(); ++i) {
                const bool better = strategy.placement == Placement::MaxMerit
                                        ? candidates[i].merit > candidates[best].merit
                                        : candidates[i].merit < candidates[best].merit;
                if (better) best = i;
            }
            return candidates[best].position;
        }
    }
    throw std::logic_error("merit selection: unknown placement");
}

}  // namespace

MeritReport compute_merits(const ExtendedNetwork& ext, const Dataset& data,
                           const InsertionStrategy& strategy) {
    if (data.size() == 0) throw std::invalid_argument("compute_merits: empty dataset");
    // One forward-backward pass, no update: a gradient step with zero
    // learning rate. ext is const, so its bytes cannot change.
    const BackpropResult result = backprop(ext.params, data);
    MeritReport report;
    report.candidates = merits_from_gradients(result.grads, ext);
    report.strategy = strategy;
    report.chosen = choose_position(report.candidates, strategy);
    return report;
}

MeritReport compute_merits_minibatch(const ExtendedNetwork& ext, const Dataset& data,
                                     int batch_size, const InsertionStrategy& strategy) {
    const std::size_t n = data.size();
    if (n == 0) throw std::invalid_argument("compute_merits_minibatch: empty dataset");
    if (batch_size < 1 || static_cast<std::size_t>(batch_size) > n) {
        throw std::invalid_argument("compute_merits_minibatch: batch_size must be in [1, N]");
    }

    // One epoch over index-order batches with zero learning rate; batch
    // gradients recombine (weighted by batch share) into the full-batch one.
    GradientSet total = zeros_like(ext.params);
    total.batch_size = static_cast<int>(n);
    std::vector<double*> acc = total.scalar_view();
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
        const std::size_t stop = std::min(n, start + static_cast<std::size_t>(batch_size));
        const BackpropResult part = backprop(ext.params, data.slice(start, stop));
        const double share = static_cast<double>(stop - start) / static_cast<double>(n);
        std::vector<const double*> src = part.grads.scalar_view();
        for (std::size_t j = 0; j < acc.size(); ++j) *acc[j] += share * *src[j];
    }

    MeritReport report;
    report.candidates = merits_from_gradients(total, ext);
    report.strategy = strategy;
    report.chosen = choose_position(report.candidates, strategy);
    return report;
}

ParamSet select_and_insert(const ParamSet& base, const MeritReport& report,
                           double resnet_inner_scale) {
    const std::vector<CandidatePosition> candidates = candidate_positions(base.spec);
    bool legal = false;
    for (const auto& c : candidates) legal = legal || c == report.chosen;
    if (!legal) {
        throw std::invalid_argument("select_and_insert: position " +
                                    std::to_string(report.chosen.index) +
                                    " is not a legal candidate for this architecture");
    }

    const int pos = report.chosen.index;
    const auto& h = base.spec.widths;
    ParamSet out;
    out.spec.kind = base.spec.kind;
    out.spec.widths = h;

    if (base.spec.kind == NetworkKind::Fnn) {
        out.spec.widths.insert(out.spec.widths.begin() + pos + 1, h[static_cast<std::size_t>(pos)]);
        for (std::size_t k = 0; k < base.layers.size(); ++k) {
            out.layers.push_back(base.layers[k]);
            if (k + 1 == static_cast<std::size_t>(pos)) {
                out.layers.push_back(identity_dense_layer(h[static_cast<std::size_t>(pos)]));
            }
        }
    } else {
        out.spec.widths.insert(out.spec.widths.begin() + pos + 1, h[1]);
        out.entry_weight = base.entry_weight;
        for (std::size_t b = 0; b < base.blocks.size(); ++b) {
            if (b + 1 == static_cast<std::size_t>(pos)) {
                out.blocks.push_back(identity_residual_block(h[1], resnet_inner_scale));
            }
            out.blocks.push_back(base.blocks[b]);
        }
        out.exit_weight = base.exit_weight;
    }
    out.spec.validate();
    return out;
}

}  // namespace deepen
