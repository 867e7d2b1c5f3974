#include "deepen/autograd.hpp"

#include <cmath>
#include <stdexcept>

#include "internal.hpp"

namespace deepen {

namespace {

template <typename GS, typename Ptr>
std::vector<Ptr> collect_scalars(GS& g) {
    std::vector<Ptr> out;
    auto push = [&out](auto& m) {
        for (auto& v : m.data) out.push_back(&v);
    };
    if (g.spec.kind == NetworkKind::Fnn) {
        for (auto& l : g.layers) {
            push(l.weight);
            push(l.bias);
        }
    } else {
        push(g.entry_weight);
        for (auto& b : g.blocks) {
            push(b.w1);
            push(b.w2);
            push(b.bias);
        }
        push(g.exit_weight);
    }
    return out;
}

}  // namespace

std::vector<double*> GradientSet::scalar_view() {
    return collect_scalars<GradientSet, double*>(*this);
}

std::vector<const double*> GradientSet::scalar_view() const {
    return collect_scalars<const GradientSet, const double*>(*this);
}

void GradientSet::scale(double factor) {
    for (double* p : scalar_view()) *p *= factor;
}

GradientSet zeros_like(const ParamSet& params) {
    GradientSet g;
    g.spec = params.spec;
    for (const auto& l : params.layers) {
        g.layers.push_back({Matrix(l.weight.rows, l.weight.cols), Matrix(l.bias.rows, 1)});
    }
    g.entry_weight = Matrix(params.entry_weight.rows, params.entry_weight.cols);
    for (const auto& b : params.blocks) {
        g.blocks.push_back({Matrix(b.w1.rows, b.w1.cols), Matrix(b.w2.rows, b.w2.cols),
                            Matrix(b.bias.rows, 1)});
    }
    g.exit_weight = Matrix(params.exit_weight.rows, params.exit_weight.cols);
    return g;
}

namespace {

// grad_w(i,j) += d(i) * x(j)
void accumulate_outer(Matrix& grad_w, const Matrix& d, const Matrix& x) {
    for (std::size_t i = 0; i < d.data.size(); ++i) {
        const double di = d.data[i];
        if (di == 0.0) continue;
        double* row = grad_w.data.data() + i * grad_w.cols;
        for (std::size_t j = 0; j < x.data.size(); ++j) row[j] += di * x.data[j];
    }
}

// out(j) = sum_i w(i,j) * d(i)
void matvec_transposed_into(const Matrix& w, const Matrix& d, Matrix& out) {
    for (std::size_t j = 0; j < w.cols; ++j) out.data[j] = 0.0;
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double di = d.data[i];
        if (di == 0.0) continue;
        const double* row = w.data.data() + i * w.cols;
        for (std::size_t j = 0; j < w.cols; ++j) out.data[j] += row[j] * di;
    }
}

void backward_sample_fnn(const ParamSet& params, const ForwardCache& cache, GradientSet& grads,
                         std::vector<Matrix>& deltas) {
    const std::size_t n_layers = params.layers.size();
    for (std::size_t k = n_layers; k-- > 0;) {
        const Matrix& delta = deltas[k];
        accumulate_outer(grads.layers[k].weight, delta, cache.states[k]);
        add_scaled(grads.layers[k].bias, delta, 1.0);
        if (k == 0) break;
        Matrix& prev = deltas[k - 1];
        matvec_transposed_into(params.layers[k].weight, delta, prev);
        // gate through the ReLU of layer k-1; derivative at the kink is 0
        const Matrix& z = cache.preacts[k - 1];
        for (std::size_t j = 0; j < prev.data.size(); ++j) {
            if (!(z.data[j] > 0.0)) prev.data[j] = 0.0;
        }
    }
}

void backward_sample_resnet(const ParamSet& params, const ForwardCache& cache, GradientSet& grads,
                            const Matrix& logits_grad, Matrix& dstate, Matrix& dprev, Matrix& t) {
    const std::size_t nb = params.blocks.size();
    accumulate_outer(grads.exit_weight, logits_grad, cache.states[cache.states.size() - 2]);
    matvec_transposed_into(params.exit_weight, logits_grad, dstate);

    for (std::size_t b = nb; b-- > 0;) {
        const ResidualBlock& block = params.blocks[b];
        const Matrix& s = cache.activations[b];
        const Matrix& x_in = cache.states[b + 1];
        accumulate_outer(grads.blocks[b].w2, dstate, s);
        matvec_transposed_into(block.w2, dstate, t);
        for (std::size_t j = 0; j < t.data.size(); ++j) {
            t.data[j] *= 1.0 - s.data[j] * s.data[j];  // tanh'(u) = 1 - tanh(u)^2
        }
        add_scaled(grads.blocks[b].bias, t, 1.0);
        accumulate_outer(grads.blocks[b].w1, t, x_in);
        // skip connection: dx_in = dstate + w1^T t
        matvec_transposed_into(block.w1, t, dprev);
        for (std::size_t j = 0; j < dstate.data.size(); ++j) dstate.data[j] += dprev.data[j];
    }
    accumulate_outer(grads.entry_weight, dstate, cache.states[0]);
}

}  // namespace

BackpropResult backprop(const ParamSet& params, const Dataset& batch) {
    if (batch.size() == 0) throw std::invalid_argument("backprop: empty batch");
    if (batch.feature_dim() != static_cast<std::size_t>(params.spec.input_dim()) ||
        batch.label_dim() != static_cast<std::size_t>(params.spec.output_dim())) {
        throw std::invalid_argument("backprop: batch dimensions do not match the network");
    }

    BackpropResult result;
    result.grads = zeros_like(params);
    result.grads.batch_size = static_cast<int>(batch.size());

    ForwardCache cache;
    detail::setup_cache(params, cache);

    const bool is_fnn = params.spec.kind == NetworkKind::Fnn;
    std::vector<Matrix> deltas;  // Fnn: one per layer
    Matrix logits_grad, dstate, dprev, t;
    if (is_fnn) {
        for (const auto& l : params.layers) deltas.emplace_back(l.weight.rows, 1);
    } else {
        const std::size_t h = params.entry_weight.rows;
        logits_grad = Matrix(params.exit_weight.rows, 1);
        dstate = Matrix(h, 1);
        dprev = Matrix(h, 1);
        t = Matrix(h, 1);
    }

    double total_loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        detail::forward_sample(params, batch, i, cache);
        if (is_fnn) {
            total_loss += detail::sample_loss(cache, batch, i, &deltas.back());
            backward_sample_fnn(params, cache, result.grads, deltas);
        } else {
            total_loss += detail::sample_loss(cache, batch, i, &logits_grad);
            backward_sample_resnet(params, cache, result.grads, logits_grad, dstate, dprev, t);
        }
    }

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    result.loss = total_loss * inv_n;
    result.grads.scale(inv_n);
    return result;
}

GradientSet finite_diff_gradient(const ParamSet& params, const Dataset& batch, double step) {
    if (step <= 0.0) throw std::invalid_argument("finite_diff_gradient: step must be > 0");
    ParamSet probe = params;
    GradientSet grads = zeros_like(params);
    grads.batch_size = static_cast<int>(batch.size());

    std::vector<double*> theta = probe.scalar_view();
    std::vector<double*> g = grads.scalar_view();
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double saved = *theta[j];
        *theta[j] = saved + step;
        const double f_plus = objective(probe, batch);
        *theta[j] = saved - step;
        const double f_minus = objective(probe, batch);
        *theta[j] = saved;
        *g[j] = (f_plus - f_minus) / (2.0 * step);
    }
    return grads;
}

}  // namespace deepen
