#include "deepen/network.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "deepen/rng.hpp"
#include "internal.hpp"

namespace deepen {

void NetworkSpec::validate() const {
    if (widths.size() < 2) {
        throw std::invalid_argument("NetworkSpec: need at least input and output widths");
    }
    for (int w : widths) {
        if (w < 1) throw std::invalid_argument("NetworkSpec: widths must be >= 1");
    }
    if (kind == NetworkKind::ResNet) {
        for (std::size_t k = 2; k + 1 < widths.size(); ++k) {
            if (widths[k] != widths[1]) {
                throw std::invalid_argument(
                    "NetworkSpec: residual networks need equal interior widths");
            }
        }
    }
}

bool operator==(const NetworkSpec& a, const NetworkSpec& b) {
    return a.kind == b.kind && a.widths == b.widths;
}

long param_count(const NetworkSpec& spec) {
    spec.validate();
    const auto& h = spec.widths;
    long total = 0;
    if (spec.kind == NetworkKind::Fnn) {
        for (std::size_t k = 1; k < h.size(); ++k) {
            total += static_cast<long>(h[k]) * h[k - 1] + h[k];
        }
    } else {
        const std::size_t last = h.size() - 1;
        total += static_cast<long>(h[1]) * h[0];
        for (std::size_t k = 2; k < last; ++k) {
            total += 2L * h[k] * h[k] + h[k];
        }
        total += static_cast<long>(h[last]) * h[last - 1];
    }
    return total;
}

long ParamSet::scalar_count() const {
    long total = 0;
    for (const auto& l : layers) total += static_cast<long>(l.weight.size() + l.bias.size());
    total += static_cast<long>(entry_weight.size() + exit_weight.size());
    for (const auto& b : blocks) {
        total += static_cast<long>(b.w1.size() + b.w2.size() + b.bias.size());
    }
    return total;
}

namespace {

template <typename PS, typename Ptr>
std::vector<Ptr> collect_scalars(PS& p) {
    std::vector<Ptr> out;
    out.reserve(static_cast<std::size_t>(p.scalar_count()));
    auto push = [&out](auto& m) {
        for (auto& v : m.data) out.push_back(&v);
    };
    if (p.spec.kind == NetworkKind::Fnn) {
        for (auto& l : p.layers) {
            push(l.weight);
            push(l.bias);
        }
    } else {
        push(p.entry_weight);
        for (auto& b : p.blocks) {
            push(b.w1);
            push(b.w2);
            push(b.bias);
        }
        push(p.exit_weight);
    }
    return out;
}

void check_input(const ParamSet& params, const Matrix& input) {
    if (input.cols != 1 || input.rows != static_cast<std::size_t>(params.spec.input_dim())) {
        throw std::invalid_argument("forward: input must be a " +
                                    std::to_string(params.spec.input_dim()) +
                                    "x1 column vector, got " + input.shape_str());
    }
}

void check_dataset(const ParamSet& params, const Dataset& data) {
    if (data.feature_dim() != static_cast<std::size_t>(params.spec.input_dim()) ||
        data.label_dim() != static_cast<std::size_t>(params.spec.output_dim())) {
        throw std::invalid_argument("dataset dimensions do not match the network");
    }
}

}  // namespace

std::vector<double*> ParamSet::scalar_view() { return collect_scalars<ParamSet, double*>(*this); }

std::vector<const double*> ParamSet::scalar_view() const {
    return collect_scalars<const ParamSet, const double*>(*this);
}

bool ParamSet::all_finite() const {
    for (const double* p : scalar_view()) {
        if (!std::isfinite(*p)) return false;
    }
    return true;
}

Matrix forward_fnn(const ParamSet& params, const Matrix& input, ForwardCache* cache) {
    if (params.spec.kind != NetworkKind::Fnn) {
        throw std::invalid_argument("forward_fnn: parameter set is not a feedforward network");
    }
    check_input(params, input);
    const std::size_t n_layers = params.layers.size();
    if (cache) {
        cache->states.assign(1, input);
        cache->preacts.clear();
        cache->activations.clear();
    }
    Matrix x = input;
    for (std::size_t k = 0; k < n_layers; ++k) {
        Matrix z = matmul(params.layers[k].weight, x);
        add_scaled(z, params.layers[k].bias, 1.0);
        if (cache) cache->preacts.push_back(z);
        x = (k + 1 < n_layers) ? relu(z) : std::move(z);  // output layer stays affine
        if (cache) cache->states.push_back(x);
    }
    return x;
}

Matrix forward_resnet(const ParamSet& params, const Matrix& input, ForwardCache* cache) {
    if (params.spec.kind != NetworkKind::ResNet) {
        throw std::invalid_argument("forward_resnet: parameter set is not a residual network");
    }
    check_input(params, input);
    if (cache) {
        cache->states.assign(1, input);
        cache->preacts.clear();
        cache->activations.clear();
    }
    Matrix x = matmul(params.entry_weight, input);
    if (cache) cache->states.push_back(x);
    for (const ResidualBlock& block : params.blocks) {
        Matrix u = matmul(block.w1, x);
        add_scaled(u, block.bias, 1.0);
        Matrix s = tanh_elem(u);
        Matrix next = x;
        add_scaled(next, matmul(block.w2, s), 1.0);
        if (cache) {
            cache->preacts.push_back(std::move(u));
            cache->activations.push_back(std::move(s));
            cache->states.push_back(next);
        }
        x = std::move(next);
    }
    Matrix out = matmul(params.exit_weight, x);
    if (cache) cache->states.push_back(out);
    return out;
}

Matrix forward(const ParamSet& params, const Matrix& input, ForwardCache* cache) {
    return params.spec.kind == NetworkKind::Fnn ? forward_fnn(params, input, cache)
                                                : forward_resnet(params, input, cache);
}

double objective(const ParamSet& params, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("objective: empty dataset");
    check_dataset(params, data);
    ForwardCache cache;
    detail::setup_cache(params, cache);
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        detail::forward_sample(params, data, i, cache);
        total += detail::sample_loss(cache, data, i, nullptr);
    }
    return total / static_cast<double>(data.size());
}

int classify(const ParamSet& params, const Matrix& input) {
    const Matrix out = forward(params, input);
    return detail::argmax_index(out);
}

double test_error(const ParamSet& params, const Dataset& data) {
    if (data.size() == 0) return 0.0;
    check_dataset(params, data);
    ForwardCache cache;
    detail::setup_cache(params, cache);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        detail::forward_sample(params, data, i, cache);
        wrong += detail::argmax_index(cache.states.back()) != data.label_index(i);
    }
    return static_cast<double>(wrong) / static_cast<double>(data.size());
}

namespace {

Matrix sample_uniform(RandomStream& stream, std::size_t rows, std::size_t cols, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (double& v : m.data) v = stream.uniform(-bound, bound);
    return m;
}

}  // namespace

ParamSet init_params(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    RandomStream stream(seed, "param-init");
    const auto& h = spec.widths;

    ParamSet p;
    p.spec = spec;
    if (spec.kind == NetworkKind::Fnn) {
        for (std::size_t k = 1; k < h.size(); ++k) {
            DenseLayer layer;
            layer.weight = sample_uniform(stream, h[k], h[k - 1], h[k - 1]);
            layer.bias = sample_uniform(stream, h[k], 1, h[k - 1]);
            p.layers.push_back(std::move(layer));
        }
    } else {
        const std::size_t last = h.size() - 1;
        p.entry_weight = sample_uniform(stream, h[1], h[0], h[0]);
        for (std::size_t k = 2; k < last; ++k) {
            ResidualBlock block;
            block.w1 = sample_uniform(stream, h[k], h[k], h[k]);
            block.w2 = sample_uniform(stream, h[k], h[k], h[k]);
            block.bias = sample_uniform(stream, h[k], 1, h[k]);
            p.blocks.push_back(std::move(block));
        }
        p.exit_weight = sample_uniform(stream, h[last], h[last - 1], h[last - 1]);
    }
    return p;
}

// --- internal per-sample kernels ---

namespace detail {

void matvec_into(const Matrix& w, const Matrix& x, Matrix& y) {
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double* row = w.data.data() + i * w.cols;
        double acc = 0.0;
        for (std::size_t k = 0; k < w.cols; ++k) {
            if (row[k] == 0.0) continue;  // same term skipping as matmul
            acc += row[k] * x.data[k];
        }
        y.data[i] = acc;
    }
}

namespace {

void matvec_add(const Matrix& w, const Matrix& x, Matrix& y) {
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double* row = w.data.data() + i * w.cols;
        double acc = 0.0;
        for (std::size_t k = 0; k < w.cols; ++k) {
            if (row[k] == 0.0) continue;
            acc += row[k] * x.data[k];
        }
        y.data[i] += acc;
    }
}

}  // namespace

void setup_cache(const ParamSet& params, ForwardCache& cache) {
    const auto& h = params.spec.widths;
    cache.states.clear();
    cache.preacts.clear();
    cache.activations.clear();
    for (int w : h) cache.states.emplace_back(static_cast<std::size_t>(w), 1);
    if (params.spec.kind == NetworkKind::Fnn) {
        for (std::size_t k = 1; k < h.size(); ++k) {
            cache.preacts.emplace_back(static_cast<std::size_t>(h[k]), 1);
        }
    } else {
        for (std::size_t b = 0; b < params.blocks.size(); ++b) {
            cache.preacts.emplace_back(static_cast<std::size_t>(h[1]), 1);
            cache.activations.emplace_back(static_cast<std::size_t>(h[1]), 1);
        }
    }
}

void forward_sample(const ParamSet& params, const Dataset& data, std::size_t i,
                    ForwardCache& cache) {
    Matrix& x0 = cache.states.front();
    for (std::size_t j = 0; j < data.features.cols; ++j) x0.data[j] = data.features(i, j);

    if (params.spec.kind == NetworkKind::Fnn) {
        const std::size_t n_layers = params.layers.size();
        for (std::size_t k = 0; k < n_layers; ++k) {
            Matrix& z = cache.preacts[k];
            matvec_into(params.layers[k].weight, cache.states[k], z);
            add_scaled(z, params.layers[k].bias, 1.0);
            Matrix& x = cache.states[k + 1];
            if (k + 1 < n_layers) {
                for (std::size_t j = 0; j < z.data.size(); ++j) {
                    x.data[j] = z.data[j] < 0.0 ? 0.0 : z.data[j];
                }
            } else {
                x.data = z.data;
            }
        }
    } else {
        matvec_into(params.entry_weight, x0, cache.states[1]);
        for (std::size_t b = 0; b < params.blocks.size(); ++b) {
            const ResidualBlock& block = params.blocks[b];
            Matrix& u = cache.preacts[b];
            matvec_into(block.w1, cache.states[b + 1], u);
            add_scaled(u, block.bias, 1.0);
            Matrix& s = cache.activations[b];
            for (std::size_t j = 0; j < u.data.size(); ++j) s.data[j] = std::tanh(u.data[j]);
            Matrix& next = cache.states[b + 2];
            next.data = cache.states[b + 1].data;
            matvec_add(block.w2, s, next);
        }
        matvec_into(params.exit_weight, cache.states[cache.states.size() - 2],
                    cache.states.back());
    }
}

double sample_loss(const ForwardCache& cache, const Dataset& data, std::size_t i, Matrix* grad) {
    const Matrix& logits = cache.states.back();
    const int hot = data.label_index(i);

    double max_logit = logits.data[0];
    for (std::size_t j = 1; j < logits.data.size(); ++j) {
        max_logit = std::max(max_logit, logits.data[j]);
    }
    double sum = 0.0;
    if (grad) {
        for (std::size_t j = 0; j < logits.data.size(); ++j) {
            const double e = std::exp(logits.data[j] - max_logit);
            grad->data[j] = e;
            sum += e;
        }
        for (std::size_t j = 0; j < logits.data.size(); ++j) {
            grad->data[j] = grad->data[j] / sum - data.labels(i, j);
        }
    } else {
        for (std::size_t j = 0; j < logits.data.size(); ++j) {
            sum += std::exp(logits.data[j] - max_logit);
        }
    }
    return std::log(sum) - (logits.data[static_cast<std::size_t>(hot)] - max_logit);
}

int argmax_index(const Matrix& column) {
    int best = 0;
    for (std::size_t i = 1; i < column.data.size(); ++i) {
        if (column.data[i] > column.data[static_cast<std::size_t>(best)]) {
            best = static_cast<int>(i);
        }
    }
    return best;
}

}  // namespace detail

}  // namespace deepen
