#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "deepen/autograd.hpp"
#include "deepen/insertion.hpp"
#include "deepen/network.hpp"
#include "oracles.hpp"

using deepen::Dataset;
using deepen::GradientSet;
using deepen::Matrix;
using deepen::NetworkKind;
using deepen::NetworkSpec;
using deepen::ParamSet;

TEST_CASE("backprop loss equals the objective") {
    const NetworkSpec spec{NetworkKind::ResNet, {2, 3, 3, 2}};
    const ParamSet p = deepen::init_params(spec, 31);
    const Dataset batch = oracles::random_batch(spec, 25, 4);
    const auto result = deepen::backprop(p, batch);
    CHECK(result.loss == doctest::Approx(deepen::objective(p, batch)).epsilon(1e-12));
    CHECK(result.grads.batch_size == 25);
}

TEST_CASE("batch gradient is the mean of per-sample gradients") {
    const NetworkSpec spec{NetworkKind::Fnn, {2, 3, 2}};
    const ParamSet p = deepen::init_params(spec, 15);
    const Dataset batch = oracles::random_batch(spec, 8, 16);

    GradientSet mean = deepen::zeros_like(p);
    auto acc = mean.scalar_view();
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto one = deepen::backprop(p, batch.slice(i, i + 1));
        const auto g = one.grads.scalar_view();
        for (std::size_t j = 0; j < acc.size(); ++j) *acc[j] += *g[j];
    }
    const double inv = 1.0 / static_cast<double>(batch.size());

    const auto full = deepen::backprop(p, batch).grads;
    const auto f = full.scalar_view();
    for (std::size_t j = 0; j < acc.size(); ++j) {
        CHECK(*f[j] == doctest::Approx(*acc[j] * inv).epsilon(1e-12));
    }
}

TEST_CASE("linear network: analytic gradient within 1e-9 of finite differences") {
    // widths [2,2]: a single affine layer, no ReLU anywhere
    const NetworkSpec spec{NetworkKind::Fnn, {2, 2}};
    const ParamSet p = deepen::init_params(spec, 3);
    const Dataset batch = oracles::random_batch(spec, 12, 9);
    const auto cmp = oracles::compare_gradients(p, batch, 1e-6);
    CHECK(cmp.compared > 0);
    CHECK(cmp.max_rel_error <= 1e-9);
}

TEST_CASE("backprop matches finite differences on 20 random Fnn instances") {
    const std::vector<std::vector<int>> shapes = {{2, 3, 2}, {2, 4, 2}, {3, 3, 3}, {2, 3, 3, 2}};
    int checked = 0;
    for (std::uint64_t seed = 0; checked < 20; ++seed) {
        const NetworkSpec spec{NetworkKind::Fnn, shapes[seed % shapes.size()]};
        REQUIRE(deepen::param_count(spec) <= 60);
        const ParamSet p = deepen::init_params(spec, 1000 + seed);
        const Dataset batch = oracles::random_batch(spec, 6, 2000 + seed);
        if (oracles::min_abs_preactivation(p, batch) < 1e-6) continue;  // kink: oracle invalid
        const auto cmp = oracles::compare_gradients(p, batch, 1e-6);
        CHECK(cmp.compared > 0);
        CHECK(cmp.max_rel_error <= 1e-5);
        ++checked;
    }
}

TEST_CASE("backprop matches finite differences on 20 random ResNet instances") {
    const std::vector<std::vector<int>> shapes = {{2, 3, 3, 2}, {2, 3, 3, 3, 2}, {3, 3, 3, 3}};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const NetworkSpec spec{NetworkKind::ResNet, shapes[seed % shapes.size()]};
        REQUIRE(deepen::param_count(spec) <= 60);
        const ParamSet p = deepen::init_params(spec, 5000 + seed);
        const Dataset batch = oracles::random_batch(spec, 6, 6000 + seed);
        const auto cmp = oracles::compare_gradients(p, batch, 1e-6);
        CHECK(cmp.compared > 0);
        CHECK(cmp.max_rel_error <= 1e-5);
    }
}

TEST_CASE("fresh residual block: w1 and bias gradients vanish exactly, w2 gradient does not") {
    const NetworkSpec base_spec{NetworkKind::ResNet, {2, 3, 3, 3, 2}};
    ParamSet p = deepen::init_params(base_spec, 8);
    // splice an identity block into the middle, as insertion would
    deepen::MeritReport report;
    report.chosen = {1};
    p = deepen::select_and_insert(p, report);

    const Dataset batch = oracles::random_batch(p.spec, 20, 77);
    const auto grads = deepen::backprop(p, batch).grads;

    const auto& fresh = grads.blocks[0];  // inserted ahead of the old block at gap 1
    for (double v : fresh.w1.data) CHECK(v == 0.0);
    for (double v : fresh.bias.data) CHECK(v == 0.0);
    double w2_norm_sq = 0.0;
    for (double v : fresh.w2.data) w2_norm_sq += v * v;
    CHECK(w2_norm_sq > 0.0);

    // the outer gradient is upstream-state-gradient times tanh(w1 x + b)^T;
    // cross-check one entry against finite differences
    const auto fd = deepen::finite_diff_gradient(p, batch, 1e-6);
    for (std::size_t i = 0; i < fresh.w2.data.size(); ++i) {
        const double analytic = fresh.w2.data[i];
        if (std::abs(analytic) > 1e-8) {
            CHECK(std::abs(analytic - fd.blocks[0].w2.data[i]) / std::abs(analytic) <= 1e-5);
        }
    }
}

TEST_CASE("identity Fnn layer receives a nonzero gradient at insertion") {
    const NetworkSpec base_spec{NetworkKind::Fnn, {2, 4, 4, 2}};
    ParamSet p = deepen::init_params(base_spec, 10);
    deepen::MeritReport report;
    report.chosen = {1};
    p = deepen::select_and_insert(p, report);

    const Dataset batch = oracles::random_batch(p.spec, 20, 13);
    const auto grads = deepen::backprop(p, batch).grads;
    const auto& fresh = grads.layers[1];  // layer spliced after hidden layer 1
    double w_norm_sq = 0.0, b_norm_sq = 0.0;
    for (double v : fresh.weight.data) w_norm_sq += v * v;
    for (double v : fresh.bias.data) b_norm_sq += v * v;
    CHECK(w_norm_sq > 0.0);
    CHECK(b_norm_sq > 0.0);
}

TEST_CASE("backprop rejects an empty batch and mismatched shapes") {
    const ParamSet p = deepen::init_params({NetworkKind::Fnn, {2, 3, 2}}, 1);
    CHECK_THROWS_AS(deepen::backprop(p, Dataset{}), std::invalid_argument);
    const Dataset wrong = oracles::random_batch({NetworkKind::Fnn, {3, 3, 3}}, 4, 1);
    CHECK_THROWS_AS(deepen::backprop(p, wrong), std::invalid_argument);
}

TEST_CASE("finite_diff_gradient validates its step") {
    const ParamSet p = deepen::init_params({NetworkKind::Fnn, {2, 2}}, 1);
    const Dataset batch = oracles::random_batch(p.spec, 2, 2);
    CHECK_THROWS_AS(deepen::finite_diff_gradient(p, batch, 0.0), std::invalid_argument);
}
