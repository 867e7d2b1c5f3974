#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "deepen/network.hpp"
#include "deepen/rng.hpp"
#include "oracles.hpp"

using deepen::Dataset;
using deepen::DenseLayer;
using deepen::Matrix;
using deepen::NetworkKind;
using deepen::NetworkSpec;
using deepen::ParamSet;

namespace {

ParamSet identity_fnn(const std::vector<int>& widths) {
    ParamSet p;
    p.spec = {NetworkKind::Fnn, widths};
    for (std::size_t k = 1; k < widths.size(); ++k) {
        REQUIRE(widths[k] == widths[k - 1]);
        p.layers.push_back({Matrix::identity(static_cast<std::size_t>(widths[k])),
                            Matrix(static_cast<std::size_t>(widths[k]), 1)});
    }
    return p;
}

Matrix column(std::initializer_list<double> values) {
    Matrix m(values.size(), 1);
    std::size_t i = 0;
    for (double v : values) m(i++, 0) = v;
    return m;
}

}  // namespace

TEST_CASE("forward_fnn: identity chain passes nonnegative input through") {
    const ParamSet p = identity_fnn({2, 2, 2});
    const Matrix out = deepen::forward_fnn(p, column({1.0, 2.0}));
    CHECK(out(0, 0) == 1.0);
    CHECK(out(1, 0) == 2.0);
}

TEST_CASE("forward_fnn: ReLU clips negative coordinates") {
    const ParamSet p = identity_fnn({2, 2, 2});
    const Matrix out = deepen::forward_fnn(p, column({-1.0, 2.0}));
    CHECK(out(0, 0) == 0.0);
    CHECK(out(1, 0) == 2.0);
}

TEST_CASE("forward_fnn matches the straight-line oracle on a random 2-3-2 net") {
    const NetworkSpec spec{NetworkKind::Fnn, {2, 3, 2}};
    const ParamSet p = deepen::init_params(spec, 77);
    deepen::RandomStream stream(3, "fnn-oracle-inputs");
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix x = oracles::random_input(spec, stream);
        const Matrix out = deepen::forward_fnn(p, x);
        const auto expect = oracles::eval_fnn_by_hand(p, x.data);
        for (std::size_t i = 0; i < out.rows; ++i) {
            CHECK(out(i, 0) == doctest::Approx(expect[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("forward_resnet: zero outer weights reduce to the exit*entry linear map") {
    const NetworkSpec spec{NetworkKind::ResNet, {2, 3, 3, 3, 2}};
    ParamSet p = deepen::init_params(spec, 5);
    for (auto& block : p.blocks) block.w2 = Matrix(3, 3);

    const Matrix linear = matmul(p.exit_weight, p.entry_weight);
    deepen::RandomStream stream(4, "resnet-linear-inputs");
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix x = oracles::random_input(spec, stream);
        const Matrix out = deepen::forward_resnet(p, x);
        const Matrix expect = matmul(linear, x);
        for (std::size_t i = 0; i < out.rows; ++i) {
            CHECK(std::abs(out(i, 0) - expect(i, 0)) <= 1e-14);
        }
    }
}

TEST_CASE("forward_resnet: zero first state stays zero through a bias-free block") {
    ParamSet p;
    p.spec = {NetworkKind::ResNet, {2, 3, 3, 2}};
    p.entry_weight = Matrix(3, 2);  // x^1 = 0
    p.blocks.push_back({Matrix::identity(3), Matrix::identity(3), Matrix(3, 1)});
    p.exit_weight = Matrix(2, 3);
    p.exit_weight(0, 0) = 1.0;
    p.exit_weight(1, 1) = 1.0;
    const Matrix out = deepen::forward_resnet(p, column({1.0, -1.0}));
    CHECK(out(0, 0) == 0.0);  // tanh(0) = 0 inside the block
    CHECK(out(1, 0) == 0.0);
}

TEST_CASE("forward_resnet matches the straight-line oracle on a random one-block net") {
    const NetworkSpec spec{NetworkKind::ResNet, {3, 3, 3, 3}};
    const ParamSet p = deepen::init_params(spec, 12);
    deepen::RandomStream stream(8, "resnet-oracle-inputs");
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix x = oracles::random_input(spec, stream);
        const Matrix out = deepen::forward_resnet(p, x);
        const auto expect = oracles::eval_resnet_by_hand(p, x.data);
        for (std::size_t i = 0; i < out.rows; ++i) {
            CHECK(out(i, 0) == doctest::Approx(expect[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("forward passes are deterministic") {
    const NetworkSpec spec{NetworkKind::Fnn, {2, 5, 2}};
    const ParamSet p = deepen::init_params(spec, 9);
    const Matrix x = column({0.3, -0.8});
    const Matrix a = deepen::forward(p, x);
    const Matrix b = deepen::forward(p, x);
    CHECK(a == b);
}

TEST_CASE("forward rejects mismatched input shapes") {
    const ParamSet p = deepen::init_params({NetworkKind::Fnn, {2, 5, 2}}, 1);
    CHECK_THROWS_AS(deepen::forward(p, Matrix(3, 1)), std::invalid_argument);
    CHECK_THROWS_AS(deepen::forward(p, Matrix(2, 2)), std::invalid_argument);
}

TEST_CASE("param_count reproduces the reference architecture sizes") {
    CHECK(deepen::param_count({NetworkKind::Fnn, {2, 5, 2}}) == 27);
    CHECK(deepen::param_count({NetworkKind::Fnn, {2, 5, 5, 2}}) == 57);
    CHECK(deepen::param_count({NetworkKind::ResNet, {2, 3, 3, 2}}) == 33);
    CHECK(deepen::param_count({NetworkKind::ResNet, {2, 3, 3, 3, 2}}) == 54);
    CHECK(deepen::param_count({NetworkKind::Fnn, {2, 2}}) == 6);  // single affine map
    CHECK(deepen::param_count({NetworkKind::Fnn, {2, 4, 4, 2}}) == 42);
}

TEST_CASE("param_count equals the scalar entries of a fresh ParamSet") {
    for (const NetworkSpec& spec :
         {NetworkSpec{NetworkKind::Fnn, {2, 5, 2}}, NetworkSpec{NetworkKind::Fnn, {3, 4, 4, 2}},
          NetworkSpec{NetworkKind::ResNet, {2, 3, 3, 2}},
          NetworkSpec{NetworkKind::ResNet, {2, 3, 3, 3, 2}}}) {
        const ParamSet p = deepen::init_params(spec, 33);
        CHECK(p.scalar_count() == deepen::param_count(spec));
        CHECK(static_cast<long>(p.scalar_view().size()) == deepen::param_count(spec));
    }
}

TEST_CASE("NetworkSpec validation") {
    CHECK_THROWS_AS(deepen::param_count({NetworkKind::Fnn, {2}}), std::invalid_argument);
    CHECK_THROWS_AS(deepen::param_count({NetworkKind::Fnn, {2, 0, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(deepen::param_count({NetworkKind::ResNet, {2, 3, 4, 2}}),
                    std::invalid_argument);
}

TEST_CASE("objective: single uniform sample gives ln 2, duplication changes nothing") {
    ParamSet p;
    p.spec = {NetworkKind::Fnn, {2, 2}};
    p.layers.push_back({Matrix(2, 2), Matrix(2, 1)});  // all-zero net: logits (0,0)

    Dataset one;
    one.features = Matrix(1, 2);
    one.labels = Matrix(1, 2);
    one.features(0, 0) = 0.4;
    one.features(0, 1) = -0.2;
    one.labels(0, 0) = 1.0;
    CHECK(deepen::objective(p, one) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    Dataset two;
    two.features = Matrix(2, 2);
    two.labels = Matrix(2, 2);
    for (int rep = 0; rep < 2; ++rep) {
        two.features(rep, 0) = 0.4;
        two.features(rep, 1) = -0.2;
        two.labels(rep, 0) = 1.0;
    }
    CHECK(deepen::objective(p, two) == doctest::Approx(deepen::objective(p, one)).epsilon(1e-15));
}

TEST_CASE("objective equals the per-sample loop oracle") {
    const NetworkSpec spec{NetworkKind::Fnn, {2, 4, 3}};
    const ParamSet p = deepen::init_params(spec, 21);
    const Dataset batch = oracles::random_batch(spec, 17, 6);

    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        total += deepen::softmax_cross_entropy(deepen::forward(p, batch.input(i)),
                                               batch.label(i))
                     .loss;
    }
    CHECK(deepen::objective(p, batch) ==
          doctest::Approx(total / static_cast<double>(batch.size())).epsilon(1e-12));
}

TEST_CASE("objective rejects an empty dataset") {
    const ParamSet p = deepen::init_params({NetworkKind::Fnn, {2, 2}}, 1);
    CHECK_THROWS_AS(deepen::objective(p, Dataset{}), std::invalid_argument);
}

TEST_CASE("classify takes the argmax and resolves ties to the lowest index") {
    ParamSet p;
    p.spec = {NetworkKind::Fnn, {2, 2}};
    DenseLayer layer{Matrix(2, 2), Matrix(2, 1)};
    layer.bias(0, 0) = 3.0;
    layer.bias(1, 0) = -1.0;
    p.layers.push_back(layer);
    CHECK(deepen::classify(p, Matrix(2, 1)) == 0);

    p.layers[0].bias(1, 0) = 3.0;  // tie
    CHECK(deepen::classify(p, Matrix(2, 1)) == 0);
}

TEST_CASE("test_error: zero for a perfect separator, one half for a constant") {
    // bias-only net voting class 0 on every input
    ParamSet constant;
    constant.spec = {NetworkKind::Fnn, {2, 2}};
    DenseLayer layer{Matrix(2, 2), Matrix(2, 1)};
    layer.bias(0, 0) = 1.0;
    constant.layers.push_back(layer);

    Dataset balanced;
    balanced.features = Matrix(150, 2);
    balanced.labels = Matrix(150, 2);
    for (std::size_t i = 0; i < 150; ++i) {
        balanced.features(i, 0) = i < 75 ? 1.0 : -1.0;
        balanced.labels(i, i < 75 ? 0 : 1) = 1.0;
    }
    CHECK(deepen::test_error(constant, balanced) == doctest::Approx(0.5));

    ParamSet separator;  // class = sign of x0
    separator.spec = {NetworkKind::Fnn, {2, 2}};
    DenseLayer w{Matrix(2, 2), Matrix(2, 1)};
    w.weight(0, 0) = 1.0;
    w.weight(1, 0) = -1.0;
    separator.layers.push_back(w);
    CHECK(deepen::test_error(separator, balanced) == 0.0);
}

TEST_CASE("init_params: entries bounded by 1/sqrt(fan_in), reproducible per seed") {
    const NetworkSpec spec{NetworkKind::ResNet, {2, 3, 3, 3, 2}};
    const ParamSet a = deepen::init_params(spec, 123);
    const ParamSet b = deepen::init_params(spec, 123);
    const auto va = a.scalar_view();
    const auto vb = b.scalar_view();
    REQUIRE(va.size() == vb.size());
    for (std::size_t i = 0; i < va.size(); ++i) CHECK(*va[i] == *vb[i]);

    const double entry_bound = 1.0 / std::sqrt(2.0);
    for (double v : a.entry_weight.data) CHECK(std::abs(v) <= entry_bound);
    const double block_bound = 1.0 / std::sqrt(3.0);
    for (const auto& block : a.blocks) {
        for (double v : block.w1.data) CHECK(std::abs(v) <= block_bound);
        for (double v : block.w2.data) CHECK(std::abs(v) <= block_bound);
        for (double v : block.bias.data) CHECK(std::abs(v) <= block_bound);
    }
    const double exit_bound = 1.0 / std::sqrt(3.0);
    for (double v : a.exit_weight.data) CHECK(std::abs(v) <= exit_bound);
}

TEST_CASE("init_params sampler is centered (statistical)") {
    // widths 100 throughout: every entry is uniform on [-0.1, 0.1]
    NetworkSpec spec{NetworkKind::Fnn, std::vector<int>(11, 100)};
    const ParamSet p = deepen::init_params(spec, 2718);
    double sum = 0.0;
    std::size_t n = 0;
    for (const double* v : p.scalar_view()) {
        sum += *v;
        ++n;
    }
    REQUIRE(n >= 100000);
    const double bound = 0.1;
    const double se = (2.0 * bound / std::sqrt(12.0)) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(sum / static_cast<double>(n)) <= 3.0 * se);
}
