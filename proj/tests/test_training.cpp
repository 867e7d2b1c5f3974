#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "deepen/training.hpp"
#include "oracles.hpp"

using deepen::Dataset;
using deepen::GradientSet;
using deepen::InsertionConfig;
using deepen::InsertionStrategy;
using deepen::Matrix;
using deepen::NetworkKind;
using deepen::NetworkSpec;
using deepen::ParamSet;
using deepen::TrainConfig;
using deepen::TrainingHistory;

namespace {

TrainConfig small_config(const NetworkSpec& spec, int iterations, double lr,
                         std::uint64_t seed) {
    TrainConfig cfg;
    cfg.spec = spec;
    cfg.learning_rate = lr;
    cfg.total_iterations = iterations;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("gd_step with zero learning rate returns bit-identical parameters") {
    const ParamSet p = deepen::init_params({NetworkKind::Fnn, {2, 3, 2}}, 1);
    const Dataset batch = oracles::random_batch(p.spec, 5, 2);
    const GradientSet g = deepen::backprop(p, batch).grads;
    const ParamSet q = deepen::gd_step(p, g, 0.0);
    const auto vp = p.scalar_view();
    const auto vq = q.scalar_view();
    for (std::size_t i = 0; i < vp.size(); ++i) CHECK(*vp[i] == *vq[i]);
}

TEST_CASE("gd_step applies theta - lr * grad (hand case: 1 - 0.1 * 2 = 0.8)") {
    ParamSet p;
    p.spec = {NetworkKind::Fnn, {1, 1}};
    p.layers.push_back({Matrix(1, 1, 1.0), Matrix(1, 1)});
    GradientSet g = deepen::zeros_like(p);
    g.layers[0].weight(0, 0) = 2.0;  // d(theta^2)/dtheta at theta = 1
    const ParamSet q = deepen::gd_step(p, g, 0.1);
    CHECK(q.layers[0].weight(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(q.layers[0].bias(0, 0) == 0.0);
}

TEST_CASE("two steps compose as the sum of their updates, but the path matters") {
    const NetworkSpec spec{NetworkKind::Fnn, {2, 2}};  // purely linear network
    const ParamSet p0 = deepen::init_params(spec, 4);
    const Dataset batch = oracles::random_batch(spec, 10, 5);
    const double lr = 0.3;

    const GradientSet g1 = deepen::backprop(p0, batch).grads;
    const ParamSet p1 = deepen::gd_step(p0, g1, lr);
    const GradientSet g2 = deepen::backprop(p1, batch).grads;
    const ParamSet p2 = deepen::gd_step(p1, g2, lr);

    const auto v0 = p0.scalar_view();
    const auto v2 = p2.scalar_view();
    const auto vg1 = g1.scalar_view();
    const auto vg2 = g2.scalar_view();
    double max_path_gap = 0.0;
    for (std::size_t i = 0; i < v0.size(); ++i) {
        const double composed = *v0[i] - lr * *vg1[i] - lr * *vg2[i];
        CHECK(*v2[i] == doctest::Approx(composed).epsilon(1e-12));
        // one double-length step from g1 alone lands elsewhere: the softmax
        // loss is not linear in theta, so the gradient moved between steps
        const double frozen = *v0[i] - 2.0 * lr * *vg1[i];
        max_path_gap = std::max(max_path_gap, std::abs(*v2[i] - frozen));
    }
    CHECK(max_path_gap > 1e-8);
}

TEST_CASE("train records iteration 0 through total_iterations") {
    const Dataset data = deepen::generate_spirals(60, 0.05, 1.0, 3);
    const auto split = deepen::split_train_test(data, 45, 1);
    const TrainConfig cfg = small_config({NetworkKind::Fnn, {2, 5, 2}}, 40, 0.2, 0);
    const TrainingHistory h = deepen::train(cfg, split.train, split.test);
    REQUIRE(h.records.size() == 41);
    CHECK(h.records.front().iteration == 0);
    CHECK(h.records.back().iteration == 40);
    for (const auto& r : h.records) {
        CHECK(std::isfinite(r.train_loss));
        CHECK(r.test_error >= 0.0);
        CHECK(r.test_error <= 1.0);
    }
    REQUIRE(!h.events.empty());
    CHECK(h.events[0].kind == "init");
    CHECK(h.events[0].param_count == 27);
}

TEST_CASE("baseline and insertion runs coincide exactly up to the insertion iteration") {
    const Dataset data = deepen::generate_spirals(80, 0.05, 1.0, 7);
    const auto split = deepen::split_train_test(data, 60, 2);

    TrainConfig plain = small_config({NetworkKind::Fnn, {2, 5, 2}}, 60, 0.2, 11);
    TrainConfig grow = plain;
    grow.insertion = InsertionConfig{30, InsertionStrategy::max_merit(), 0.8};

    const TrainingHistory h_plain = deepen::train(plain, split.train, split.test);
    const TrainingHistory h_grow = deepen::train(grow, split.train, split.test);
    for (int t = 0; t <= 30; ++t) {
        CHECK(h_plain.records[static_cast<std::size_t>(t)].train_loss ==
              h_grow.records[static_cast<std::size_t>(t)].train_loss);
        CHECK(h_plain.records[static_cast<std::size_t>(t)].test_error ==
              h_grow.records[static_cast<std::size_t>(t)].test_error);
    }

    // the grown run carries an insertion event with the larger parameter count
    bool saw_insertion = false;
    for (const auto& e : h_grow.events) {
        if (e.kind == "insertion") {
            saw_insertion = true;
            CHECK(e.iteration == 30);
            CHECK(e.param_count == 57);
            CHECK(e.position == 1);
            CHECK(e.merits.size() == 1);
        }
    }
    CHECK(saw_insertion);
    CHECK(h_grow.final_params.scalar_count() == 57);
    CHECK(h_plain.final_params.scalar_count() == 27);
}

TEST_CASE("training loss is continuous across a function-preserving insertion") {
    const Dataset data = deepen::generate_spirals(80, 0.05, 1.0, 9);
    const auto split = deepen::split_train_test(data, 60, 4);

    // drive the baseline to iteration 25 by hand, then insert
    ParamSet params = deepen::init_params({NetworkKind::ResNet, {2, 3, 3, 3, 2}}, 5);
    for (int t = 0; t < 25; ++t) {
        params = deepen::gd_step(params, deepen::backprop(params, split.train).grads, 0.1);
    }
    const double before = deepen::objective(params, split.train);
    const auto ext = deepen::build_fully_extended(params);
    const auto report = deepen::compute_merits(ext, split.train);
    const ParamSet grown = deepen::select_and_insert(params, report);
    const double after = deepen::objective(grown, split.train);
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("identical configs yield bit-identical histories") {
    const Dataset data = deepen::generate_spirals(60, 0.02, 1.2, 13);
    const auto split = deepen::split_train_test(data, 45, 3);
    TrainConfig cfg = small_config({NetworkKind::ResNet, {2, 3, 3, 2}}, 50, 0.1, 21);
    cfg.insertion = InsertionConfig{20, InsertionStrategy::max_merit(), 0.8};
    cfg.post_insertion_learning_rate = 0.08;

    const TrainingHistory a = deepen::train(cfg, split.train, split.test);
    const TrainingHistory b = deepen::train(cfg, split.train, split.test);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].train_loss == b.records[i].train_loss);
        CHECK(a.records[i].test_error == b.records[i].test_error);
    }
    // learning-rate change shows up as its own event
    bool saw_lr_change = false;
    for (const auto& e : a.events) saw_lr_change = saw_lr_change || e.kind == "lr_change";
    CHECK(saw_lr_change);
}

TEST_CASE("divergence aborts with a finite diagnostic prefix") {
    // residual nets have no dead-ReLU stall: an absurd rate compounds the
    // parameter magnitudes until the logits overflow
    const Dataset data = deepen::generate_spirals(40, 0.05, 1.0, 17);
    const auto split = deepen::split_train_test(data, 30, 5);
    TrainConfig cfg = small_config({NetworkKind::ResNet, {2, 3, 3, 2}}, 200, 1e12, 2);
    const TrainingHistory h = deepen::train(cfg, split.train, split.test);
    CHECK(h.diverged);
    CHECK(h.diverged_at >= 1);
    CHECK(h.records.size() == static_cast<std::size_t>(h.diverged_at));
    for (const auto& r : h.records) CHECK(std::isfinite(r.train_loss));
}

TEST_CASE("mini-batch optimizer trains deterministically behind the same interface") {
    const Dataset data = deepen::generate_spirals(64, 0.05, 1.0, 19);
    const auto split = deepen::split_train_test(data, 48, 6);
    TrainConfig cfg = small_config({NetworkKind::Fnn, {2, 5, 2}}, 30, 0.05, 3);
    cfg.optimizer = {deepen::OptimizerConfig::Kind::MiniBatchSgd, 16};
    cfg.insertion = InsertionConfig{10, InsertionStrategy::max_merit(), 0.8};

    const TrainingHistory a = deepen::train(cfg, split.train, split.test);
    const TrainingHistory b = deepen::train(cfg, split.train, split.test);
    REQUIRE(a.records.size() == 31);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].train_loss == b.records[i].train_loss);
    }
    CHECK(a.final_params.scalar_count() == 57);
}

TEST_CASE("resuming from a checkpointed parameter set continues the exact trajectory") {
    const Dataset data = deepen::generate_spirals(60, 0.05, 1.0, 23);
    const auto split = deepen::split_train_test(data, 45, 7);

    TrainConfig straight = small_config({NetworkKind::Fnn, {2, 5, 2}}, 15, 0.2, 8);
    const TrainingHistory full = deepen::train(straight, split.train, split.test);

    TrainConfig first = straight;
    first.total_iterations = 10;
    const TrainingHistory head = deepen::train(first, split.train, split.test);

    TrainConfig resumed = straight;
    resumed.total_iterations = 5;
    resumed.initial_params = head.final_params;
    const TrainingHistory tail = deepen::train(resumed, split.train, split.test);

    for (int t = 0; t <= 5; ++t) {
        CHECK(tail.records[static_cast<std::size_t>(t)].train_loss ==
              full.records[static_cast<std::size_t>(t + 10)].train_loss);
    }
}

TEST_CASE("config validation rejects inconsistent settings") {
    TrainConfig cfg = small_config({NetworkKind::Fnn, {2, 5, 2}}, 10, 0.2, 0);
    cfg.insertion = InsertionConfig{10, InsertionStrategy::max_merit(), 0.8};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.insertion->iteration = 5;
    CHECK_NOTHROW(cfg.validate());
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
