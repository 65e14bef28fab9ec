#include <doctest.h>

#include <cmath>
#include <numeric>

#include "demonet/errors.hpp"
#include "demonet/experiment.hpp"
#include "demonet/gradcheck.hpp"
#include "demonet/synth.hpp"
#include "demonet/training.hpp"

using namespace demonet;
using M = Matrix<double>;

TEST_CASE("loss with weight decay") {
    Tape<double> t;
    Var logits = t.parameter(M(2, 2, {0, 0, 0, 0}));
    Var w = t.parameter(M(1, 2, {3, 4}));
    const std::vector<int> labels{0, 1};
    const std::vector<std::size_t> rows{0, 1};
    const std::vector<Var> params{w};
    Var loss = loss_with_l2(t, logits, labels, rows, params, 0.01);
    CHECK(t.value(loss)(0, 0) == doctest::Approx(std::log(2.0) + 0.25).epsilon(1e-12));
    t.backward(loss);
    CHECK(t.grad(w)(0, 0) == doctest::Approx(0.06));
    CHECK(t.grad(w)(0, 1) == doctest::Approx(0.08));

    std::vector<M> ps{M(3, 2, {0.1, -0.3, 0.7, 0.2, -0.5, 0.4}), M(2, 2, {1, -1, 0.5, 2})};
    const Objective<double> f = [&](Tape<double>& tp, std::span<const Var> p) {
        const std::vector<int> y{1, 0, 1};
        const std::vector<std::size_t> r{0, 1, 2};
        return loss_with_l2(tp, matmul(tp, p[0], p[1]), y, r, p, 5e-4);
    };
    CHECK(finite_diff_check(f, ps).max_error < 1e-7);
}

TEST_CASE("Adam steps") {
    TrainConfig cfg;
    cfg.lr = 0.01;
    std::vector<M> params{M(1, 3, {1, 2, 3})};
    const std::vector<M> zero{M(1, 3, 0.0)};
    AdamState<double> st;
    adam_step(st, params, zero, cfg);
    CHECK(params[0] == M(1, 3, {1, 2, 3}));

    AdamState<double> fresh;
    std::vector<M> p2{M(1, 3, {1, 2, 3})};
    adam_step(fresh, p2, std::vector<M>{M(1, 3, {0.5, -2, 1e-3})}, cfg);
    CHECK(p2[0](0, 0) == doctest::Approx(1 - 0.01).epsilon(1e-6));
    CHECK(p2[0](0, 1) == doctest::Approx(2 + 0.01).epsilon(1e-6));
    CHECK(p2[0](0, 2) == doctest::Approx(3 - 0.01).epsilon(1e-4));
    CHECK(fresh.step == 1);

    // Quadratic bowl: repeated steps approach the minimum.
    std::vector<M> q{M(1, 1, 5.0)};
    AdamState<double> qs;
    cfg.lr = 0.1;
    for (int i = 0; i < 500; ++i) adam_step(qs, q, std::vector<M>{M(1, 1, 2 * q[0](0, 0))}, cfg);
    CHECK(std::abs(q[0](0, 0)) < 0.05);
}

TEST_CASE("early stopping trace") {
    EarlyStopping es(1);
    CHECK(es.observe(1, 0.5, 1.0));
    CHECK_FALSE(es.should_stop());
    CHECK_FALSE(es.observe(2, 0.4, 0.9));
    CHECK(es.should_stop());
    CHECK(es.best_epoch() == 1);
    CHECK(es.best_accuracy() == 0.5);

    EarlyStopping tie(2);
    tie.observe(1, 0.5, 1.0);
    CHECK(tie.observe(2, 0.5, 0.8));  // same accuracy, lower loss: new snapshot
    CHECK(tie.best_epoch() == 2);
    CHECK_FALSE(tie.observe(3, 0.5, 0.9));
    CHECK(tie.should_stop());
}

TEST_CASE("accuracy and evaluation") {
    const std::vector<int> labels{0, 1, 2, 3};
    const std::vector<std::size_t> rows{0, 1, 2, 3};
    M perfect(4, 4);
    for (std::size_t i = 0; i < 4; ++i) perfect(i, i) = 5;
    CHECK(accuracy(perfect, labels, rows) == 1.0);
    // Ties pick class 0.
    CHECK(accuracy(M(4, 4, 0.3), labels, rows) == 0.25);
    const std::vector<std::size_t> two{1, 2};
    CHECK(accuracy(perfect, labels, two) == 1.0);
}

TEST_CASE("dropout masks keep the expectation") {
    const Graph g = synth_cycle(400).with_attributes(std::vector<double>(400 * 5, 1.0), 5);
    ModelConfig cfg;
    cfg.layers = 2;
    cfg.hidden = 10;
    const Model<double> model(cfg, 5, DegreeIndex::from_graph(g));
    const auto in = model.prepare(g);
    Rng rng(3);
    const auto masks = model.dropout_masks(in, 0.6, rng);
    REQUIRE(masks.size() == 2);
    for (const auto& m : masks) {
        double sum = 0;
        for (double x : m.data()) {
            CHECK((x == 0.0 || x == doctest::Approx(2.5)));
            sum += x;
        }
        CHECK(sum / static_cast<double>(m.size()) == doctest::Approx(1.0).epsilon(0.08));
    }
    const auto none = model.dropout_masks(in, 0.0, rng);
    for (const auto& m : none)
        for (double x : m.data()) CHECK(x == 1.0);
}

TEST_CASE("training reduces the loss and is repeatable") {
    const Graph g = synth_node_dataset(4);
    ExperimentOptions opts;
    opts.model.layers = 2;
    opts.model.hidden = 16;
    opts.train.dropout = 0.0;
    opts.train.max_epochs = 10;
    opts.train.patience = 100;
    opts.fractions = {0.1, 0.2};
    opts.features = FeatureMode::one_hot_degree;
    const RunOutcome a = run_node_task(g, opts, 7);
    REQUIRE(a.fit.train_loss.size() == 10);
    for (std::size_t e = 1; e < 10; ++e) CHECK(a.fit.train_loss[e] <= a.fit.train_loss[e - 1] + 1e-6);

    const RunOutcome b = run_node_task(g, opts, 7);
    CHECK(a.fit.train_loss == b.fit.train_loss);
    CHECK(a.fit.test_acc == b.fit.test_acc);

    opts.train.dropout = 0.5;
    const RunOutcome c = run_node_task(g, opts, 7);
    const RunOutcome d = run_node_task(g, opts, 7);
    CHECK(c.fit.train_loss == d.fit.train_loss);
}

TEST_CASE("config validation and summaries") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.dropout = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.dropout = 0.5;
    cfg.lr = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);

    const std::vector<double> v{1, 2, 3, 4};
    const Summary s = summarize(v);
    CHECK(s.mean == 2.5);
    CHECK(s.std == doctest::Approx(std::sqrt(1.25)));
    const std::vector<double> one{0.7};
    CHECK(summarize(one).std == 0.0);
}
