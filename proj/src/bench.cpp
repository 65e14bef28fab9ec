#include "demonet/bench.hpp"

#include <chrono>

#include "demonet/synth.hpp"
#include "demonet/training.hpp"
#include "demonet/verify.hpp"

namespace demonet {

BenchRow bench_size(int n, const BenchOptions& opts) {
    const SeedSplitter seeds(mix64(opts.seed ^ static_cast<std::uint64_t>(n)));
    Graph g = synth_random_edges(n, 2 * static_cast<std::size_t>(n), seeds.data());
    Rng rng(seeds.data() + 1);
    g = with_random_attributes(g, opts.feature_dim, rng);

    std::vector<int> labels(g.num_nodes());
    std::vector<std::size_t> train;
    for (std::size_t v = 0; v < labels.size(); ++v) {
        labels[v] = static_cast<int>(v % 4);
        if (v % 10 == 0) train.push_back(v);
    }
    ModelConfig mc;
    mc.variant = opts.variant;
    mc.hidden = opts.hidden;
    mc.classes = 4;
    mc.init_seed = seeds.init();
    mc.hash_seed = seeds.hash();
    Model<float> model(mc, opts.feature_dim, DegreeIndex::from_graph(g));
    const auto input = model.prepare(g);
    TrainConfig tc;
    AdamState<float> adam;
    Rng dropout(seeds.dropout());

    auto epoch = [&] {
        Tape<float> tape;
        const auto masks = model.dropout_masks(input, tc.dropout, dropout);
        const auto pass = model.forward(tape, input, &masks);
        Var loss = loss_with_l2(tape, pass.logits, labels, train, pass.params, tc.l2);
        tape.backward(loss);
        std::vector<Matrix<float>> grads;
        for (Var p : pass.params) grads.push_back(tape.grad(p));
        adam_step(adam, model.parameters(), grads, tc);
    };
    for (int i = 0; i < opts.warmup; ++i) epoch();
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < opts.epochs; ++i) epoch();
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return {n, g.num_edges(), ms / opts.epochs};
}

BenchReport run_bench(const BenchOptions& opts) {
    BenchReport report;
    std::vector<double> xs, ys;
    for (int n : opts.sizes) {
        report.rows.push_back(bench_size(n, opts));
        xs.push_back(n);
        ys.push_back(report.rows.back().ms_per_epoch);
    }
    if (xs.size() >= 2) report.slope = log_log_slope(xs, ys);
    return report;
}

}  // namespace demonet
