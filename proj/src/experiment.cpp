#include "demonet/experiment.hpp"

#include <algorithm>

#include "demonet/errors.hpp"
#include "demonet/synth.hpp"

namespace demonet {

Graph synth_node_dataset(std::uint64_t seed) {
    const std::vector<DegreeClass> classes{{0, 2, 30}, {1, 3, 30}, {2, 4, 30}};
    return synth_degree_classes(classes, seed);
}

GraphSet synth_graph_dataset(std::uint64_t seed, int graphs_per_class) {
    return synth_degree_mix_set(graphs_per_class, 10, 40, seed);
}

RunOutcome run_node_task(const Graph& g, const ExperimentOptions& opts, std::uint64_t seed,
                         std::optional<Model<float>>* trained) {
    if (!g.has_labels()) throw ValidationError("node classification needs node labels");
    const SeedSplitter seeds(seed);
    std::vector<int> labels(g.labels().begin(), g.labels().end());
    const SplitSpec split =
        split_random(g.num_nodes(), opts.fractions, seeds.split(), opts.stratify ? std::span<const int>(labels) : std::span<const int>());

    ModelConfig mc = opts.model;
    mc.task = TaskKind::node;
    mc.classes = std::max(1, *std::max_element(labels.begin(), labels.end()) + 1);
    mc.init_seed = seeds.init();
    mc.hash_seed = opts.hash_seed.value_or(seeds.hash());
    const DegreeIndex index = DegreeIndex::from_graph(g, opts.bucketing);
    const Graph featured = opts.features == FeatureMode::raw ? g : make_features(g, opts.features, &index);
    Model<float> model(mc, featured.attr_dim(), index);
    const auto input = model.prepare(featured);

    // Unlabelled nodes never reach the loss or the metrics.
    SplitSpec labelled = split;
    for (auto* part : {&labelled.train, &labelled.val, &labelled.test}) {
        std::erase_if(*part, [&](std::size_t v) { return labels[v] < 0; });
    }
    TrainConfig tc = opts.train;
    tc.seed = seeds.dropout();

    RunOutcome out;
    out.seed = seed;
    out.num_tasks = model.degree_index().num_tasks();
    out.parameters = model.parameter_count();
    out.fit = fit(model, input, labels, labelled, tc);
    if (trained) trained->emplace(std::move(model));
    return out;
}

RunOutcome run_graph_task(const GraphSet& set, const ExperimentOptions& opts, std::uint64_t seed,
                          std::optional<Model<float>>* trained) {
    set.validate();
    if (set.graph_labels.size() != set.size()) throw ValidationError("graph classification needs graph labels");
    const SeedSplitter seeds(seed);
    const SplitSpec split = split_random(set.size(), opts.fractions, seeds.split(),
                                         opts.stratify ? std::span<const int>(set.graph_labels) : std::span<const int>());

    ModelConfig mc = opts.model;
    mc.task = TaskKind::graph;
    mc.classes = std::max(1, set.num_classes());
    mc.init_seed = seeds.init();
    mc.hash_seed = opts.hash_seed.value_or(seeds.hash());
    const DegreeIndex index = DegreeIndex::from_graphs(set, split.train, opts.bucketing);
    GraphSet featured = set;
    if (opts.features != FeatureMode::raw) {
        for (auto& g : featured.graphs) g = make_features(g, opts.features, &index);
        featured.attr_dim = featured.graphs.empty() ? 0 : featured.graphs.front().attr_dim();
    }
    Model<float> model(mc, featured.attr_dim, index);
    const auto input = model.prepare(featured);

    TrainConfig tc = opts.train;
    tc.seed = seeds.dropout();

    RunOutcome out;
    out.seed = seed;
    out.num_tasks = model.degree_index().num_tasks();
    out.parameters = model.parameter_count();
    out.fit = fit(model, input, set.graph_labels, split, tc);
    if (trained) trained->emplace(std::move(model));
    return out;
}

}  // namespace demonet
