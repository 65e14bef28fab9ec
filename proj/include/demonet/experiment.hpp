#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "demonet/graph.hpp"
#include "demonet/model.hpp"
#include "demonet/training.hpp"

namespace demonet {

struct RunOutcome {
    FitResult fit;
    std::uint64_t seed = 0;
    std::size_t num_tasks = 0;
    std::size_t parameters = 0;
};

struct ExperimentOptions {
    ModelConfig model;  // classes, task, seeds are filled in per run
    TrainConfig train;
    SplitFractions fractions;
    bool stratify = true;
    bool bucketing = false;
    std::optional<std::uint64_t> hash_seed;  // overrides the seed-derived hash seed
    FeatureMode features = FeatureMode::raw;
};

// Synthetic node task: 3 classes x 30 nodes with target degrees 2, 3, 4.
Graph synth_node_dataset(std::uint64_t seed);

// Synthetic graph task: two classes with equal mean degree (see
// synth_degree_mix_set), 30 graphs per class with 10 to 40 nodes.
GraphSet synth_graph_dataset(std::uint64_t seed, int graphs_per_class = 30);

// Node classification on one labelled graph. All randomness (split, init,
// hashing, dropout) derives from `seed`. The degree index covers every node
// of the graph, which is visible in full to the transductive model.
RunOutcome run_node_task(const Graph& g, const ExperimentOptions& opts, std::uint64_t seed,
                         std::optional<Model<float>>* trained = nullptr);

// Graph classification; the degree vocabulary comes from the training graphs.
RunOutcome run_graph_task(const GraphSet& set, const ExperimentOptions& opts, std::uint64_t seed,
                          std::optional<Model<float>>* trained = nullptr);

}  // namespace demonet
