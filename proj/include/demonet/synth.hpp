#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "demonet/graph.hpp"

namespace demonet {

struct DegreeClass {
    int class_id = 0;
    int degree = 0;
    int count = 0;
};

// Erdos-Gallai test for a simple graph realizing the sequence.
bool is_graphical(std::vector<int> degrees);

// Degree-preserving double-edge swaps; never creates self-loops or multi-edges.
Graph rewire(const Graph& g, std::size_t swaps, std::uint64_t seed);

Graph synth_cycle(int n);
Graph synth_disjoint_cycles(int k, int length);

// Random r-regular graph: circulant start followed by seeded rewiring.
Graph synth_regular(int n, int r, std::uint64_t seed);

// Every node's label is its class id and its degree is exactly the class's
// target degree. Attributes are a constant 1-dimensional all-ones column.
Graph synth_degree_classes(std::span<const DegreeClass> classes, std::uint64_t seed);

// n nodes and m distinct edges drawn uniformly at random.
Graph synth_random_edges(int n, std::size_t m, std::uint64_t seed);

// Graph classification set with two classes sharing mean degree 3 and constant
// attributes: class 0 graphs are 3-regular; class 1 graphs are 3-regular except
// for one degree-2 node and one degree-4 node. Node counts are drawn from
// [min_nodes, max_nodes] and rounded up to even.
GraphSet synth_degree_mix_set(int graphs_per_class, int min_nodes, int max_nodes, std::uint64_t seed);

// Realizes an arbitrary graphical sequence (Havel-Hakimi) and rewires it.
Graph synth_from_degrees(std::span<const int> degrees, std::uint64_t seed);

}  // namespace demonet
