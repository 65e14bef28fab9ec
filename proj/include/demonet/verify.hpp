#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "demonet/graph.hpp"
#include "demonet/kernels.hpp"
#include "demonet/random.hpp"
#include "demonet/tensor.hpp"

namespace demonet {

struct PropertyResult {
    std::string group;
    std::string name;
    bool passed = false;
    std::string detail;
    std::string replay;  // JSON describing the first failing instance, empty on success
};

struct VerifyOptions {
    std::uint64_t seed = 0;
    bool mutate_order = false;  // shuffle every generated neighbour list
    bool break_hash = false;    // hash x and x' with different specs
    int lemma_instances = 100;
    int hash_specs = 10000;
    int hash_pairs = 20;
    int kernel_pairs = 50;
    int rkhs_graphs = 20;
};

// Erdos-Renyi graph on n in [min_n, max_n] nodes with edge probability p.
Graph random_graph(Rng& rng, int min_n, int max_n, double p);

// Attaches i.i.d. uniform(-1, 1) attributes (continuous) of width dim.
Graph with_random_attributes(const Graph& g, std::size_t dim, Rng& rng);

// Attaches categorical attributes drawn from {0, ..., alphabet-1}, one column.
Graph with_random_categories(const Graph& g, int alphabet, Rng& rng);

// Double sums straight from the kernel definitions.
double dwl_brute_force(const NodeFeatureSet& a, const NodeFeatureSet& b);
double mwl_brute_force(const NodeFeatureSet& a, const NodeFeatureSet& b);
double wl_subtree_brute_force(std::span<const int> colors_a, std::span<const int> colors_b);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix<double>& m);

// Least-squares slope of log(y) against log(x).
double log_log_slope(std::span<const double> x, std::span<const double> y);

// Property groups. Each returns one or more results.
std::vector<PropertyResult> verify_aggregation_properties(const VerifyOptions& opts);  // order-free, seed-oriented, degree-aware
std::vector<PropertyResult> verify_hash_unbiased(const VerifyOptions& opts);
std::vector<PropertyResult> verify_kernels(const VerifyOptions& opts);
std::vector<PropertyResult> verify_rkhs_identity(const VerifyOptions& opts);
std::vector<PropertyResult> verify_subtree_injectivity(const VerifyOptions& opts);
std::vector<PropertyResult> verify_gradients(const VerifyOptions& opts);

struct PropertyGroup {
    std::string name;
    std::function<std::vector<PropertyResult>(const VerifyOptions&)> run;
};

const std::vector<PropertyGroup>& property_groups();

}  // namespace demonet
