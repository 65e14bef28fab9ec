#pragma once

#include <map>
#include <span>
#include <vector>

#include "demonet/graph.hpp"
#include "demonet/tensor.hpp"
#include "demonet/wl.hpp"

namespace demonet {

// Node feature rows h_v together with node degrees: the input of the
// feature-based graph kernels.
struct NodeFeatureSet {
    Matrix<double> features;
    std::vector<int> degrees;

    std::size_t num_nodes() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }
};

// Attribute rows of g (constant 1 when g has none).
NodeFeatureSet node_features(const Graph& g);

// Concatenation of per-degree feature sums c(G, d) over the given ascending
// degree vocabulary; absent degrees contribute zero slices.
std::vector<double> dwl_feature_map(const NodeFeatureSet& g, std::span<const int> vocab);

// Degree-specific WL kernel via the factored feature map over the union of
// both graphs' degrees.
double dwl_kernel(const NodeFeatureSet& a, const NodeFeatureSet& b);

// Sum-pooling kernel <sum_v h_v, sum_v' h_v'>.
double mwl_kernel(const NodeFeatureSet& a, const NodeFeatureSet& b);

using ColorHistogram = std::map<int, std::size_t>;

ColorHistogram color_histogram(const ColorMap& colors);

// Number of node pairs sharing a colour: sum_c h1[c] * h2[c].
double wl_subtree_kernel(const ColorHistogram& a, const ColorHistogram& b);

enum class KernelKind { dwl, mwl, wl_subtree };

// Gram matrix over a graph set. Feature kernels use node attributes; the WL
// subtree kernel refines discrete colours `wl_rounds` times under one shared
// dictionary and rejects continuous attributes.
Matrix<double> gram_matrix(const GraphSet& set, KernelKind kind, int wl_rounds = 1);

}  // namespace demonet
