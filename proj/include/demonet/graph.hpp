#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace demonet {

using NodeId = std::int32_t;
using Edge = std::pair<NodeId, NodeId>;

inline constexpr int kUnlabeled = -1;

// How node attributes were produced. WL colouring needs discrete attributes.
enum class AttributeKind { none, categorical, continuous };

struct EdgeStats {
    std::size_t self_loops_dropped = 0;
    std::size_t duplicates_dropped = 0;
};

// Immutable undirected attributed graph in CSR form. Neighbor lists carry no
// self-loops and are symmetric; storage order inside a row is not significant.
class Graph {
public:
    Graph() = default;

    // Builds a simple graph on n nodes. Self-loops are dropped and repeated or
    // reversed edges collapse to one undirected edge.
    static Graph from_edges(std::size_t n, std::span<const Edge> edges, EdgeStats* stats = nullptr);

    // Takes CSR arrays verbatim (row order preserved) after validating them.
    static Graph from_csr(std::vector<std::size_t> offsets, std::vector<NodeId> neighbors);

    std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t num_edges() const { return neighbors_.size() / 2; }

    std::span<const NodeId> neighbors(NodeId v) const {
        return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
    }
    int degree(NodeId v) const { return degrees_[v]; }
    std::span<const int> degrees() const { return degrees_; }
    std::span<const std::size_t> offsets() const { return offsets_; }
    std::span<const NodeId> neighbor_array() const { return neighbors_; }
    bool rows_sorted() const { return rows_sorted_; }
    std::vector<Edge> edges() const;  // u < v, lexicographic

    bool has_attributes() const { return attr_dim_ > 0; }
    std::size_t attr_dim() const { return attr_dim_; }
    AttributeKind attribute_kind() const { return attr_kind_; }
    std::span<const double> attributes() const { return attributes_; }
    std::span<const double> attribute(NodeId v) const {
        return {attributes_.data() + static_cast<std::size_t>(v) * attr_dim_, attr_dim_};
    }

    bool has_labels() const { return !labels_.empty(); }
    std::span<const int> labels() const { return labels_; }

    Graph with_attributes(std::vector<double> values, std::size_t dim,
                          AttributeKind kind = AttributeKind::continuous) const;
    Graph with_labels(std::vector<int> labels) const;
    Graph without_attributes() const;

    // Same graph with every neighbor row randomly permuted in storage.
    Graph with_shuffled_neighbors(std::uint64_t seed) const;

    // Node v of this graph becomes node perm[v] of the result.
    Graph relabeled(std::span<const NodeId> perm) const;

private:
    void finish();

    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> neighbors_;
    std::vector<int> degrees_;
    std::vector<double> attributes_;
    std::size_t attr_dim_ = 0;
    AttributeKind attr_kind_ = AttributeKind::none;
    std::vector<int> labels_;
    bool rows_sorted_ = true;
};

// Block-diagonal union; node offsets of each part are returned through
// node_offset (size parts+1) when non-null.
Graph disjoint_union(std::span<const Graph> parts, std::vector<std::size_t>* node_offset = nullptr);

struct GraphSet {
    std::vector<Graph> graphs;
    std::vector<int> graph_labels;  // empty when unlabeled
    std::size_t attr_dim = 0;

    std::size_t size() const { return graphs.size(); }
    int num_classes() const;
    void validate() const;
};

// Maps observed degrees to task ids. With bucketing, degree d > 0 lands in
// bucket floor(log2 d) represented by 2^floor(log2 d); degree 0 keeps its own key.
class DegreeIndex {
public:
    DegreeIndex() = default;

    static DegreeIndex from_degrees(std::span<const int> degrees, bool bucketing = false);
    static DegreeIndex from_graph(const Graph& g, bool bucketing = false);
    static DegreeIndex from_graphs(const GraphSet& set, std::span<const std::size_t> indices,
                                   bool bucketing = false);
    static DegreeIndex from_graphs(const GraphSet& set, bool bucketing = false);

    std::size_t num_tasks() const { return keys_.size(); }
    std::span<const int> degree_values() const { return keys_; }
    bool bucketing() const { return bucketing_; }

    int representative(int degree) const;
    std::optional<int> task_of(int degree) const;

    // Pooling slot: own task when known, else nearest lower key, else slot 0.
    int pooling_slot(int degree) const;

private:
    std::vector<int> keys_;
    bool bucketing_ = false;
};

struct SplitSpec {
    std::vector<std::size_t> train, val, test;
    std::uint64_t seed = 0;
};

struct SplitFractions {
    double train = 0.1, val = 0.2, test = 0.7;
};

// Sizes are floor(fraction * count); the remainder goes to test. With stratify,
// each class is split separately and unlabeled entries go to test.
SplitSpec split_random(std::size_t count, SplitFractions fractions, std::uint64_t seed,
                       std::span<const int> stratify_by = {});

enum class FeatureMode { raw, one_hot_degree };

Graph make_features(const Graph& g, FeatureMode mode, const DegreeIndex* index = nullptr);

}  // namespace demonet
