#include "demonet/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <string>

#include "demonet/errors.hpp"
#include "demonet/random.hpp"

namespace demonet {

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges, EdgeStats* stats) {
    std::vector<Edge> simple;
    simple.reserve(edges.size());
    std::size_t loops = 0;
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
            throw ValidationError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                                  ") out of range for " + std::to_string(n) + " nodes");
        }
        if (u == v) {
            ++loops;
            continue;
        }
        simple.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(simple.begin(), simple.end());
    const auto before = simple.size();
    simple.erase(std::unique(simple.begin(), simple.end()), simple.end());
    if (stats) {
        stats->self_loops_dropped = loops;
        stats->duplicates_dropped = before - simple.size();
    }

    Graph g;
    std::vector<std::size_t> counts(n + 1, 0);
    for (auto [u, v] : simple) {
        ++counts[u + 1];
        ++counts[v + 1];
    }
    for (std::size_t i = 0; i < n; ++i) counts[i + 1] += counts[i];
    g.offsets_ = counts;
    g.neighbors_.assign(counts[n], 0);
    std::vector<std::size_t> cursor(counts.begin(), counts.end() - 1);
    for (auto [u, v] : simple) {
        g.neighbors_[cursor[u]++] = v;
        g.neighbors_[cursor[v]++] = u;
    }
    for (std::size_t v = 0; v < n; ++v) {
        std::sort(g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]),
                  g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]));
    }
    g.finish();
    return g;
}

Graph Graph::from_csr(std::vector<std::size_t> offsets, std::vector<NodeId> neighbors) {
    if (offsets.empty() || offsets.front() != 0 || offsets.back() != neighbors.size()) {
        throw ValidationError("csr offsets must start at 0 and end at the neighbor count");
    }
    const std::size_t n = offsets.size() - 1;
    for (std::size_t v = 0; v < n; ++v) {
        if (offsets[v + 1] < offsets[v]) throw ValidationError("csr offsets not monotone");
    }
    std::vector<Edge> seen;
    seen.reserve(neighbors.size());
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t p = offsets[v]; p < offsets[v + 1]; ++p) {
            const NodeId u = neighbors[p];
            if (u < 0 || static_cast<std::size_t>(u) >= n) throw ValidationError("csr neighbor out of range");
            if (static_cast<std::size_t>(u) == v) throw ValidationError("csr contains a self-loop");
            seen.emplace_back(static_cast<NodeId>(v), u);
        }
    }
    std::vector<Edge> forward = seen, backward;
    backward.reserve(seen.size());
    for (auto [a, b] : seen) backward.emplace_back(b, a);
    std::sort(forward.begin(), forward.end());
    std::sort(backward.begin(), backward.end());
    if (std::adjacent_find(forward.begin(), forward.end()) != forward.end()) {
        throw ValidationError("csr contains a repeated edge");
    }
    if (forward != backward) throw ValidationError("csr adjacency is not symmetric");

    Graph g;
    g.offsets_ = std::move(offsets);
    g.neighbors_ = std::move(neighbors);
    g.finish();
    return g;
}

void Graph::finish() {
    const std::size_t n = num_nodes();
    degrees_.resize(n);
    rows_sorted_ = true;
    for (std::size_t v = 0; v < n; ++v) {
        degrees_[v] = static_cast<int>(offsets_[v + 1] - offsets_[v]);
        auto row = neighbors(static_cast<NodeId>(v));
        if (!std::is_sorted(row.begin(), row.end())) rows_sorted_ = false;
    }
}

std::vector<Edge> Graph::edges() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (std::size_t v = 0; v < num_nodes(); ++v) {
        for (NodeId u : neighbors(static_cast<NodeId>(v))) {
            if (static_cast<NodeId>(v) < u) out.emplace_back(static_cast<NodeId>(v), u);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Graph Graph::with_attributes(std::vector<double> values, std::size_t dim, AttributeKind kind) const {
    if (values.size() != num_nodes() * dim) {
        throw ShapeError("attribute matrix has " + std::to_string(values.size()) + " entries, expected " +
                         std::to_string(num_nodes()) + "x" + std::to_string(dim));
    }
    Graph g = *this;
    g.attributes_ = std::move(values);
    g.attr_dim_ = dim;
    g.attr_kind_ = dim == 0 ? AttributeKind::none : kind;
    return g;
}

Graph Graph::with_labels(std::vector<int> labels) const {
    if (!labels.empty() && labels.size() != num_nodes()) throw ShapeError("label array length != node count");
    Graph g = *this;
    g.labels_ = std::move(labels);
    return g;
}

Graph Graph::without_attributes() const {
    Graph g = *this;
    g.attributes_.clear();
    g.attr_dim_ = 0;
    g.attr_kind_ = AttributeKind::none;
    return g;
}

Graph Graph::with_shuffled_neighbors(std::uint64_t seed) const {
    Graph g = *this;
    Rng rng(seed);
    for (std::size_t v = 0; v < num_nodes(); ++v) {
        shuffle(g.neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
                g.neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]), rng);
    }
    g.finish();
    return g;
}

Graph Graph::relabeled(std::span<const NodeId> perm) const {
    const std::size_t n = num_nodes();
    if (perm.size() != n) throw ShapeError("permutation length != node count");
    std::vector<Edge> mapped;
    for (auto [u, v] : edges()) mapped.emplace_back(perm[u], perm[v]);
    Graph g = from_edges(n, mapped);
    if (attr_dim_ > 0) {
        std::vector<double> attrs(attributes_.size());
        for (std::size_t v = 0; v < n; ++v) {
            std::copy_n(attributes_.begin() + static_cast<std::ptrdiff_t>(v * attr_dim_), attr_dim_,
                        attrs.begin() + static_cast<std::ptrdiff_t>(perm[v] * attr_dim_));
        }
        g = g.with_attributes(std::move(attrs), attr_dim_, attr_kind_);
    }
    if (!labels_.empty()) {
        std::vector<int> labels(n);
        for (std::size_t v = 0; v < n; ++v) labels[perm[v]] = labels_[v];
        g = g.with_labels(std::move(labels));
    }
    return g;
}

Graph disjoint_union(std::span<const Graph> parts, std::vector<std::size_t>* node_offset) {
    std::vector<std::size_t> base(parts.size() + 1, 0);
    std::size_t dim = parts.empty() ? 0 : parts.front().attr_dim();
    AttributeKind kind = parts.empty() ? AttributeKind::none : parts.front().attribute_kind();
    bool labeled = !parts.empty();
    for (std::size_t i = 0; i < parts.size(); ++i) {
        base[i + 1] = base[i] + parts[i].num_nodes();
        if (parts[i].attr_dim() != dim) throw ShapeError("disjoint_union: attribute dimensions differ");
        if (parts[i].attribute_kind() == AttributeKind::continuous) kind = AttributeKind::continuous;
        labeled = labeled && parts[i].has_labels();
    }
    std::vector<std::size_t> offsets{0};
    std::vector<NodeId> neighbors;
    std::vector<double> attrs;
    std::vector<int> labels;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const Graph& p = parts[i];
        for (std::size_t v = 0; v < p.num_nodes(); ++v) {
            for (NodeId u : p.neighbors(static_cast<NodeId>(v))) {
                neighbors.push_back(static_cast<NodeId>(base[i]) + u);
            }
            offsets.push_back(neighbors.size());
        }
        attrs.insert(attrs.end(), p.attributes().begin(), p.attributes().end());
        if (labeled) labels.insert(labels.end(), p.labels().begin(), p.labels().end());
    }
    if (node_offset) *node_offset = base;
    Graph g = Graph::from_csr(std::move(offsets), std::move(neighbors));
    if (dim > 0) g = g.with_attributes(std::move(attrs), dim, kind);
    if (labeled) g = g.with_labels(std::move(labels));
    return g;
}

int GraphSet::num_classes() const {
    if (graph_labels.empty()) return 0;
    return *std::max_element(graph_labels.begin(), graph_labels.end()) + 1;
}

void GraphSet::validate() const {
    for (const auto& g : graphs) {
        if (g.attr_dim() != attr_dim) throw ValidationError("graph set members disagree on attribute dimension");
    }
    if (!graph_labels.empty() && graph_labels.size() != graphs.size()) {
        throw ValidationError("graph labels do not cover every graph");
    }
}

// ---------------------------------------------------------------------------
// DegreeIndex

int DegreeIndex::representative(int degree) const {
    if (!bucketing_ || degree <= 0) return degree;
    return static_cast<int>(std::bit_floor(static_cast<unsigned>(degree)));
}

DegreeIndex DegreeIndex::from_degrees(std::span<const int> degrees, bool bucketing) {
    DegreeIndex index;
    index.bucketing_ = bucketing;
    for (int d : degrees) index.keys_.push_back(index.representative(d));
    std::sort(index.keys_.begin(), index.keys_.end());
    index.keys_.erase(std::unique(index.keys_.begin(), index.keys_.end()), index.keys_.end());
    return index;
}

DegreeIndex DegreeIndex::from_graph(const Graph& g, bool bucketing) {
    if (g.num_nodes() == 0) throw ValidationError("degree index of an empty graph");
    return from_degrees(g.degrees(), bucketing);
}

DegreeIndex DegreeIndex::from_graphs(const GraphSet& set, std::span<const std::size_t> indices, bool bucketing) {
    std::vector<int> all;
    for (std::size_t i : indices) {
        auto d = set.graphs.at(i).degrees();
        all.insert(all.end(), d.begin(), d.end());
    }
    if (all.empty()) throw ValidationError("degree index of an empty graph selection");
    return from_degrees(all, bucketing);
}

DegreeIndex DegreeIndex::from_graphs(const GraphSet& set, bool bucketing) {
    std::vector<std::size_t> all(set.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return from_graphs(set, all, bucketing);
}

std::optional<int> DegreeIndex::task_of(int degree) const {
    const int key = representative(degree);
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) return std::nullopt;
    return static_cast<int>(it - keys_.begin());
}

int DegreeIndex::pooling_slot(int degree) const {
    const int key = representative(degree);
    auto it = std::upper_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.begin()) return 0;
    return static_cast<int>(it - keys_.begin()) - 1;
}

// ---------------------------------------------------------------------------
// Splits

namespace {

std::size_t portion(double fraction, std::size_t count) {
    // 1/3 * 9 must give 3, not 2.
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(count) + 1e-9));
}

}  // namespace

SplitSpec split_random(std::size_t count, SplitFractions f, std::uint64_t seed, std::span<const int> stratify_by) {
    if (f.train < 0 || f.val < 0 || f.test < 0) throw ValidationError("split fractions must be nonnegative");
    if (f.train + f.val + f.test > 1.0 + 1e-9) throw ValidationError("split fractions sum to more than 1");
    if (!stratify_by.empty() && stratify_by.size() != count) throw ShapeError("stratify labels length != count");

    SplitSpec split;
    split.seed = seed;
    Rng rng(seed);

    auto assign = [&](std::vector<std::size_t> ids) {
        shuffle(ids.begin(), ids.end(), rng);
        const std::size_t n_train = portion(f.train, ids.size());
        const std::size_t n_val = portion(f.val, ids.size());
        split.train.insert(split.train.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.val.insert(split.val.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                         ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
        split.test.insert(split.test.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
    };

    if (stratify_by.empty()) {
        std::vector<std::size_t> ids(count);
        for (std::size_t i = 0; i < count; ++i) ids[i] = i;
        assign(std::move(ids));
    } else {
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < count; ++i) by_class[stratify_by[i]].push_back(i);
        for (auto& [label, ids] : by_class) {
            if (label == kUnlabeled) {
                split.test.insert(split.test.end(), ids.begin(), ids.end());
            } else {
                assign(std::move(ids));
            }
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Graph make_features(const Graph& g, FeatureMode mode, const DegreeIndex* index) {
    if (mode == FeatureMode::raw) {
        if (!g.has_attributes()) throw ValidationError("raw feature mode requires node attributes");
        return g;
    }
    const DegreeIndex local = index ? DegreeIndex{} : DegreeIndex::from_graph(g);
    const DegreeIndex& idx = index ? *index : local;
    const std::size_t dim = idx.num_tasks();
    std::vector<double> values(g.num_nodes() * dim, 0.0);
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        if (auto t = idx.task_of(g.degree(static_cast<NodeId>(v)))) values[v * dim + *t] = 1.0;
    }
    return g.with_attributes(std::move(values), dim, AttributeKind::categorical);
}

}  // namespace demonet
