#include "demonet/synth.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "demonet/errors.hpp"
#include "demonet/random.hpp"

namespace demonet {

bool is_graphical(std::vector<int> d) {
    const std::size_t n = d.size();
    for (int x : d) {
        if (x < 0 || static_cast<std::size_t>(x) >= n) return false;
    }
    long long total = std::accumulate(d.begin(), d.end(), 0LL);
    if (total % 2 != 0) return false;
    std::sort(d.begin(), d.end(), std::greater<>());
    long long prefix = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        prefix += d[k - 1];
        long long rhs = static_cast<long long>(k) * static_cast<long long>(k - 1);
        for (std::size_t i = k; i < n; ++i) rhs += std::min<long long>(d[i], static_cast<long long>(k));
        if (prefix > rhs) return false;
    }
    return true;
}

Graph rewire(const Graph& g, std::size_t swaps, std::uint64_t seed) {
    std::vector<Edge> edges = g.edges();
    if (edges.size() < 2) return g;
    std::set<Edge> present(edges.begin(), edges.end());
    auto key = [](NodeId a, NodeId b) { return Edge{std::min(a, b), std::max(a, b)}; };
    Rng rng(seed);
    for (std::size_t s = 0; s < swaps; ++s) {
        const auto i = uniform_index(rng, edges.size());
        const auto j = uniform_index(rng, edges.size());
        if (i == j) continue;
        auto [a, b] = edges[i];
        auto [c, d] = edges[j];
        if (rng() & 1) std::swap(c, d);
        // (a,b),(c,d) -> (a,d),(c,b)
        if (a == d || c == b) continue;
        const Edge e1 = key(a, d), e2 = key(c, b);
        if (present.count(e1) || present.count(e2)) continue;
        present.erase(edges[i]);
        present.erase(edges[j]);
        present.insert(e1);
        present.insert(e2);
        edges[i] = e1;
        edges[j] = e2;
    }
    Graph out = Graph::from_edges(g.num_nodes(), edges);
    if (g.has_attributes()) {
        out = out.with_attributes(std::vector<double>(g.attributes().begin(), g.attributes().end()), g.attr_dim(),
                                  g.attribute_kind());
    }
    if (g.has_labels()) out = out.with_labels(std::vector<int>(g.labels().begin(), g.labels().end()));
    return out;
}

Graph synth_cycle(int n) {
    if (n < 3) throw ConstructionError("cycle needs at least 3 nodes");
    std::vector<Edge> edges;
    for (int v = 0; v < n; ++v) edges.emplace_back(v, (v + 1) % n);
    return Graph::from_edges(static_cast<std::size_t>(n), edges);
}

Graph synth_disjoint_cycles(int k, int length) {
    if (k < 1 || length < 3) throw ConstructionError("disjoint cycles need k >= 1 and length >= 3");
    std::vector<Edge> edges;
    for (int c = 0; c < k; ++c) {
        for (int v = 0; v < length; ++v) edges.emplace_back(c * length + v, c * length + (v + 1) % length);
    }
    return Graph::from_edges(static_cast<std::size_t>(k * length), edges);
}

namespace {

// Circulant r-regular graph on n nodes; requires n*r even and r < n.
std::vector<Edge> circulant_edges(int n, int r, NodeId base) {
    std::vector<Edge> edges;
    for (int v = 0; v < n; ++v) {
        for (int s = 1; s <= r / 2; ++s) edges.emplace_back(base + v, base + (v + s) % n);
    }
    if (r % 2 == 1) {
        for (int v = 0; v < n / 2; ++v) edges.emplace_back(base + v, base + v + n / 2);
    }
    return edges;
}

bool block_feasible(int n, int r) { return r == 0 || (r < n && (static_cast<long long>(n) * r) % 2 == 0); }

std::vector<Edge> havel_hakimi(std::span<const int> degrees) {
    std::vector<std::pair<int, NodeId>> rest;
    for (std::size_t v = 0; v < degrees.size(); ++v) rest.emplace_back(degrees[v], static_cast<NodeId>(v));
    std::vector<Edge> edges;
    while (true) {
        std::sort(rest.begin(), rest.end(), [](auto a, auto b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
        if (rest.empty() || rest.front().first == 0) break;
        auto [d, v] = rest.front();
        rest.front().first = 0;
        if (static_cast<std::size_t>(d) >= rest.size()) throw ConstructionError("degree sequence is not graphical");
        for (int i = 1; i <= d; ++i) {
            if (rest[i].first == 0) throw ConstructionError("degree sequence is not graphical");
            --rest[i].first;
            edges.emplace_back(v, rest[i].second);
        }
    }
    return edges;
}

}  // namespace

Graph synth_regular(int n, int r, std::uint64_t seed) {
    if (n < 1 || r < 0 || !block_feasible(n, r)) {
        throw ConstructionError("no simple " + std::to_string(r) + "-regular graph on " + std::to_string(n) + " nodes");
    }
    Graph g = Graph::from_edges(static_cast<std::size_t>(n), circulant_edges(n, r, 0));
    return rewire(g, 10 * g.num_edges(), seed);
}

Graph synth_from_degrees(std::span<const int> degrees, std::uint64_t seed) {
    if (!is_graphical(std::vector<int>(degrees.begin(), degrees.end()))) {
        throw ConstructionError("degree sequence violates the Erdos-Gallai conditions");
    }
    Graph g = Graph::from_edges(degrees.size(), havel_hakimi(degrees));
    return rewire(g, 10 * g.num_edges(), seed);
}

Graph synth_degree_classes(std::span<const DegreeClass> classes, std::uint64_t seed) {
    std::vector<int> degrees, labels;
    for (const auto& c : classes) {
        if (c.count < 0 || c.degree < 0) throw ConstructionError("negative class size or degree");
        degrees.insert(degrees.end(), static_cast<std::size_t>(c.count), c.degree);
        labels.insert(labels.end(), static_cast<std::size_t>(c.count), c.class_id);
    }
    if (!is_graphical(degrees)) throw ConstructionError("degree classes violate the Erdos-Gallai conditions");

    Rng rng(seed);
    // Node ids are shuffled so that class membership is not contiguous.
    std::vector<NodeId> perm(degrees.size());
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm.begin(), perm.end(), rng);

    std::vector<Edge> edges;
    const bool blocks = std::all_of(classes.begin(), classes.end(),
                                    [](const DegreeClass& c) { return block_feasible(c.count, c.degree); });
    if (blocks) {
        NodeId base = 0;
        for (const auto& c : classes) {
            auto block = circulant_edges(c.count, c.degree, base);
            edges.insert(edges.end(), block.begin(), block.end());
            base += c.count;
        }
    } else {
        edges = havel_hakimi(degrees);
    }
    for (auto& [u, v] : edges) {
        u = perm[u];
        v = perm[v];
    }
    std::vector<int> shuffled_labels(labels.size());
    for (std::size_t v = 0; v < labels.size(); ++v) shuffled_labels[perm[v]] = labels[v];

    Graph g = Graph::from_edges(degrees.size(), edges);
    g = rewire(g, 10 * g.num_edges(), rng());
    return g.with_attributes(std::vector<double>(g.num_nodes(), 1.0), 1, AttributeKind::categorical)
        .with_labels(std::move(shuffled_labels));
}

Graph synth_random_edges(int n, std::size_t m, std::uint64_t seed) {
    const auto max_edges = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
    if (n < 2 || m > max_edges) throw ConstructionError("cannot place that many simple edges");
    Rng rng(seed);
    std::set<Edge> chosen;
    while (chosen.size() < m) {
        auto u = static_cast<NodeId>(uniform_index(rng, static_cast<std::uint64_t>(n)));
        auto v = static_cast<NodeId>(uniform_index(rng, static_cast<std::uint64_t>(n)));
        if (u == v) continue;
        chosen.insert({std::min(u, v), std::max(u, v)});
    }
    std::vector<Edge> edges(chosen.begin(), chosen.end());
    return Graph::from_edges(static_cast<std::size_t>(n), edges);
}

GraphSet synth_degree_mix_set(int graphs_per_class, int min_nodes, int max_nodes, std::uint64_t seed) {
    if (min_nodes < 6 || max_nodes < min_nodes) throw ConstructionError("degree mix graphs need at least 6 nodes");
    Rng rng(seed);
    GraphSet set;
    set.attr_dim = 1;
    for (int i = 0; i < graphs_per_class; ++i) {
        for (int cls = 0; cls < 2; ++cls) {
            int n = min_nodes + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_nodes - min_nodes + 1)));
            n += n % 2;  // both constructions need an even node count
            std::vector<int> degrees(static_cast<std::size_t>(n), 3);
            if (cls == 1) {
                degrees[0] = 2;
                degrees[1] = 4;
            }
            Graph g = synth_from_degrees(degrees, rng());
            std::vector<NodeId> perm(static_cast<std::size_t>(n));
            std::iota(perm.begin(), perm.end(), 0);
            shuffle(perm.begin(), perm.end(), rng);
            g = g.relabeled(perm);
            set.graphs.push_back(g.with_attributes(std::vector<double>(g.num_nodes(), 1.0), 1, AttributeKind::categorical));
            set.graph_labels.push_back(cls);
        }
    }
    return set;
}

}  // namespace demonet
