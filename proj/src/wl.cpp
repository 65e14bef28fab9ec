#include "demonet/wl.hpp"

#include <algorithm>
#include <set>

#include "demonet/errors.hpp"

namespace demonet {

std::size_t ColorMap::num_colors() const {
    return std::set<int>(colors.begin(), colors.end()).size();
}

int ColorDictionary::id_of(int own, std::vector<int> neighbor_colors) {
    auto [it, inserted] = ids_.try_emplace({own, std::move(neighbor_colors)}, static_cast<int>(ids_.size()));
    return it->second;
}

int AttributeDictionary::insert(std::span<const double> row) {
    auto [it, inserted] = ids_.try_emplace(std::vector<double>(row.begin(), row.end()), static_cast<int>(ids_.size()));
    return it->second;
}

std::optional<int> AttributeDictionary::find(std::span<const double> row) const {
    auto it = ids_.find(std::vector<double>(row.begin(), row.end()));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

ColorMap uniform_colors(std::size_t n) { return ColorMap{std::vector<int>(n, 0), 0}; }

ColorMap initial_colors(const Graph& g, AttributeDictionary& dict) {
    if (!g.has_attributes()) return uniform_colors(g.num_nodes());
    if (g.attribute_kind() == AttributeKind::continuous) {
        throw UnsupportedError("WL colouring needs discrete node attributes; this graph has continuous attribute vectors");
    }
    ColorMap out;
    out.colors.resize(g.num_nodes());
    for (std::size_t v = 0; v < g.num_nodes(); ++v) out.colors[v] = dict.insert(g.attribute(static_cast<NodeId>(v)));
    return out;
}

ColorMap wl_refine(const Graph& g, const ColorMap& colors, ColorDictionary& dict) {
    if (colors.colors.size() != g.num_nodes()) throw ShapeError("colour map length != node count");
    ColorMap out;
    out.round = colors.round + 1;
    out.colors.resize(g.num_nodes());
    std::vector<int> multiset;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        multiset.clear();
        for (NodeId u : g.neighbors(static_cast<NodeId>(v))) multiset.push_back(colors.colors[u]);
        std::sort(multiset.begin(), multiset.end());
        out.colors[v] = dict.id_of(colors.colors[v], multiset);
    }
    return out;
}

ColorMap wl_refine(const Graph& g, const ColorMap& colors) {
    ColorDictionary dict;
    return wl_refine(g, colors, dict);
}

ColorMap wl_stable_colors(const Graph& g, const ColorMap& init, int max_rounds) {
    ColorMap current = init;
    for (int r = 0; r < max_rounds; ++r) {
        ColorMap next = wl_refine(g, current);
        const bool stable = next.num_colors() == current.num_colors();
        current = std::move(next);
        if (stable) break;
    }
    return current;
}

namespace {

std::vector<std::size_t> histogram(const ColorMap& c, std::size_t palette) {
    std::vector<std::size_t> h(palette, 0);
    for (int x : c.colors) ++h[static_cast<std::size_t>(x)];
    return h;
}

}  // namespace

WlVerdict wl_test(const Graph& a, const Graph& b, int max_rounds) {
    if (a.num_nodes() != b.num_nodes()) return WlVerdict::non_isomorphic;
    AttributeDictionary attrs;
    const bool discrete = a.has_attributes() && b.has_attributes() && a.attribute_kind() != AttributeKind::continuous &&
                          b.attribute_kind() != AttributeKind::continuous && a.attr_dim() == b.attr_dim();
    ColorMap ca = discrete ? initial_colors(a, attrs) : uniform_colors(a.num_nodes());
    ColorMap cb = discrete ? initial_colors(b, attrs) : uniform_colors(b.num_nodes());
    std::size_t palette = discrete ? attrs.size() : 1;
    if (histogram(ca, palette) != histogram(cb, palette)) return WlVerdict::non_isomorphic;

    std::size_t classes = palette;
    for (int r = 0; r < max_rounds; ++r) {
        ColorDictionary dict;
        ColorMap na = wl_refine(a, ca, dict);
        ColorMap nb = wl_refine(b, cb, dict);
        if (histogram(na, dict.size()) != histogram(nb, dict.size())) return WlVerdict::non_isomorphic;
        const bool stable = dict.size() == classes;
        classes = dict.size();
        ca = std::move(na);
        cb = std::move(nb);
        if (stable) break;
    }
    return WlVerdict::possibly_isomorphic;
}

SubtreeCode subtree_code(const Graph& g, NodeId v, const AttributeDictionary& dict) {
    if (!g.has_attributes()) throw ValidationError("subtree codes need node attributes");
    auto lookup = [&](NodeId u) {
        auto id = dict.find(g.attribute(u));
        if (!id) throw ValidationError("node " + std::to_string(u) + " has an attribute missing from the dictionary");
        return *id;
    };
    SubtreeCode code;
    code.seed_code = lookup(v);
    code.degree = g.degree(v);
    for (NodeId u : g.neighbors(v)) code.neighbor_multiset.push_back(lookup(u));
    std::sort(code.neighbor_multiset.begin(), code.neighbor_multiset.end());
    return code;
}

}  // namespace demonet
