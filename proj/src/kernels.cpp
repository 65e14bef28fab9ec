#include "demonet/kernels.hpp"

#include <algorithm>

#include "demonet/errors.hpp"

namespace demonet {

NodeFeatureSet node_features(const Graph& g) {
    NodeFeatureSet out;
    out.degrees.assign(g.degrees().begin(), g.degrees().end());
    if (g.has_attributes()) {
        out.features = Matrix<double>(g.num_nodes(), g.attr_dim(),
                                      std::vector<double>(g.attributes().begin(), g.attributes().end()));
    } else {
        out.features = Matrix<double>(g.num_nodes(), 1, 1.0);
    }
    return out;
}

std::vector<double> dwl_feature_map(const NodeFeatureSet& g, std::span<const int> vocab) {
    if (g.degrees.size() != g.num_nodes()) throw ShapeError("degree array length != feature rows");
    const std::size_t f = g.dim();
    std::vector<double> out(vocab.size() * f, 0.0);
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        auto it = std::lower_bound(vocab.begin(), vocab.end(), g.degrees[v]);
        if (it == vocab.end() || *it != g.degrees[v]) continue;
        const std::size_t slot = static_cast<std::size_t>(it - vocab.begin());
        auto row = g.features.row(v);
        for (std::size_t j = 0; j < f; ++j) out[slot * f + j] += row[j];
    }
    return out;
}

double dwl_kernel(const NodeFeatureSet& a, const NodeFeatureSet& b) {
    if (a.dim() != b.dim()) throw ShapeError("dwl_kernel feature dimensions differ");
    std::vector<int> vocab = a.degrees;
    vocab.insert(vocab.end(), b.degrees.begin(), b.degrees.end());
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    const auto pa = dwl_feature_map(a, vocab);
    const auto pb = dwl_feature_map(b, vocab);
    double s = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) s += pa[i] * pb[i];
    return s;
}

double mwl_kernel(const NodeFeatureSet& a, const NodeFeatureSet& b) {
    if (a.dim() != b.dim()) throw ShapeError("mwl_kernel feature dimensions differ");
    std::vector<double> sa(a.dim(), 0.0), sb(b.dim(), 0.0);
    for (std::size_t v = 0; v < a.num_nodes(); ++v) {
        for (std::size_t j = 0; j < a.dim(); ++j) sa[j] += a.features(v, j);
    }
    for (std::size_t v = 0; v < b.num_nodes(); ++v) {
        for (std::size_t j = 0; j < b.dim(); ++j) sb[j] += b.features(v, j);
    }
    double s = 0;
    for (std::size_t j = 0; j < sa.size(); ++j) s += sa[j] * sb[j];
    return s;
}

ColorHistogram color_histogram(const ColorMap& colors) {
    ColorHistogram h;
    for (int c : colors.colors) ++h[c];
    return h;
}

double wl_subtree_kernel(const ColorHistogram& a, const ColorHistogram& b) {
    double s = 0;
    for (const auto& [color, count] : a) {
        if (auto it = b.find(color); it != b.end()) s += static_cast<double>(count) * static_cast<double>(it->second);
    }
    return s;
}

Matrix<double> gram_matrix(const GraphSet& set, KernelKind kind, int wl_rounds) {
    const std::size_t t = set.size();
    Matrix<double> gram(t, t);
    if (kind == KernelKind::wl_subtree) {
        AttributeDictionary attrs;
        std::vector<ColorMap> colors;
        for (const auto& g : set.graphs) colors.push_back(initial_colors(g, attrs));
        for (int r = 0; r < wl_rounds; ++r) {
            ColorDictionary dict;
            for (std::size_t i = 0; i < t; ++i) colors[i] = wl_refine(set.graphs[i], colors[i], dict);
        }
        std::vector<ColorHistogram> hist;
        for (const auto& c : colors) hist.push_back(color_histogram(c));
        for (std::size_t i = 0; i < t; ++i) {
            for (std::size_t j = i; j < t; ++j) gram(i, j) = gram(j, i) = wl_subtree_kernel(hist[i], hist[j]);
        }
        return gram;
    }
    std::vector<NodeFeatureSet> feats;
    for (const auto& g : set.graphs) feats.push_back(node_features(g));
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = i; j < t; ++j) {
            const double k = kind == KernelKind::dwl ? dwl_kernel(feats[i], feats[j]) : mwl_kernel(feats[i], feats[j]);
            gram(i, j) = gram(j, i) = k;
        }
    }
    return gram;
}

}  // namespace demonet
