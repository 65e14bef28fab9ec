#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "demonet/errors.hpp"
#include "demonet/kernels.hpp"
#include "demonet/model.hpp"
#include "demonet/rkhs.hpp"
#include "demonet/synth.hpp"
#include "demonet/wl.hpp"
#include "test_util.hpp"

using namespace demonet;

namespace {

std::size_t distinct(const std::vector<int>& c) { return std::set<int>(c.begin(), c.end()).size(); }

Graph random_graph(Rng& rng, int n, double p) {
    std::vector<Edge> edges;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (uniform01(rng) < p) edges.emplace_back(u, v);
    return Graph::from_edges(static_cast<std::size_t>(n), edges);
}

Graph attach_random(const Graph& g, std::size_t dim, Rng& rng) {
    std::vector<double> vals(g.num_nodes() * dim);
    for (double& x : vals) x = uniform(rng, -1, 1);
    return g.with_attributes(std::move(vals), dim);
}

NodeFeatureSet as_features(const Graph& g) {
    NodeFeatureSet s{Matrix<double>(g.num_nodes(), g.attr_dim()), {g.degrees().begin(), g.degrees().end()}};
    for (std::size_t v = 0; v < g.num_nodes(); ++v)
        for (std::size_t j = 0; j < g.attr_dim(); ++j) s.features(v, j) = g.attribute(static_cast<NodeId>(v))[j];
    return s;
}

double row_dot(const NodeFeatureSet& a, std::size_t u, const NodeFeatureSet& b, std::size_t v) {
    double s = 0;
    for (std::size_t j = 0; j < a.dim(); ++j) s += a.features(u, j) * b.features(v, j);
    return s;
}

// Pairwise sums over all node pairs, no factoring.
double dwl_pairs(const NodeFeatureSet& a, const NodeFeatureSet& b) {
    double s = 0;
    for (std::size_t u = 0; u < a.num_nodes(); ++u)
        for (std::size_t v = 0; v < b.num_nodes(); ++v)
            if (a.degrees[u] == b.degrees[v]) s += row_dot(a, u, b, v);
    return s;
}

double mwl_pairs(const NodeFeatureSet& a, const NodeFeatureSet& b) {
    double s = 0;
    for (std::size_t u = 0; u < a.num_nodes(); ++u)
        for (std::size_t v = 0; v < b.num_nodes(); ++v) s += row_dot(a, u, b, v);
    return s;
}

Model<double> weight_model(std::size_t in_dim, DegreeIndex index, int layers, std::uint64_t seed) {
    ModelConfig cfg;
    cfg.layers = layers;
    cfg.hidden = 8;
    cfg.variant = Variant::weight;
    cfg.task = TaskKind::graph;
    cfg.pooling = Pooling::degree;
    cfg.init_seed = seed;
    return Model<double>(cfg, in_dim, std::move(index));
}

}  // namespace

TEST_CASE("WL refinement on small graphs") {
    const Graph c6 = synth_cycle(6);
    const ColorMap stable = wl_stable_colors(c6, uniform_colors(6), 10);
    CHECK(stable.num_colors() == 1);

    const ColorMap p3 = wl_refine(testutil::path_graph(3), uniform_colors(3));
    CHECK(p3.num_colors() == 2);
    CHECK(p3.colors[0] == p3.colors[2]);
    CHECK(p3.colors[0] != p3.colors[1]);

    const ColorMap star = wl_refine(testutil::star_graph(4), uniform_colors(5));
    CHECK(star.num_colors() == 2);

    // P5 needs two rounds to separate the ends, next-to-ends and the middle.
    const Graph p5 = testutil::path_graph(5);
    const ColorMap r1 = wl_refine(p5, uniform_colors(5));
    CHECK(distinct(r1.colors) == 2);
    CHECK(distinct(wl_refine(p5, r1).colors) == 3);
}

TEST_CASE("WL test verdicts") {
    // C6 and two triangles: 2-regular on 6 nodes, 1-WL cannot tell them apart.
    CHECK(wl_test(synth_cycle(6), synth_disjoint_cycles(2, 3), 5) == WlVerdict::possibly_isomorphic);
    CHECK(wl_test(testutil::path_graph(4), testutil::star_graph(3), 5) == WlVerdict::non_isomorphic);
    CHECK(wl_test(testutil::path_graph(5), testutil::path_graph(4), 5) == WlVerdict::non_isomorphic);

    Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const Graph g = random_graph(rng, 9, 0.35);
        std::vector<NodeId> perm(9);
        std::iota(perm.begin(), perm.end(), 0);
        shuffle(perm.begin(), perm.end(), rng);
        CHECK(wl_test(g, g.relabeled(perm), 5) == WlVerdict::possibly_isomorphic);
    }
}

TEST_CASE("subtree codes") {
    // Star centre with attribute a and leaves b, b, c.
    const Graph star = testutil::star_graph(3).with_attributes({0, 1, 1, 2}, 1, AttributeKind::categorical);
    AttributeDictionary dict;
    for (std::size_t v = 0; v < 4; ++v) dict.insert(star.attribute(static_cast<NodeId>(v)));
    const SubtreeCode code = subtree_code(star, 0, dict);
    CHECK(code.degree == 3);
    CHECK(code.seed_code == 0);
    CHECK(code.neighbor_multiset == std::vector<int>{1, 1, 2});
    CHECK(subtree_code(star, 1, dict) == subtree_code(star, 2, dict));
    CHECK_FALSE(subtree_code(star, 1, dict) == subtree_code(star, 3, dict));

    // Storage order of neighbours does not matter.
    const Graph shuffled = star.with_shuffled_neighbors(99);
    CHECK(subtree_code(shuffled, 0, dict) == code);

    CHECK_THROWS_AS(subtree_code(testutil::star_graph(3), 0, dict), ValidationError);
}

TEST_CASE("kernel values on a path with scalar attributes") {
    const Graph p3 = testutil::path_graph(3).with_attributes({1, 2, 3}, 1);
    const NodeFeatureSet f = node_features(p3);
    // Degree-1 nodes sum to 4, the degree-2 node is 2.
    CHECK(dwl_kernel(f, f) == 20.0);
    CHECK(mwl_kernel(f, f) == 36.0);
    const std::vector<int> vocab{1, 2, 5};
    CHECK(dwl_feature_map(f, vocab) == std::vector<double>{4, 2, 0});

    const NodeFeatureSet plain = node_features(testutil::path_graph(3));
    CHECK(plain.dim() == 1);
    CHECK(dwl_kernel(plain, plain) == 5.0);

    ColorHistogram a{{0, 2}, {1, 1}}, b{{0, 1}, {1, 3}, {4, 9}};
    CHECK(wl_subtree_kernel(a, b) == 5.0);
}

TEST_CASE("factored kernels equal pairwise sums") {
    Rng rng(31);
    for (int rep = 0; rep < 40; ++rep) {
        const auto a = as_features(attach_random(random_graph(rng, 3 + static_cast<int>(uniform_index(rng, 8)), 0.4), 3, rng));
        const auto b = as_features(attach_random(random_graph(rng, 3 + static_cast<int>(uniform_index(rng, 8)), 0.4), 3, rng));
        CHECK(dwl_kernel(a, b) == doctest::Approx(dwl_pairs(a, b)).epsilon(1e-12));
        CHECK(mwl_kernel(a, b) == doctest::Approx(mwl_pairs(a, b)).epsilon(1e-12));
        CHECK(dwl_kernel(a, b) == doctest::Approx(dwl_kernel(b, a)).epsilon(1e-12));
    }
}

TEST_CASE("subtree kernel counts colour-sharing pairs") {
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const Graph a = random_graph(rng, 8, 0.3), b = random_graph(rng, 8, 0.3);
        ColorDictionary dict;
        const ColorMap ca = wl_refine(a, uniform_colors(8), dict);
        const ColorMap cb = wl_refine(b, uniform_colors(8), dict);
        double pairs = 0;
        for (int x : ca.colors)
            for (int y : cb.colors) pairs += x == y;
        CHECK(wl_subtree_kernel(color_histogram(ca), color_histogram(cb)) == pairs);
    }
}

TEST_CASE("gram matrices are positive semidefinite") {
    Rng rng(12);
    GraphSet cont, cat;
    for (int i = 0; i < 10; ++i) {
        const Graph g = random_graph(rng, 4 + static_cast<int>(uniform_index(rng, 6)), 0.4);
        cont.graphs.push_back(attach_random(g, 2, rng));
        std::vector<double> labels(g.num_nodes());
        for (double& x : labels) x = static_cast<double>(uniform_index(rng, 3));
        cat.graphs.push_back(g.with_attributes(std::move(labels), 1, AttributeKind::categorical));
    }
    cont.attr_dim = 2;
    cat.attr_dim = 1;

    auto check_psd = [&](const Matrix<double>& k) {
        for (std::size_t i = 0; i < k.rows(); ++i)
            for (std::size_t j = 0; j < k.cols(); ++j) CHECK(k(i, j) == doctest::Approx(k(j, i)));
        for (int rep = 0; rep < 200; ++rep) {
            std::vector<double> c(k.rows());
            for (double& x : c) x = uniform(rng, -1, 1);
            double q = 0;
            for (std::size_t i = 0; i < k.rows(); ++i)
                for (std::size_t j = 0; j < k.cols(); ++j) q += c[i] * k(i, j) * c[j];
            CHECK(q > -1e-9);
        }
    };
    check_psd(gram_matrix(cont, KernelKind::dwl));
    check_psd(gram_matrix(cont, KernelKind::mwl));
    check_psd(gram_matrix(cat, KernelKind::wl_subtree, 2));

    CHECK_THROWS_AS(gram_matrix(cont, KernelKind::wl_subtree), UnsupportedError);
}

TEST_CASE("pooled coordinate versus relu of the DWL kernel") {
    SUBCASE("a degree absent from the graph gives zero on both sides") {
        const Graph star = testutil::star_graph(3).with_attributes({1, -1, 0.5, 2}, 1);
        const std::vector<int> degs{1, 2, 3};
        const Model<double> model = weight_model(1, DegreeIndex::from_degrees(degs), 1, 4);
        for (std::size_t j = 0; j < 8; ++j) {
            const RkhsCheck r = rkhs_identity_check(model, star, 1, 1, j);
            CHECK(r.lhs == 0.0);
            CHECK(r.rhs == 0.0);
        }
    }
    SUBCASE("a single node in the slice matches exactly") {
        const Graph star = testutil::star_graph(3).with_attributes({1, -1, 0.5, 2}, 1);
        const Model<double> model = weight_model(1, DegreeIndex::from_graph(star), 2, 6);
        for (int k = 1; k <= 2; ++k)
            for (std::size_t j = 0; j < 8; ++j) CHECK(rkhs_identity_check(model, star, k, 1, j).error < 1e-12);
    }
    SUBCASE("pooling rectified rows never falls below rectifying the pooled row") {
        Rng rng(77);
        for (int rep = 0; rep < 10; ++rep) {
            const Graph g = attach_random(random_graph(rng, 8, 0.35), 3, rng);
            const Model<double> model = weight_model(3, DegreeIndex::from_graph(g), 2, rng());
            const std::size_t slots = model.degree_index().num_tasks();
            for (int k = 1; k <= 2; ++k)
                for (std::size_t i = 0; i < slots; ++i)
                    for (std::size_t j = 0; j < 8; ++j) {
                        const RkhsCheck r = rkhs_identity_check(model, g, k, i, j);
                        CHECK(r.lhs >= r.rhs - 1e-12);
                    }
        }
    }
    SUBCASE("invalid requests") {
        const Graph g = testutil::path_graph(3).with_attributes({1, 2, 3}, 1);
        const Model<double> model = weight_model(1, DegreeIndex::from_graph(g), 1, 0);
        CHECK_THROWS_AS(rkhs_identity_check(model, g, 0, 0, 0), ValidationError);
        CHECK_THROWS_AS(rkhs_identity_check(model, g, 2, 0, 0), ValidationError);
        CHECK_THROWS_AS(rkhs_identity_check(model, g, 1, 2, 0), ValidationError);
        CHECK_THROWS_AS(rkhs_identity_check(model, g, 1, 0, 8), ValidationError);

        ModelConfig cfg;
        cfg.layers = 1;
        cfg.hidden = 4;
        cfg.variant = Variant::hash;
        cfg.task = TaskKind::graph;
        const Model<double> hashed(cfg, 1, DegreeIndex::from_graph(g));
        CHECK_THROWS_AS(rkhs_identity_check(hashed, g, 1, 0, 0), UnsupportedError);
    }
}
