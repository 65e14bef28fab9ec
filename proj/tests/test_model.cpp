#include <doctest.h>

#include <cmath>
#include <numeric>

#include "demonet/errors.hpp"
#include "demonet/hashing.hpp"
#include "demonet/model.hpp"
#include "demonet/model_io.hpp"
#include "demonet/synth.hpp"
#include "demonet/training.hpp"
#include "test_util.hpp"

using namespace demonet;
using M = Matrix<double>;

namespace {

Graph with_features(const Graph& g, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> vals(g.num_nodes() * dim);
    for (double& x : vals) x = uniform(rng, -1, 1);
    return g.with_attributes(std::move(vals), dim);
}

ModelConfig config(Variant v, int layers, int hidden, TaskKind task = TaskKind::node) {
    ModelConfig c;
    c.variant = v;
    c.layers = layers;
    c.hidden = hidden;
    c.task = task;
    c.classes = 3;
    c.init_seed = 41;
    c.hash_seed = 42;
    return c;
}

M attributes(const Graph& g) {
    M x(g.num_nodes(), g.attr_dim());
    for (std::size_t v = 0; v < g.num_nodes(); ++v)
        for (std::size_t j = 0; j < g.attr_dim(); ++j) x(v, j) = g.attribute(static_cast<NodeId>(v))[j];
    return x;
}

// Sum of neighbour rows, computed from the edge list.
M neighbour_rows(const Graph& g, const M& h) {
    M out(h.rows(), h.cols());
    for (auto [u, v] : g.edges())
        for (std::size_t j = 0; j < h.cols(); ++j) {
            out(u, j) += h(v, j);
            out(v, j) += h(u, j);
        }
    return out;
}

double relu(double x) { return x > 0 ? x : 0; }

void check_close(const M& a, const M& b, double tol = 1e-12) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.data()[i] - b.data()[i]) < tol);
}

}  // namespace

TEST_CASE("config validation") {
    ModelConfig c = config(Variant::weight, 2, 7);
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.hidden = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.layers = 0;
    CHECK_NOTHROW(c.validate());
    CHECK(parse_variant("hash") == Variant::hash);
    CHECK_THROWS(parse_variant("nope"));
    CHECK(parse_pooling("mean") == Pooling::mean);
}

TEST_CASE("weight variant layer matches a direct computation") {
    const Graph g = with_features(synth_degree_classes(std::vector<DegreeClass>{{0, 2, 6}, {1, 3, 6}}, 3), 3, 7);
    const Model<double> model(config(Variant::weight, 1, 8), 3, DegreeIndex::from_graph(g));
    const M x = attributes(g);
    const M n = neighbour_rows(g, x);
    const auto& w0 = model.parameter("layer1.W0");
    const auto& wg = model.parameter("layer1.Wg");
    M expected(g.num_nodes(), 8);
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        const int d = g.degree(static_cast<NodeId>(v));
        const auto& wd = model.parameter("layer1.Wdeg." + std::to_string(d));
        for (std::size_t c = 0; c < 4; ++c) {
            double seed = 0, nb = 0;
            for (std::size_t r = 0; r < 3; ++r) {
                seed += x(v, r) * w0(r, c);
                nb += n(v, r) * (wg(r, c) + wd(r, c));
            }
            expected(v, c) = relu(seed);
            expected(v, 4 + c) = relu(nb);
        }
    }
    const auto outs = layer_outputs(model, g);
    REQUIRE(outs.size() == 2);
    check_close(outs[0], x);
    check_close(outs[1], expected);
}

TEST_CASE("neighbour aggregation properties") {
    SUBCASE("an isolated node has a zero neighbour half") {
        std::vector<Edge> edges{{0, 1}};
        const Graph g = with_features(Graph::from_edges(3, edges), 2, 1);
        for (Variant v : {Variant::weight, Variant::hash}) {
            const Model<double> model(config(v, 1, 6), 2, DegreeIndex::from_graph(g));
            const M h = layer_outputs(model, g)[1];
            for (std::size_t c = 3; c < 6; ++c) CHECK(h(2, c) == 0.0);
        }
    }
    SUBCASE("output does not depend on neighbour storage order") {
        const Graph g = with_features(synth_random_edges(15, 30, 4), 3, 2);
        for (Variant v : {Variant::weight, Variant::hash, Variant::gcn}) {
            const Model<double> model(config(v, 2, 8), 3, DegreeIndex::from_graph(g));
            check_close(layer_outputs(model, g)[2], layer_outputs(model, g.with_shuffled_neighbors(5))[2], 1e-12);
        }
    }
    SUBCASE("equal neighbour sums at different degrees are told apart") {
        // Node 0 has one neighbour with feature 2; node 2 has two neighbours with feature 1.
        std::vector<Edge> edges{{0, 1}, {2, 3}, {2, 4}};
        const Graph g = Graph::from_edges(5, edges).with_attributes({0, 2, 0, 1, 1}, 1);
        const Model<double> model(config(Variant::weight, 1, 8), 1, DegreeIndex::from_graph(g));
        const M h = layer_outputs(model, g)[1];
        double diff = 0;
        for (std::size_t c = 4; c < 8; ++c) diff += std::abs(h(0, c) - h(2, c));
        CHECK(diff > 1e-6);
    }
    SUBCASE("permuting nodes permutes the outputs") {
        const Graph g = with_features(synth_random_edges(12, 20, 9), 2, 3);
        std::vector<NodeId> perm(12);
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(1);
        shuffle(perm.begin(), perm.end(), rng);
        for (Variant v : {Variant::weight, Variant::hash, Variant::gcn}) {
            const Model<double> model(config(v, 2, 6), 2, DegreeIndex::from_graph(g));
            const M a = layer_outputs(model, g)[2];
            const M b = layer_outputs(model, g.relabeled(perm))[2];
            for (std::size_t u = 0; u < 12; ++u)
                for (std::size_t c = 0; c < a.cols(); ++c) CHECK(std::abs(a(u, c) - b(perm[u], c)) < 1e-12);
        }
    }
}

TEST_CASE("hash variant layer matches a direct computation") {
    const Graph g = with_features(synth_random_edges(10, 18, 2), 5, 4);
    ModelConfig cfg = config(Variant::hash, 1, 6);
    cfg.hash_dim = 3;
    const Model<double> model(cfg, 5, DegreeIndex::from_graph(g));
    const auto& layer = model.layers()[0];
    const M n = neighbour_rows(g, attributes(g));
    const auto& w = model.parameter("layer1.W");
    REQUIRE(w.rows() == 3);
    const M h = layer_outputs(model, g)[1];
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        const std::vector<double> row(n.row(v).begin(), n.row(v).end());
        std::vector<double> z = phi(row, layer.hashing.global);
        const auto task = model.degree_index().task_of(g.degree(static_cast<NodeId>(v)));
        if (task) {
            const auto zt = phi(row, layer.hashing.tasks[static_cast<std::size_t>(*task)]);
            for (std::size_t i = 0; i < z.size(); ++i) z[i] += zt[i];
        }
        for (std::size_t c = 0; c < 3; ++c) {
            double s = 0;
            for (std::size_t i = 0; i < 3; ++i) s += z[i] * w(i, c);
            CHECK(std::abs(h(v, 3 + c) - relu(s)) < 1e-12);
        }
    }
}

TEST_CASE("renormalized adjacency baseline") {
    const Graph single = Graph::from_edges(1, std::vector<Edge>{}).with_attributes({0.5, -1}, 2);
    const Model<double> m1(config(Variant::gcn, 1, 4), 2, DegreeIndex::from_graph(single));
    const auto& w = m1.parameter("layer1.W");
    const M h = layer_outputs(m1, single)[1];
    for (std::size_t c = 0; c < 4; ++c) CHECK(h(0, c) == doctest::Approx(relu(0.5 * w(0, c) - w(1, c))));

    // Two nodes and one edge: every entry of the renormalized matrix is 1/2.
    std::vector<Edge> e{{0, 1}};
    const Graph pair = Graph::from_edges(2, e).with_attributes({1, 3}, 1);
    const Model<double> m2(config(Variant::gcn, 1, 4), 1, DegreeIndex::from_graph(pair));
    const auto& w2 = m2.parameter("layer1.W");
    const M h2 = layer_outputs(m2, pair)[1];
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(h2(0, c) == doctest::Approx(relu(2 * w2(0, c))));
        CHECK(h2(1, c) == doctest::Approx(relu(2 * w2(0, c))));
    }

    // On a regular graph with constant features every row is the same.
    const Graph reg = synth_regular(12, 3, 5).with_attributes(std::vector<double>(12, 1.0), 1);
    const Model<double> m3(config(Variant::gcn, 2, 4), 1, DegreeIndex::from_graph(reg));
    const M h3 = layer_outputs(m3, reg)[2];
    for (std::size_t v = 1; v < 12; ++v)
        for (std::size_t c = 0; c < 4; ++c) CHECK(h3(v, c) == doctest::Approx(h3(0, c)));
}

TEST_CASE("degree pooling") {
    SUBCASE("zero layers pools the raw features per degree") {
        const Graph p4 = testutil::path_graph(4).with_attributes({1, 2, 3, 4}, 1);
        const Model<double> model(config(Variant::weight, 0, 4, TaskKind::graph), 1, DegreeIndex::from_graph(p4));
        const GraphRepr r = graph_repr(model, p4);
        REQUIRE(r.slots_per_layer == 2);
        CHECK(r.at(0, 0, 0) == 5.0);
        CHECK(r.at(0, 1, 0) == 5.0);
        CHECK(r.slots[1].degree == 2);
        CHECK(model.repr_width() == 2);
    }
    SUBCASE("relabeling leaves the representation unchanged") {
        const Graph g = with_features(synth_random_edges(14, 25, 6), 3, 8);
        const Model<double> model(config(Variant::weight, 2, 8, TaskKind::graph), 3, DegreeIndex::from_graph(g));
        std::vector<NodeId> perm(14);
        std::iota(perm.rbegin(), perm.rend(), 0);
        const auto a = graph_repr(model, g).values, b = graph_repr(model, g.relabeled(perm)).values;
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
    SUBCASE("a hexagon and two triangles pool identically") {
        const Graph c6 = synth_cycle(6).with_attributes(std::vector<double>(6, 1.0), 1);
        const Graph tri = synth_disjoint_cycles(2, 3).with_attributes(std::vector<double>(6, 1.0), 1);
        const Model<double> model(config(Variant::weight, 2, 8, TaskKind::graph), 1, DegreeIndex::from_graph(c6));
        CHECK(graph_repr(model, c6).values == graph_repr(model, tri).values);
    }
    SUBCASE("mean pooling is a single slot") {
        ModelConfig cfg = config(Variant::weight, 1, 4, TaskKind::graph);
        cfg.pooling = Pooling::mean;
        const Graph p4 = testutil::path_graph(4).with_attributes({1, 2, 3, 4}, 1);
        const Model<double> model(cfg, 1, DegreeIndex::from_graph(p4));
        const GraphRepr r = graph_repr(model, p4);
        CHECK(r.slots_per_layer == 1);
        CHECK(r.at(0, 0, 0) == 2.5);
        CHECK(model.repr_width() == 5);
    }
}

TEST_CASE("parameter layout") {
    const Graph g = with_features(synth_degree_classes(std::vector<DegreeClass>{{0, 1, 4}, {1, 2, 4}, {2, 3, 4}}, 1), 5, 1);
    const Model<double> model(config(Variant::weight, 1, 8), 5, DegreeIndex::from_graph(g));
    const std::size_t tasks = model.degree_index().num_tasks();
    CHECK(tasks == 3);
    const std::size_t classifier = model.parameters()[model.classifier_index()].size();
    CHECK(model.parameter_count() - classifier == 5 * 4 + (tasks + 1) * 5 * 4);
    CHECK(model.parameter("classifier").rows() == 8);
    CHECK(model.parameter("classifier").cols() == 3);

    const Model<double> again(config(Variant::weight, 1, 8), 5, DegreeIndex::from_graph(g));
    CHECK(again.parameters() == model.parameters());
}

TEST_CASE("unseen degrees") {
    const Graph train = with_features(synth_cycle(5), 1, 1);
    const Graph other = with_features(testutil::star_graph(3), 1, 2);
    ModelConfig cfg = config(Variant::weight, 1, 4);
    const Model<double> lenient(cfg, 1, DegreeIndex::from_graph(train));
    const auto in = lenient.prepare(other);
    CHECK(in.unseen_degree_nodes == 4);

    cfg.fallback = DegreeFallback::strict;
    const Model<double> strict(cfg, 1, DegreeIndex::from_graph(train));
    CHECK_THROWS_AS(strict.prepare(other), ValidationError);
    CHECK_THROWS_AS(strict.prepare(testutil::star_graph(3)), ValidationError);
}

TEST_CASE("zero classifier gives uniform predictions") {
    const Graph g = with_features(synth_random_edges(9, 14, 3), 2, 5);
    Model<double> model(config(Variant::weight, 2, 4), 2, DegreeIndex::from_graph(g));
    model.parameter("classifier").fill(0.0);
    const auto in = model.prepare(g);
    std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1, 2};
    std::vector<std::size_t> rows(9);
    std::iota(rows.begin(), rows.end(), 0);
    const Evaluation e = evaluate(model, in, labels, rows);
    CHECK(e.loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("saved models reload with identical outputs") {
    testutil::TempDir dir;
    const Graph g = with_features(synth_random_edges(10, 16, 2), 3, 1);
    for (Variant v : {Variant::weight, Variant::hash, Variant::gcn}) {
        const Model<float> model(config(v, 2, 6), 3, DegreeIndex::from_graph(g, true));
        const auto stem = dir.path() / to_string(v);
        save_model(stem, model);
        const Model<float> back = load_model(stem);
        CHECK(back.parameters() == model.parameters());
        CHECK(back.parameter_names() == model.parameter_names());
        CHECK(back.degree_index().bucketing());
        CHECK(layer_outputs(back, g)[2] == layer_outputs(model, g)[2]);
    }
    CHECK_THROWS(load_model(dir.path() / "missing"));
}
