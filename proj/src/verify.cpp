#include "demonet/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "demonet/errors.hpp"
#include "demonet/gradcheck.hpp"
#include "demonet/hashing.hpp"
#include "demonet/model.hpp"
#include "demonet/rkhs.hpp"
#include "demonet/training.hpp"
#include "demonet/wl.hpp"

namespace demonet {

Graph random_graph(Rng& rng, int min_n, int max_n, double p) {
    const int n = min_n + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_n - min_n + 1)));
    std::vector<Edge> edges;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (uniform01(rng) < p) edges.emplace_back(u, v);
        }
    }
    return Graph::from_edges(static_cast<std::size_t>(n), edges);
}

Graph with_random_attributes(const Graph& g, std::size_t dim, Rng& rng) {
    std::vector<double> values(g.num_nodes() * dim);
    for (double& x : values) x = uniform(rng, -1.0, 1.0);
    return g.with_attributes(std::move(values), dim, AttributeKind::continuous);
}

Graph with_random_categories(const Graph& g, int alphabet, Rng& rng) {
    std::vector<double> values(g.num_nodes());
    for (double& x : values) x = static_cast<double>(uniform_index(rng, static_cast<std::uint64_t>(alphabet)));
    return g.with_attributes(std::move(values), 1, AttributeKind::categorical);
}

double dwl_brute_force(const NodeFeatureSet& a, const NodeFeatureSet& b) {
    double s = 0;
    for (std::size_t v = 0; v < a.num_nodes(); ++v) {
        for (std::size_t u = 0; u < b.num_nodes(); ++u) {
            if (a.degrees[v] != b.degrees[u]) continue;
            for (std::size_t j = 0; j < a.dim(); ++j) s += a.features(v, j) * b.features(u, j);
        }
    }
    return s;
}

double mwl_brute_force(const NodeFeatureSet& a, const NodeFeatureSet& b) {
    double s = 0;
    for (std::size_t v = 0; v < a.num_nodes(); ++v) {
        for (std::size_t u = 0; u < b.num_nodes(); ++u) {
            for (std::size_t j = 0; j < a.dim(); ++j) s += a.features(v, j) * b.features(u, j);
        }
    }
    return s;
}

double wl_subtree_brute_force(std::span<const int> colors_a, std::span<const int> colors_b) {
    double s = 0;
    for (int ca : colors_a) {
        for (int cb : colors_b) s += ca == cb ? 1.0 : 0.0;
    }
    return s;
}

double min_eigenvalue(const Matrix<double>& m) {
    if (m.rows() != m.cols()) throw ShapeError("eigenvalues need a square matrix");
    if (m.rows() == 0) return 0;
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope needs at least two points");
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

namespace {

using json = nlohmann::json;

std::string num(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

Rng instance_rng(const VerifyOptions& opts, std::uint64_t group, std::uint64_t instance) {
    return Rng(mix64(opts.seed ^ mix64(group << 32 | instance)));
}

Graph maybe_shuffled(const Graph& g, const VerifyOptions& opts, Rng& rng) {
    return opts.mutate_order ? g.with_shuffled_neighbors(rng()) : g;
}

Model<double> random_model(Variant variant, std::size_t input_dim, const DegreeIndex& index, Rng& rng,
                           TaskKind task = TaskKind::node) {
    ModelConfig cfg;
    cfg.variant = variant;
    cfg.task = task;
    cfg.classes = 3;
    cfg.init_seed = rng();
    cfg.hash_seed = rng();
    return Model<double>(cfg, input_dim, index);
}

// H_0..H_K of a node-task forward on g exactly as stored (no re-sorting).
std::vector<Matrix<double>> node_layers(const Model<double>& model, const Graph& g) {
    Tape<double> tape;
    const auto pass = model.forward(tape, model.prepare(g));
    std::vector<Matrix<double>> out;
    for (Var v : pass.layers) out.push_back(tape.value(v));
    return out;
}

double row_distance(const Matrix<double>& m, std::size_t a, std::size_t b, std::size_t from, std::size_t to) {
    double s = 0;
    for (std::size_t j = from; j < to; ++j) s += (m(a, j) - m(b, j)) * (m(a, j) - m(b, j));
    return std::sqrt(s);
}

json graph_json(const Graph& g) {
    json edges = json::array();
    for (auto [u, v] : g.edges()) edges.push_back({u, v});
    return {{"nodes", g.num_nodes()}, {"edges", edges}};
}

PropertyResult finish(std::string group, std::string name, int failures, int total, const std::string& extra,
                      json replay) {
    PropertyResult r;
    r.group = std::move(group);
    r.name = std::move(name);
    r.passed = failures == 0;
    std::ostringstream d;
    d << total - failures << "/" << total << " instances";
    if (!extra.empty()) d << ", " << extra;
    r.detail = d.str();
    if (!r.passed) r.replay = replay.dump();
    return r;
}

}  // namespace

std::vector<PropertyResult> verify_aggregation_properties(const VerifyOptions& opts) {
    std::vector<PropertyResult> out;
    for (Variant variant : {Variant::weight, Variant::hash}) {
        const std::string suffix = std::string(" (") + to_string(variant) + ")";
        const std::uint64_t vbase = variant == Variant::weight ? 0 : 1000000;

        int fail_order = 0, fail_seed = 0, fail_degree = 0;
        json replay_order, replay_seed, replay_degree;
        double min_seed_gap = INFINITY, min_degree_gap = INFINITY;
        for (int i = 0; i < opts.lemma_instances; ++i) {
            const auto idx = static_cast<std::uint64_t>(i);
            {
                Rng rng = instance_rng(opts, 10 + vbase, idx);
                Graph g = with_random_attributes(random_graph(rng, 6, 14, 0.35), 4, rng);
                g = maybe_shuffled(g, opts, rng);
                const auto model = random_model(variant, 4, DegreeIndex::from_graph(g), rng);
                const std::uint64_t shuffle_seed = rng();
                if (node_layers(model, g) != node_layers(model, g.with_shuffled_neighbors(shuffle_seed))) {
                    if (fail_order++ == 0) replay_order = {{"instance", i}, {"shuffle_seed", shuffle_seed}, {"graph", graph_json(g)}};
                }
            }
            {
                // Nodes a and b share their neighbour set but not their attributes.
                Rng rng = instance_rng(opts, 20 + vbase, idx);
                Graph base = random_graph(rng, 4, 10, 0.3);
                const auto n = static_cast<NodeId>(base.num_nodes());
                std::vector<Edge> edges = base.edges();
                const int k = 1 + static_cast<int>(uniform_index(rng, 3));
                std::vector<NodeId> pool(static_cast<std::size_t>(n));
                std::iota(pool.begin(), pool.end(), 0);
                shuffle(pool.begin(), pool.end(), rng);
                for (int s = 0; s < k; ++s) {
                    edges.emplace_back(n, pool[static_cast<std::size_t>(s)]);
                    edges.emplace_back(n + 1, pool[static_cast<std::size_t>(s)]);
                }
                Graph g = with_random_attributes(Graph::from_edges(static_cast<std::size_t>(n) + 2, edges), 4, rng);
                g = maybe_shuffled(g, opts, rng);
                const auto model = random_model(variant, 4, DegreeIndex::from_graph(g), rng);
                const auto layers = node_layers(model, g);
                const auto& l1 = model.layers().front();
                const double gap = row_distance(layers[1], static_cast<std::size_t>(n), static_cast<std::size_t>(n) + 1, 0,
                                                l1.seed_width);
                min_seed_gap = std::min(min_seed_gap, gap);
                if (!(gap > 1e-6) && fail_seed++ == 0) replay_seed = {{"instance", i}, {"gap", gap}, {"graph", graph_json(g)}};
            }
            {
                // Same attributes everywhere; two nodes of different degree.
                Rng rng = instance_rng(opts, 30 + vbase, idx);
                Graph g;
                NodeId a = -1, b = -1;
                while (a < 0) {
                    g = random_graph(rng, 5, 12, 0.4);
                    for (NodeId u = 0; u < static_cast<NodeId>(g.num_nodes()) && a < 0; ++u) {
                        for (NodeId v = u + 1; v < static_cast<NodeId>(g.num_nodes()); ++v) {
                            if (g.degree(u) > 0 && g.degree(v) > 0 && g.degree(u) != g.degree(v)) {
                                a = u;
                                b = v;
                                break;
                            }
                        }
                    }
                }
                g = g.with_attributes(std::vector<double>(g.num_nodes() * 4, 1.0), 4, AttributeKind::categorical);
                g = maybe_shuffled(g, opts, rng);
                const auto model = random_model(variant, 4, DegreeIndex::from_graph(g), rng);
                const auto layers = node_layers(model, g);
                const auto& l1 = model.layers().front();
                const double gap = row_distance(layers[1], static_cast<std::size_t>(a), static_cast<std::size_t>(b),
                                                l1.seed_width, l1.out_dim);
                min_degree_gap = std::min(min_degree_gap, gap);
                if (!(gap > 1e-6) && fail_degree++ == 0) {
                    replay_degree = {{"instance", i}, {"nodes", {a, b}}, {"gap", gap}, {"graph", graph_json(g)}};
                }
            }
        }
        out.push_back(finish("aggregation", "order-free" + suffix, fail_order, opts.lemma_instances, "exact equality",
                             replay_order));
        out.push_back(finish("aggregation", "seed-oriented" + suffix, fail_seed, opts.lemma_instances,
                             "min gap " + num(min_seed_gap), replay_seed));
        out.push_back(finish("aggregation", "degree-aware" + suffix, fail_degree, opts.lemma_instances,
                             "min gap " + num(min_degree_gap), replay_degree));
    }
    return out;
}

std::vector<PropertyResult> verify_hash_unbiased(const VerifyOptions& opts) {
    const std::size_t dim = 16, m = 4;
    int failures = 0;
    json replay;
    double worst = 0;
    for (int p = 0; p < opts.hash_pairs; ++p) {
        Rng rng = instance_rng(opts, 40, static_cast<std::uint64_t>(p));
        std::vector<double> x(dim), y(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            x[j] = uniform(rng, -1.0, 1.0);
            y[j] = 0.5 * x[j] + 0.5 * uniform(rng, -1.0, 1.0);
        }
        const double exact = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
        double mean = 0, m2 = 0;
        for (int s = 0; s < opts.hash_specs; ++s) {
            const HashSpec spec{m, rng(), rng()};
            double value;
            if (opts.break_hash) {
                const HashSpec other{m, rng(), rng()};
                const auto px = phi(x, spec);
                const auto py = phi(y, other);
                value = std::inner_product(px.begin(), px.end(), py.begin(), 0.0);
            } else {
                value = hash_kernel(x, y, spec);
            }
            const double delta = value - mean;
            mean += delta / (s + 1);
            m2 += delta * (value - mean);
        }
        const double se = std::sqrt(m2 / (opts.hash_specs - 1)) / std::sqrt(static_cast<double>(opts.hash_specs));
        const double z = std::abs(mean - exact) / se;
        worst = std::max(worst, z);
        if (!(z < 3.0) && failures++ == 0) {
            replay = {{"pair", p}, {"x", x}, {"y", y}, {"exact", exact}, {"mean", mean}, {"standard_error", se}};
        }
    }
    return {finish("hashing", "hash kernel unbiased", failures, opts.hash_pairs,
                   "max |bias|/se " + num(worst), replay)};
}

std::vector<PropertyResult> verify_kernels(const VerifyOptions& opts) {
    int fail_dwl = 0, fail_mwl = 0, fail_wl = 0;
    double err_dwl = 0, err_mwl = 0, err_wl = 0;
    json replay_dwl, replay_mwl, replay_wl;
    for (int p = 0; p < opts.kernel_pairs; ++p) {
        Rng rng = instance_rng(opts, 50, static_cast<std::uint64_t>(p));
        const Graph a = maybe_shuffled(with_random_attributes(random_graph(rng, 1, 12, 0.35), 3, rng), opts, rng);
        const Graph b = maybe_shuffled(with_random_attributes(random_graph(rng, 1, 12, 0.35), 3, rng), opts, rng);
        const auto fa = node_features(a), fb = node_features(b);
        const double e1 = std::abs(dwl_kernel(fa, fb) - dwl_brute_force(fa, fb));
        const double e2 = std::abs(mwl_kernel(fa, fb) - mwl_brute_force(fa, fb));
        err_dwl = std::max(err_dwl, e1);
        err_mwl = std::max(err_mwl, e2);
        if (!(e1 < 1e-10) && fail_dwl++ == 0) replay_dwl = {{"pair", p}, {"a", graph_json(a)}, {"b", graph_json(b)}};
        if (!(e2 < 1e-10) && fail_mwl++ == 0) replay_mwl = {{"pair", p}, {"a", graph_json(a)}, {"b", graph_json(b)}};

        const Graph ca = maybe_shuffled(with_random_categories(random_graph(rng, 1, 12, 0.35), 3, rng), opts, rng);
        const Graph cb = maybe_shuffled(with_random_categories(random_graph(rng, 1, 12, 0.35), 3, rng), opts, rng);
        AttributeDictionary attrs;
        ColorDictionary colors;
        ColorMap ma = initial_colors(ca, attrs), mb = initial_colors(cb, attrs);
        for (int round = 0; round <= 2; ++round) {
            if (round > 0) {
                ma = wl_refine(ca, ma, colors);
                mb = wl_refine(cb, mb, colors);
            }
            const double e3 = std::abs(wl_subtree_kernel(color_histogram(ma), color_histogram(mb)) -
                                       wl_subtree_brute_force(ma.colors, mb.colors));
            err_wl = std::max(err_wl, e3);
            if (!(e3 < 1e-10) && fail_wl++ == 0) replay_wl = {{"pair", p}, {"round", round}, {"a", graph_json(ca)}, {"b", graph_json(cb)}};
        }
    }
    std::vector<PropertyResult> out;
    out.push_back(finish("kernels", "DWL factored = double sum", fail_dwl, opts.kernel_pairs,
                         "max err " + num(err_dwl), replay_dwl));
    out.push_back(finish("kernels", "MWL factored = double sum", fail_mwl, opts.kernel_pairs,
                         "max err " + num(err_mwl), replay_mwl));
    out.push_back(finish("kernels", "WL subtree histogram = double sum", fail_wl, opts.kernel_pairs,
                         "max err " + num(err_wl), replay_wl));

    Rng rng = instance_rng(opts, 51, 0);
    GraphSet continuous, discrete;
    continuous.attr_dim = 3;
    discrete.attr_dim = 1;
    for (int i = 0; i < 10; ++i) {
        continuous.graphs.push_back(with_random_attributes(random_graph(rng, 2, 12, 0.35), 3, rng));
        discrete.graphs.push_back(with_random_categories(random_graph(rng, 2, 12, 0.35), 3, rng));
    }
    const std::pair<const char*, Matrix<double>> grams[] = {
        {"DWL", gram_matrix(continuous, KernelKind::dwl)},
        {"MWL", gram_matrix(continuous, KernelKind::mwl)},
        {"WL subtree", gram_matrix(discrete, KernelKind::wl_subtree, 2)},
    };
    for (const auto& [name, gram] : grams) {
        const double lo = min_eigenvalue(gram);
        const bool ok = lo > -1e-8;
        out.push_back(finish("kernels", std::string(name) + " Gram PSD", ok ? 0 : 1, 1,
                             "min eigenvalue " + num(lo), {{"kernel", name}, {"min_eigenvalue", lo}}));
    }
    return out;
}

std::vector<PropertyResult> verify_rkhs_identity(const VerifyOptions& opts) {
    int failures = 0;
    std::size_t coords = 0, bad_coords = 0;
    double worst = 0;
    json replay;
    for (int gi = 0; gi < opts.rkhs_graphs; ++gi) {
        Rng rng = instance_rng(opts, 60, static_cast<std::uint64_t>(gi));
        const Graph g = maybe_shuffled(with_random_attributes(random_graph(rng, 2, 10, 0.35), 3, rng), opts, rng);
        const auto model = random_model(Variant::weight, 3, DegreeIndex::from_graph(g), rng, TaskKind::graph);
        bool failed = false;
        for (int k = 1; k <= model.config().layers; ++k) {
            const auto& layer = model.layers()[static_cast<std::size_t>(k - 1)];
            for (std::size_t i = 0; i < model.degree_index().num_tasks(); ++i) {
                for (std::size_t j = 0; j < layer.out_dim; ++j) {
                    const RkhsCheck c = rkhs_identity_check(model, g, k, i, j);
                    ++coords;
                    worst = std::max(worst, c.error);
                    if (c.error < 1e-6) continue;
                    ++bad_coords;
                    if (!failed && failures == 0) {
                        replay = {{"graph_index", gi}, {"k", k}, {"slot", i}, {"degree", model.degree_index().degree_values()[i]},
                                  {"j", j}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"graph", graph_json(g)}};
                    }
                    failed = true;
                }
            }
        }
        if (failed) ++failures;
    }
    std::ostringstream extra;
    extra << bad_coords << " of " << coords << " coordinates off, max err " << worst;
    return {finish("rkhs", "pooled coordinate = relu(K_DWL(G, R))", failures, opts.rkhs_graphs, extra.str(), replay)};
}

std::vector<PropertyResult> verify_subtree_injectivity(const VerifyOptions&) {
    struct Subtree {
        int seed_attr;
        std::vector<int> neighbors;  // in storage order
    };
    const int alphabet = 3, max_degree = 4;
    std::vector<Subtree> all;
    for (int a = 0; a < alphabet; ++a) {
        for (int d = 0; d <= max_degree; ++d) {
            std::vector<int> seq(static_cast<std::size_t>(d), 0);
            while (true) {
                all.push_back({a, seq});
                int pos = d - 1;
                while (pos >= 0 && seq[static_cast<std::size_t>(pos)] == alphabet - 1) seq[static_cast<std::size_t>(pos--)] = 0;
                if (pos < 0) break;
                ++seq[static_cast<std::size_t>(pos)];
            }
        }
    }

    AttributeDictionary dict;
    for (int a = 0; a < alphabet; ++a) {
        const double value = a;
        dict.insert(std::span<const double>(&value, 1));
    }
    std::vector<SubtreeCode> codes;
    for (const auto& s : all) {
        // Star with the seed at node 0; leaves listed in reverse so storage
        // order differs from insertion order.
        const std::size_t d = s.neighbors.size();
        std::vector<std::size_t> offsets{0, d};
        std::vector<NodeId> nbrs;
        for (std::size_t i = d; i-- > 0;) nbrs.push_back(static_cast<NodeId>(i + 1));
        for (std::size_t i = 0; i < d; ++i) offsets.push_back(offsets.back() + 1);
        std::vector<NodeId> flat = nbrs;
        for (std::size_t i = 0; i < d; ++i) flat.push_back(0);
        Graph g = Graph::from_csr(offsets, flat);
        std::vector<double> attrs{static_cast<double>(s.seed_attr)};
        for (int x : s.neighbors) attrs.push_back(x);
        g = g.with_attributes(std::move(attrs), 1, AttributeKind::categorical);
        codes.push_back(subtree_code(g, 0, dict));
    }

    // Structural identity: same seed attribute and one neighbour sequence is a
    // permutation of the other.
    auto identical = [](const Subtree& x, const Subtree& y) {
        if (x.seed_attr != y.seed_attr || x.neighbors.size() != y.neighbors.size()) return false;
        std::vector<std::size_t> perm(x.neighbors.size());
        std::iota(perm.begin(), perm.end(), 0);
        do {
            bool match = true;
            for (std::size_t i = 0; i < perm.size() && match; ++i) match = x.neighbors[perm[i]] == y.neighbors[i];
            if (match) return true;
        } while (std::next_permutation(perm.begin(), perm.end()));
        return false;
    };

    int collisions = 0, splits = 0;
    json replay_c, replay_s;
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            const bool same_code = codes[i] == codes[j];
            const bool same_tree = identical(all[i], all[j]);
            if (same_code && !same_tree && collisions++ == 0) {
                replay_c = {{"a", {all[i].seed_attr, all[i].neighbors}}, {"b", {all[j].seed_attr, all[j].neighbors}}};
            }
            if (!same_code && same_tree && splits++ == 0) {
                replay_s = {{"a", {all[i].seed_attr, all[i].neighbors}}, {"b", {all[j].seed_attr, all[j].neighbors}}};
            }
        }
    }
    const int pairs = static_cast<int>(all.size() * (all.size() - 1) / 2);
    const std::string extra = std::to_string(all.size()) + " subtrees";
    return {finish("subtree", "no collisions", collisions, pairs, extra, replay_c),
            finish("subtree", "no false splits", splits, pairs, extra, replay_s)};
}

std::vector<PropertyResult> verify_gradients(const VerifyOptions& opts) {
    std::vector<PropertyResult> out;
    for (Variant variant : {Variant::weight, Variant::hash}) {
        Rng rng = instance_rng(opts, 70 + static_cast<std::uint64_t>(variant), 0);
        Graph g = with_random_attributes(random_graph(rng, 12, 12, 0.3), 3, rng);
        g = maybe_shuffled(g, opts, rng);
        std::vector<int> labels(12);
        for (int& y : labels) y = static_cast<int>(uniform_index(rng, 3));
        const std::vector<std::size_t> train{0, 1, 2, 3, 4, 5};
        Model<double> model = random_model(variant, 3, DegreeIndex::from_graph(g), rng);
        const auto input = model.prepare(g);
        const auto masks = model.dropout_masks(input, 0.6, rng);
        const Objective<double> loss = [&](Tape<double>& tape, std::span<const Var> params) {
            const auto pass = model.forward(tape, input, params, &masks);
            return loss_with_l2(tape, pass.logits, labels, train, params, 5e-4);
        };
        GradCheckOptions gopts;
        gopts.max_coords_per_param = 48;
        gopts.seed = rng();
        const auto result = finite_diff_check(loss, model.parameters(), gopts);
        const bool ok = result.max_error < 1e-4;
        out.push_back(finish("gradients", std::string("training loss (") + to_string(variant) + ")", ok ? 0 : 1, 1,
                             std::to_string(result.coords_checked) + " coords, max err " + num(result.max_error),
                             {{"variant", to_string(variant)}, {"max_error", result.max_error}, {"graph", graph_json(g)}}));
    }
    return out;
}

const std::vector<PropertyGroup>& property_groups() {
    static const std::vector<PropertyGroup> groups{
        {"aggregation", verify_aggregation_properties}, {"hashing", verify_hash_unbiased},
        {"kernels", verify_kernels},                    {"rkhs", verify_rkhs_identity},
        {"subtree", verify_subtree_injectivity},        {"gradients", verify_gradients},
    };
    return groups;
}

}  // namespace demonet
