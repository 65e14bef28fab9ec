#include "demonet/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "demonet/errors.hpp"

namespace demonet {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::weight: return "weight";
        case Variant::hash: return "hash";
        case Variant::gcn: return "gcn";
    }
    return "?";
}

const char* to_string(TaskKind t) { return t == TaskKind::node ? "node" : "graph"; }
const char* to_string(Pooling p) { return p == Pooling::degree ? "degree" : "mean"; }

Variant parse_variant(const std::string& s) {
    if (s == "weight") return Variant::weight;
    if (s == "hash") return Variant::hash;
    if (s == "gcn") return Variant::gcn;
    throw ValidationError("unknown variant '" + s + "' (expected weight, hash or gcn)");
}

Pooling parse_pooling(const std::string& s) {
    if (s == "degree") return Pooling::degree;
    if (s == "mean") return Pooling::mean;
    throw ValidationError("unknown pooling '" + s + "' (expected degree or mean)");
}

void ModelConfig::validate() const {
    if (layers < 0) throw ValidationError("layer count must be nonnegative");
    if (layers > 0 && (hidden <= 0 || hidden % 2 != 0)) throw ValidationError("hidden width must be positive and even");
    if (classes < 1) throw ValidationError("need at least one class");
}

double GraphRepr::at(int layer, std::size_t slot, std::size_t j) const {
    const Slot& s = slots.at(static_cast<std::size_t>(layer) * slots_per_layer + slot);
    if (j >= s.width) throw ShapeError("graph representation feature index out of range");
    return values[s.offset + j];
}

namespace {

// Row r of the result is x[r] * mats[group[r]]; rows with group -1 are zero.
template <typename Real>
Var grouped_matmul(Tape<Real>& t, Var x, std::vector<Var> mats, const std::vector<int>* group, std::size_t out_cols) {
    const auto& in = t.value(x);
    if (group->size() != in.rows()) throw ShapeError("grouped_matmul row assignment length mismatch");
    Matrix<Real> out(in.rows(), out_cols);
    for (std::size_t r = 0; r < in.rows(); ++r) {
        const int gi = (*group)[r];
        if (gi < 0) continue;
        const auto& w = t.value(mats[static_cast<std::size_t>(gi)]);
        Real* o = out.row(r).data();
        for (std::size_t k = 0; k < in.cols(); ++k) {
            const Real xv = in(r, k);
            if (xv == Real(0)) continue;
            const Real* wr = w.row(k).data();
            for (std::size_t j = 0; j < out_cols; ++j) o[j] += xv * wr[j];
        }
    }
    std::vector<Var> inputs = mats;
    inputs.push_back(x);
    return t.record(std::move(out), std::span<const Var>(inputs), [x, mats, group](Tape<Real>& tp, const Matrix<Real>& g) {
        const auto& in = tp.value(x);
        auto* gx = tp.grad_buffer(x);
        for (std::size_t r = 0; r < in.rows(); ++r) {
            const int gi = (*group)[r];
            if (gi < 0) continue;
            const Var wv = mats[static_cast<std::size_t>(gi)];
            const auto& w = tp.value(wv);
            auto grow = g.row(r);
            if (gx) {
                for (std::size_t k = 0; k < in.cols(); ++k) {
                    const Real* wr = w.row(k).data();
                    Real s = 0;
                    for (std::size_t j = 0; j < grow.size(); ++j) s += wr[j] * grow[j];
                    (*gx)(r, k) += s;
                }
            }
            if (auto* gw = tp.grad_buffer(wv)) {
                for (std::size_t k = 0; k < in.cols(); ++k) {
                    const Real xv = in(r, k);
                    if (xv == Real(0)) continue;
                    Real* o = gw->row(k).data();
                    for (std::size_t j = 0; j < grow.size(); ++j) o[j] += xv * grow[j];
                }
            }
        }
    });
}

// Renormalized adjacency product: out[v] = sum over u in {v} u N(v) of
// inv[v] * inv[u] * h[u]. The operator is symmetric, so backward reuses it.
template <typename Real>
Matrix<Real> renormalized_values(const Graph& g, const std::vector<Real>& inv, const Matrix<Real>& h) {
    Matrix<Real> out(h.rows(), h.cols());
    std::vector<NodeId> sorted;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        auto nbrs = g.neighbors(static_cast<NodeId>(v));
        sorted.assign(nbrs.begin(), nbrs.end());
        sorted.push_back(static_cast<NodeId>(v));
        std::sort(sorted.begin(), sorted.end());
        Real* o = out.row(v).data();
        for (NodeId u : sorted) {
            const Real c = inv[v] * inv[static_cast<std::size_t>(u)];
            const Real* src = h.row(static_cast<std::size_t>(u)).data();
            for (std::size_t j = 0; j < h.cols(); ++j) o[j] += c * src[j];
        }
    }
    return out;
}

template <typename Real>
Var renormalized_adjacency(Tape<Real>& t, const Graph& g, const std::vector<Real>& inv, Var h) {
    const Graph* gp = &g;
    const std::vector<Real>* ip = &inv;
    return t.record(renormalized_values(g, inv, t.value(h)), {h}, [gp, ip, h](Tape<Real>& tp, const Matrix<Real>& grad) {
        if (auto* gh = tp.grad_buffer(h)) *gh += renormalized_values(*gp, *ip, grad);
    });
}

// out[graph(v), slot(v) * w + j] += weight(v) * h[v, j]
template <typename Real>
Var pool_rows(Tape<Real>& t, Var h, const std::vector<int>* graph_of, std::vector<int> slot_of, std::size_t graphs,
              std::size_t slots, std::vector<Real> weight) {
    const auto& x = t.value(h);
    const std::size_t w = x.cols();
    Matrix<Real> out(graphs, slots * w);
    for (std::size_t v = 0; v < x.rows(); ++v) {
        Real* o = out.row(static_cast<std::size_t>((*graph_of)[v])).data() + static_cast<std::size_t>(slot_of[v]) * w;
        for (std::size_t j = 0; j < w; ++j) o[j] += weight[v] * x(v, j);
    }
    return t.record(std::move(out), {h},
                    [h, graph_of, slot_of = std::move(slot_of), weight = std::move(weight), w](Tape<Real>& tp,
                                                                                                const Matrix<Real>& g) {
                        auto* gh = tp.grad_buffer(h);
                        if (!gh) return;
                        for (std::size_t v = 0; v < gh->rows(); ++v) {
                            const Real* gr = g.row(static_cast<std::size_t>((*graph_of)[v])).data() +
                                             static_cast<std::size_t>(slot_of[v]) * w;
                            for (std::size_t j = 0; j < w; ++j) (*gh)(v, j) += weight[v] * gr[j];
                        }
                    });
}

template <typename Real>
void xavier_uniform(Matrix<Real>& m, std::uint64_t seed) {
    Rng rng(seed);
    const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (auto& x : m.data()) x = static_cast<Real>(uniform(rng, -bound, bound));
}

}  // namespace

template <typename Real>
std::size_t Model<Real>::add_param(std::string name, std::size_t rows, std::size_t cols) {
    Matrix<Real> m(rows, cols);
    xavier_uniform(m, mix64(config_.init_seed ^ mix64(params_.size() + 1)));
    params_.push_back(std::move(m));
    names_.push_back(std::move(name));
    return params_.size() - 1;
}

template <typename Real>
Model<Real>::Model(ModelConfig config, std::size_t input_dim, DegreeIndex degrees)
    : config_(config), input_dim_(input_dim), degrees_(std::move(degrees)) {
    config_.validate();
    if (input_dim_ == 0) throw ValidationError("model input width must be positive");
    const std::size_t tasks = degrees_.num_tasks();
    std::size_t width = input_dim_;
    for (int k = 1; k <= config_.layers; ++k) {
        Layer layer;
        layer.in_dim = width;
        const std::string prefix = "layer" + std::to_string(k) + ".";
        if (config_.variant == Variant::gcn) {
            layer.out_dim = static_cast<std::size_t>(config_.hidden);
            layer.wgcn = add_param(prefix + "W", width, layer.out_dim);
        } else {
            layer.seed_width = static_cast<std::size_t>(config_.hidden / 2);
            layer.neighbor_width = static_cast<std::size_t>(config_.hidden) - layer.seed_width;
            layer.out_dim = layer.seed_width + layer.neighbor_width;
            layer.w0 = add_param(prefix + "W0", width, layer.seed_width);
            if (config_.variant == Variant::weight) {
                layer.wg = add_param(prefix + "Wg", width, layer.neighbor_width);
                for (std::size_t t = 0; t < tasks; ++t) {
                    layer.wdeg.push_back(add_param(prefix + "Wdeg." + std::to_string(degrees_.degree_values()[t]), width,
                                                   layer.neighbor_width));
                }
            } else {
                layer.hash_dim = config_.hash_dim > 0 ? config_.hash_dim : width;
                const std::uint64_t s1 = mix64(config_.hash_seed ^ mix64(2 * static_cast<std::uint64_t>(k)));
                const std::uint64_t s2 = mix64(config_.hash_seed ^ mix64(2 * static_cast<std::uint64_t>(k) + 1));
                layer.hashing = derive_layer_hashing(s1, s2, tasks, layer.hash_dim, width);
                layer.global_table.push_back(HashTable::from_spec(layer.hashing.global, width));
                for (const auto& spec : layer.hashing.tasks) layer.task_tables.push_back(HashTable::from_spec(spec, width));
                layer.wshared = add_param(prefix + "W", layer.hash_dim, layer.neighbor_width);
            }
        }
        width = layer.out_dim;
        layers_.push_back(std::move(layer));
    }
    const std::size_t head_in = config_.task == TaskKind::node ? width : repr_width();
    classifier_ = add_param("classifier", head_in, static_cast<std::size_t>(config_.classes));
}

template <typename Real>
std::size_t Model<Real>::repr_width() const {
    const std::size_t slots = config_.pooling == Pooling::degree ? std::max<std::size_t>(degrees_.num_tasks(), 1) : 1;
    std::size_t total = input_dim_ * slots;
    for (const auto& l : layers_) total += l.out_dim * slots;
    return total;
}

template <typename Real>
Matrix<Real>& Model<Real>::parameter(const std::string& name) {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw ValidationError("no parameter named " + name);
    return params_[static_cast<std::size_t>(it - names_.begin())];
}

template <typename Real>
const Matrix<Real>& Model<Real>::parameter(const std::string& name) const {
    return const_cast<Model*>(this)->parameter(name);
}

template <typename Real>
std::size_t Model<Real>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

template <typename Real>
ModelInput<Real> Model<Real>::prepare(const Graph& g) const {
    ModelInput<Real> in;
    in.graph = g;
    const std::size_t n = g.num_nodes();
    if (!g.has_attributes()) throw ValidationError("model input graph has no node attributes");
    if (g.attr_dim() != input_dim_) {
        throw ShapeError("graph attributes have width " + std::to_string(g.attr_dim()) + ", model expects " +
                         std::to_string(input_dim_));
    }
    in.features = Matrix<Real>(n, input_dim_);
    for (std::size_t i = 0; i < g.attributes().size(); ++i) in.features.data()[i] = static_cast<Real>(g.attributes()[i]);
    in.task_of_node.resize(n);
    in.global_rows.assign(n, 0);
    in.inv_sqrt_degree.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        const int d = g.degree(static_cast<NodeId>(v));
        in.inv_sqrt_degree[v] = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(d) + 1.0));
        if (auto t = degrees_.task_of(d)) {
            in.task_of_node[v] = *t;
        } else {
            if (config_.fallback == DegreeFallback::strict && config_.variant != Variant::gcn) {
                throw ValidationError("node " + std::to_string(v) + " has degree " + std::to_string(d) +
                                      " which has no degree-specific task");
            }
            in.task_of_node[v] = -1;
            ++in.unseen_degree_nodes;
        }
    }
    return in;
}

template <typename Real>
ModelInput<Real> Model<Real>::prepare(const GraphSet& set) const {
    std::vector<std::size_t> offsets;
    ModelInput<Real> in = prepare(disjoint_union(set.graphs, &offsets));
    in.num_graphs = set.size();
    in.graph_offsets = offsets;
    in.node_graph.resize(in.graph.num_nodes());
    in.node_slot.resize(in.graph.num_nodes());
    for (std::size_t gi = 0; gi < set.size(); ++gi) {
        for (std::size_t v = offsets[gi]; v < offsets[gi + 1]; ++v) {
            in.node_graph[v] = static_cast<int>(gi);
            const int d = in.graph.degree(static_cast<NodeId>(v));
            in.node_slot[v] = degrees_.num_tasks() == 0 ? 0 : degrees_.pooling_slot(d);
            if (!degrees_.task_of(d)) ++in.unseen_pool_nodes;
        }
    }
    return in;
}

template <typename Real>
std::vector<Matrix<Real>> Model<Real>::dropout_masks(const ModelInput<Real>& in, double p, Rng& rng) const {
    if (p < 0 || p >= 1) throw ValidationError("dropout probability must be in [0, 1)");
    std::vector<Matrix<Real>> masks;
    const Real keep_scale = static_cast<Real>(1.0 / (1.0 - p));
    for (const auto& layer : layers_) {
        Matrix<Real> m(in.graph.num_nodes(), layer.in_dim);
        for (auto& x : m.data()) x = uniform01(rng) >= p ? keep_scale : Real(0);
        masks.push_back(std::move(m));
    }
    return masks;
}

template <typename Real>
Var Model<Real>::layer_forward(Tape<Real>& tape, const ModelInput<Real>& in, const Layer& layer, Var h,
                               std::span<const Var> params) const {
    if (config_.variant == Variant::gcn) {
        Var prop = renormalized_adjacency(tape, in.graph, in.inv_sqrt_degree, h);
        return relu(tape, matmul(tape, prop, params[layer.wgcn]));
    }
    Var seed = relu(tape, matmul(tape, h, params[layer.w0]));
    Var nsum = neighbor_sum(tape, in.graph, h);
    Var pre;
    if (config_.variant == Variant::weight) {
        std::vector<Var> wdeg;
        for (std::size_t idx : layer.wdeg) wdeg.push_back(params[idx]);
        Var global = matmul(tape, nsum, params[layer.wg]);
        pre = add(tape, global, grouped_matmul(tape, nsum, std::move(wdeg), &in.task_of_node, layer.neighbor_width));
    } else {
        Var hashed = hash_project(tape, nsum, std::span<const HashTable>(layer.global_table), in.global_rows);
        if (!layer.task_tables.empty()) {
            hashed = add(tape, hashed, hash_project(tape, nsum, std::span<const HashTable>(layer.task_tables), in.task_of_node));
        }
        pre = matmul(tape, hashed, params[layer.wshared]);
    }
    return concat(tape, seed, relu(tape, pre));
}

template <typename Real>
Var Model<Real>::pool(Tape<Real>& tape, const ModelInput<Real>& in, Var h) const {
    const std::size_t n = in.graph.num_nodes();
    if (config_.pooling == Pooling::degree) {
        const std::size_t slots = std::max<std::size_t>(degrees_.num_tasks(), 1);
        return pool_rows(tape, h, &in.node_graph, in.node_slot, in.num_graphs, slots, std::vector<Real>(n, Real(1)));
    }
    std::vector<Real> weight(n);
    for (std::size_t v = 0; v < n; ++v) {
        const auto gi = static_cast<std::size_t>(in.node_graph[v]);
        weight[v] = Real(1) / static_cast<Real>(in.graph_offsets[gi + 1] - in.graph_offsets[gi]);
    }
    return pool_rows(tape, h, &in.node_graph, std::vector<int>(n, 0), in.num_graphs, 1, std::move(weight));
}

template <typename Real>
ForwardPass<Real> Model<Real>::forward(Tape<Real>& tape, const ModelInput<Real>& in,
                                       const std::vector<Matrix<Real>>* masks) const {
    std::vector<Var> params;
    params.reserve(params_.size());
    for (const auto& p : params_) params.push_back(tape.parameter(p));
    return forward(tape, in, params, masks);
}

template <typename Real>
ForwardPass<Real> Model<Real>::forward(Tape<Real>& tape, const ModelInput<Real>& in, std::span<const Var> params,
                                       const std::vector<Matrix<Real>>* masks) const {
    if (params.size() != params_.size()) throw ShapeError("parameter handle count mismatch");
    if (masks && masks->size() != layers_.size()) throw ShapeError("one dropout mask per hidden layer expected");
    ForwardPass<Real> pass;
    pass.params.assign(params.begin(), params.end());
    Var h = tape.constant(in.features);
    pass.layers.push_back(h);
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        Var input = masks ? apply_mask(tape, h, (*masks)[k]) : h;
        h = layer_forward(tape, in, layers_[k], input, params);
        pass.layers.push_back(h);
    }
    if (in.num_graphs > 0) {
        Var repr = pool(tape, in, pass.layers.front());
        for (std::size_t k = 1; k < pass.layers.size(); ++k) repr = concat(tape, repr, pool(tape, in, pass.layers[k]));
        pass.repr = repr;
    }
    if (config_.task == TaskKind::graph) {
        if (in.num_graphs == 0) throw ValidationError("graph-level model needs graph-set input");
        pass.logits = matmul(tape, pass.repr, params[classifier_]);
    } else {
        pass.logits = matmul(tape, h, params[classifier_]);
    }
    return pass;
}

template <typename Real>
std::vector<NamedTensor> Model<Real>::export_parameters() const {
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < params_.size(); ++i) out.push_back({names_[i], Matrix<float>::cast(params_[i])});
    return out;
}

template <typename Real>
void Model<Real>::import_parameters(const std::vector<NamedTensor>& tensors) {
    if (tensors.size() != params_.size()) throw FormatError("checkpoint parameter count does not match the model");
    for (const auto& t : tensors) {
        Matrix<Real>& p = parameter(t.name);
        if (!p.same_shape(Matrix<Real>(t.value.rows(), t.value.cols()))) {
            throw ShapeError("checkpoint tensor " + t.name + " has shape " + t.value.shape_string());
        }
        p = Matrix<Real>::cast(t.value);
    }
}

template <typename Real>
std::vector<Matrix<Real>> layer_outputs(const Model<Real>& model, const Graph& g) {
    GraphSet single;
    single.graphs.push_back(g);
    single.attr_dim = g.attr_dim();
    const auto in = model.prepare(single);
    Tape<Real> tape;
    const auto pass = model.forward(tape, in);
    std::vector<Matrix<Real>> out;
    for (Var v : pass.layers) out.push_back(tape.value(v));
    return out;
}

template <typename Real>
GraphRepr graph_repr(const Model<Real>& model, const Graph& g) {
    GraphSet single;
    single.graphs.push_back(g);
    single.attr_dim = g.attr_dim();
    const auto in = model.prepare(single);
    Tape<Real> tape;
    const auto pass = model.forward(tape, in);
    const auto& r = tape.value(pass.repr);

    GraphRepr repr;
    repr.values.assign(r.data().begin(), r.data().end());
    const bool by_degree = model.config().pooling == Pooling::degree;
    const auto vocab = model.degree_index().degree_values();
    repr.slots_per_layer = by_degree ? std::max<std::size_t>(vocab.size(), 1) : 1;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < pass.layers.size(); ++k) {
        const std::size_t width = tape.value(pass.layers[k]).cols();
        for (std::size_t i = 0; i < repr.slots_per_layer; ++i) {
            const int degree = by_degree && !vocab.empty() ? vocab[i] : -1;
            repr.slots.push_back({static_cast<int>(k), degree, offset, width});
            offset += width;
        }
    }
    return repr;
}

template class Model<float>;
template class Model<double>;
template GraphRepr graph_repr(const Model<float>&, const Graph&);
template GraphRepr graph_repr(const Model<double>&, const Graph&);
template std::vector<Matrix<float>> layer_outputs(const Model<float>&, const Graph&);
template std::vector<Matrix<double>> layer_outputs(const Model<double>&, const Graph&);

}  // namespace demonet
