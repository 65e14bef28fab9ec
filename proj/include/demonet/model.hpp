#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "demonet/checkpoint.hpp"
#include "demonet/graph.hpp"
#include "demonet/hashing.hpp"
#include "demonet/random.hpp"
#include "demonet/tape.hpp"

namespace demonet {

enum class Variant { weight, hash, gcn };
enum class TaskKind { node, graph };
enum class Pooling { degree, mean };

// What a layer does with a node whose degree has no task: use the global
// branch only, or refuse.
enum class DegreeFallback { global, strict };

const char* to_string(Variant v);
const char* to_string(TaskKind t);
const char* to_string(Pooling p);
Variant parse_variant(const std::string& s);
Pooling parse_pooling(const std::string& s);

struct ModelConfig {
    int layers = 2;
    int hidden = 64;  // split evenly between seed and neighbour halves
    Variant variant = Variant::weight;
    int classes = 2;
    TaskKind task = TaskKind::node;
    Pooling pooling = Pooling::degree;
    DegreeFallback fallback = DegreeFallback::global;
    std::size_t hash_dim = 0;  // 0: the layer's input width
    std::uint64_t hash_seed = 0;
    std::uint64_t init_seed = 0;

    void validate() const;
};

// Data prepared for one model: features, per-node degree tasks and, for graph
// tasks, the pooling layout of the disjoint union of all graphs.
template <typename Real>
struct ModelInput {
    Graph graph;
    Matrix<Real> features;
    std::vector<int> task_of_node;  // -1: degree without a task
    std::vector<int> global_rows;   // all zero: selects the single global hash table
    std::vector<Real> inv_sqrt_degree;  // 1/sqrt(deg+1) for the renormalized adjacency
    std::size_t unseen_degree_nodes = 0;

    // Graph task layout.
    std::size_t num_graphs = 0;
    std::vector<int> node_graph;
    std::vector<int> node_slot;
    std::vector<std::size_t> graph_offsets;
    std::size_t unseen_pool_nodes = 0;
};

template <typename Real>
struct ForwardPass {
    std::vector<Var> params;
    std::vector<Var> layers;  // H_0 (input) .. H_K
    Var repr;                 // graph tasks: pooled graph representation
    Var logits;
};

// Indexed by (layer k, degree slot i, feature j).
struct GraphRepr {
    struct Slot {
        int layer = 0;
        int degree = 0;
        std::size_t offset = 0;
        std::size_t width = 0;
    };
    std::vector<double> values;
    std::vector<Slot> slots;
    std::size_t slots_per_layer = 0;

    double at(int layer, std::size_t slot, std::size_t j) const;
};

template <typename Real>
class Model {
public:
    struct Layer {
        std::size_t in_dim = 0;
        std::size_t seed_width = 0;
        std::size_t neighbor_width = 0;
        std::size_t out_dim = 0;
        std::size_t w0 = 0, wg = 0, wshared = 0, wgcn = 0;
        std::vector<std::size_t> wdeg;
        std::size_t hash_dim = 0;
        LayerHashing hashing;
        std::vector<HashTable> global_table;  // exactly one entry
        std::vector<HashTable> task_tables;
    };

    Model(ModelConfig config, std::size_t input_dim, DegreeIndex degrees);

    const ModelConfig& config() const { return config_; }
    const DegreeIndex& degree_index() const { return degrees_; }
    std::size_t input_dim() const { return input_dim_; }
    const std::vector<Layer>& layers() const { return layers_; }

    std::vector<Matrix<Real>>& parameters() { return params_; }
    const std::vector<Matrix<Real>>& parameters() const { return params_; }
    const std::vector<std::string>& parameter_names() const { return names_; }
    Matrix<Real>& parameter(const std::string& name);
    const Matrix<Real>& parameter(const std::string& name) const;
    std::size_t classifier_index() const { return classifier_; }
    std::size_t parameter_count() const;

    // Input for a node task on one graph.
    ModelInput<Real> prepare(const Graph& g) const;
    // Input for a graph task: all graphs laid out as one disjoint union.
    ModelInput<Real> prepare(const GraphSet& set) const;

    // Fresh inverted-dropout masks for every hidden-layer input.
    std::vector<Matrix<Real>> dropout_masks(const ModelInput<Real>& in, double p, Rng& rng) const;

    // Records the whole network on the tape with the current parameter values.
    // masks == nullptr disables dropout.
    ForwardPass<Real> forward(Tape<Real>& tape, const ModelInput<Real>& in,
                              const std::vector<Matrix<Real>>* masks = nullptr) const;

    // Same, but with parameter handles the caller already placed on the tape.
    ForwardPass<Real> forward(Tape<Real>& tape, const ModelInput<Real>& in, std::span<const Var> params,
                              const std::vector<Matrix<Real>>* masks = nullptr) const;

    // Width of the pooled representation fed to the graph classifier.
    std::size_t repr_width() const;

    std::vector<NamedTensor> export_parameters() const;
    void import_parameters(const std::vector<NamedTensor>& tensors);

private:
    std::size_t add_param(std::string name, std::size_t rows, std::size_t cols);
    Var layer_forward(Tape<Real>& tape, const ModelInput<Real>& in, const Layer& layer, Var h,
                      std::span<const Var> params) const;
    Var pool(Tape<Real>& tape, const ModelInput<Real>& in, Var h) const;

    ModelConfig config_;
    std::size_t input_dim_;
    DegreeIndex degrees_;
    std::vector<Layer> layers_;
    std::vector<Matrix<Real>> params_;
    std::vector<std::string> names_;
    std::size_t classifier_ = 0;
};

// Pooled representation of one graph (no dropout), for any model.
template <typename Real>
GraphRepr graph_repr(const Model<Real>& model, const Graph& g);

// Per-layer node features H_0..H_K of one graph (no dropout).
template <typename Real>
std::vector<Matrix<Real>> layer_outputs(const Model<Real>& model, const Graph& g);

}  // namespace demonet
