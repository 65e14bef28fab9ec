#include "demonet/rkhs.hpp"

#include <algorithm>
#include <cmath>

#include "demonet/errors.hpp"
#include "demonet/kernels.hpp"

namespace demonet {

RkhsCheck rkhs_identity_check(const Model<double>& model, const Graph& g, int k, std::size_t i, std::size_t j) {
    const ModelConfig& cfg = model.config();
    if (cfg.variant != Variant::weight) throw UnsupportedError("the RKHS identity is stated for the weight variant only");
    if (cfg.pooling != Pooling::degree) throw UnsupportedError("the RKHS identity needs degree pooling");
    if (k < 1 || k > cfg.layers) throw ValidationError("layer index must be in 1..K");
    const auto vocab = model.degree_index().degree_values();
    if (i >= vocab.size()) throw ValidationError("degree slot out of range");
    const auto& layer = model.layers()[static_cast<std::size_t>(k - 1)];
    if (j >= layer.out_dim) throw ValidationError("feature index out of range");

    const GraphRepr repr = graph_repr(model, g);
    const auto outputs = layer_outputs(model, g);
    const Matrix<double>& prev = outputs[static_cast<std::size_t>(k - 1)];
    const int degree = vocab[i];

    Matrix<double> features;
    std::vector<double> w(layer.in_dim);
    if (j < layer.seed_width) {
        features = prev;
        const auto& w0 = model.parameters()[layer.w0];
        for (std::size_t r = 0; r < layer.in_dim; ++r) w[r] = w0(r, j);
    } else {
        features = detail::neighbor_sum_values(g, prev);
        const std::size_t col = j - layer.seed_width;
        const auto& wg = model.parameters()[layer.wg];
        const auto task = model.degree_index().task_of(degree);
        for (std::size_t r = 0; r < layer.in_dim; ++r) {
            w[r] = wg(r, col);
            if (task) w[r] += model.parameters()[layer.wdeg[static_cast<std::size_t>(*task)]](r, col);
        }
    }

    const std::size_t n = g.num_nodes();
    NodeFeatureSet observed{std::move(features), std::vector<int>(g.degrees().begin(), g.degrees().end())};
    NodeFeatureSet reference{Matrix<double>(n, layer.in_dim), std::vector<int>(n, degree)};
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t r = 0; r < layer.in_dim; ++r) reference.features(v, r) = w[r] / static_cast<double>(n);
    }

    RkhsCheck out;
    out.lhs = repr.at(k, i, j);
    out.rhs = n == 0 ? 0.0 : std::max(0.0, dwl_kernel(observed, reference));
    out.error = std::abs(out.lhs - out.rhs);
    return out;
}

}  // namespace demonet
