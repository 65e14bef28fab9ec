#pragma once

#include <cstddef>

#include "demonet/graph.hpp"
#include "demonet/model.hpp"

namespace demonet {

struct RkhsCheck {
    double lhs = 0;    // pooled representation coordinate h_G[k, i, j]
    double rhs = 0;    // relu of the DWL kernel against the reference graph
    double error = 0;  // |lhs - rhs|
};

// Compares coordinate (k, i, j) of the degree-pooled representation, k >= 1,
// with relu(K_DWL(G_{k-1}, R)). R has n nodes, all of degree d_i, each with
// feature w / n, where w is column j of W0 (seed half) or of Wg + W_{d_i}
// (neighbour half, evaluated on neighbour-summed features). R is never built
// as a graph: the kernel only reads its degrees and feature rows.
RkhsCheck rkhs_identity_check(const Model<double>& model, const Graph& g, int k, std::size_t i, std::size_t j);

}  // namespace demonet
