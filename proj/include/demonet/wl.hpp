#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "demonet/graph.hpp"

namespace demonet {

struct ColorMap {
    std::vector<int> colors;
    int round = 0;

    std::size_t num_colors() const;
};

// Maps (own colour, sorted neighbour colours) signatures to new colour ids in
// insertion order. Sharing one dictionary across graphs makes their colours
// comparable.
class ColorDictionary {
public:
    int id_of(int own, std::vector<int> neighbor_colors);
    std::size_t size() const { return ids_.size(); }

private:
    std::map<std::pair<int, std::vector<int>>, int> ids_;
};

// Discrete ids for attribute rows, compared by exact value.
class AttributeDictionary {
public:
    int insert(std::span<const double> row);
    std::optional<int> find(std::span<const double> row) const;
    std::size_t size() const { return ids_.size(); }

private:
    std::map<std::vector<double>, int> ids_;
};

ColorMap uniform_colors(std::size_t n);

// Colours from discretized attributes, or uniform when the graph has none.
// Continuous attributes are rejected.
ColorMap initial_colors(const Graph& g, AttributeDictionary& dict);

ColorMap wl_refine(const Graph& g, const ColorMap& colors, ColorDictionary& dict);

// Single-graph refinement with dense output colours.
ColorMap wl_refine(const Graph& g, const ColorMap& colors);

// Iterates refinement to a fixed point (or max_rounds).
ColorMap wl_stable_colors(const Graph& g, const ColorMap& init, int max_rounds);

enum class WlVerdict { non_isomorphic, possibly_isomorphic };

// Joint refinement under one dictionary; non_isomorphic iff the colour
// histograms differ at some round.
WlVerdict wl_test(const Graph& a, const Graph& b, int max_rounds);

// Canonical depth-1 subtree: seed attribute id, degree, sorted neighbour ids.
struct SubtreeCode {
    int seed_code = 0;
    int degree = 0;
    std::vector<int> neighbor_multiset;

    auto operator<=>(const SubtreeCode&) const = default;
    bool operator==(const SubtreeCode&) const = default;
};

SubtreeCode subtree_code(const Graph& g, NodeId v, const AttributeDictionary& dict);

}  // namespace demonet
