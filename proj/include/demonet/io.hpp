#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "demonet/graph.hpp"

namespace demonet {

// Result of reading an edge list. External ids are sorted ascending and mapped
// to 0..n-1 in that order, so already-dense inputs keep their ids.
struct LoadedGraph {
    Graph graph;
    std::vector<std::int64_t> external_ids;  // internal id -> external id
    EdgeStats stats;

    NodeId internal_id(std::int64_t external) const;
};

// "u v" per line, whitespace separated, '#' starts a comment.
LoadedGraph load_edge_list(const std::filesystem::path& path);

// CSV "external_id,internal_id".
void write_id_map(const std::filesystem::path& path, const std::vector<std::int64_t>& external_ids);

enum class NodeTableMode { attributes, labels };

// CSV rows "node_id, v1..vD" or "node_id, class"; optional header. When
// external_ids is given, node_id is looked up through it.
Graph load_node_table(const std::filesystem::path& path, const Graph& graph, NodeTableMode mode,
                      const std::vector<std::int64_t>* external_ids = nullptr);

// Directory in the public graph-benchmark layout: A.txt, graph_indicator.txt,
// graph_labels.txt, optional node_labels.txt / node_attributes.txt. Files may
// carry a common "<NAME>_" prefix.
GraphSet load_graph_dataset(const std::filesystem::path& dir);

// Writes the same layout (prefix-free). Continuous attributes go to
// node_attributes.txt; categorical one-hot rows are written back as node_labels.txt.
void write_graph_dataset(const std::filesystem::path& dir, const GraphSet& set);

void write_edge_list(const std::filesystem::path& path, const Graph& g);

}  // namespace demonet
