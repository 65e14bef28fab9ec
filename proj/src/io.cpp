#include "demonet/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "demonet/errors.hpp"

namespace demonet {

namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    text = trim(text);
    if (text.empty()) return false;
    if constexpr (std::is_floating_point_v<T>) {
        // from_chars for double is available in libstdc++ 11.
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
        return ec == std::errc{} && ptr == text.data() + text.size();
    } else {
        if (text.front() == '+') text.remove_prefix(1);
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
        return ec == std::errc{} && ptr == text.data() + text.size();
    }
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t b = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > b) out.push_back(line.substr(b, i - b));
    }
    return out;
}

// Reads non-empty lines; returns (line number, content) pairs.
std::vector<std::pair<std::size_t, std::string>> read_lines(const fs::path& path) {
    auto in = open_input(path);
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!trim(line).empty()) lines.emplace_back(number, line);
    }
    return lines;
}

fs::path find_dataset_file(const fs::path& dir, const std::string& suffix, bool required) {
    if (fs::exists(dir / suffix)) return dir / suffix;
    if (fs::is_directory(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            const auto name = entry.path().filename().string();
            if (name.size() > suffix.size() + 1 && name.ends_with("_" + suffix)) return entry.path();
        }
    }
    if (required) throw std::runtime_error("dataset file " + suffix + " not found in " + dir.string());
    return {};
}

}  // namespace

NodeId LoadedGraph::internal_id(std::int64_t external) const {
    auto it = std::lower_bound(external_ids.begin(), external_ids.end(), external);
    if (it == external_ids.end() || *it != external) {
        throw ValidationError("unknown node id " + std::to_string(external));
    }
    return static_cast<NodeId>(it - external_ids.begin());
}

LoadedGraph load_edge_list(const fs::path& path) {
    std::vector<std::pair<std::int64_t, std::int64_t>> raw;
    for (const auto& [number, text] : read_lines(path)) {
        std::string_view line = text;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        auto fields = split_whitespace(line);
        std::int64_t u = 0, v = 0;
        if (fields.size() != 2 || !parse_number(fields[0], u) || !parse_number(fields[1], v)) {
            throw ParseError(number, "expected two integer node ids, got '" + std::string(trim(line)) + "'");
        }
        if (u < 0 || v < 0) throw ValidationError("line " + std::to_string(number) + ": negative node id");
        raw.emplace_back(u, v);
    }

    LoadedGraph out;
    for (auto [u, v] : raw) {
        out.external_ids.push_back(u);
        out.external_ids.push_back(v);
    }
    std::sort(out.external_ids.begin(), out.external_ids.end());
    out.external_ids.erase(std::unique(out.external_ids.begin(), out.external_ids.end()), out.external_ids.end());

    std::vector<Edge> edges;
    edges.reserve(raw.size());
    for (auto [u, v] : raw) edges.emplace_back(out.internal_id(u), out.internal_id(v));
    out.graph = Graph::from_edges(out.external_ids.size(), edges, &out.stats);
    return out;
}

void write_id_map(const fs::path& path, const std::vector<std::int64_t>& external_ids) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "external_id,internal_id\n";
    for (std::size_t i = 0; i < external_ids.size(); ++i) out << external_ids[i] << ',' << i << '\n';
}

Graph load_node_table(const fs::path& path, const Graph& graph, NodeTableMode mode,
                      const std::vector<std::int64_t>* external_ids) {
    const std::size_t n = graph.num_nodes();
    auto lines = read_lines(path);
    std::size_t first = 0;
    if (!lines.empty()) {
        std::int64_t probe = 0;
        if (!parse_number(split_fields(lines[0].second, ',')[0], probe)) first = 1;  // header
    }

    std::size_t dim = 0;
    std::vector<char> seen(n, 0);
    std::vector<double> attrs;
    std::vector<int> labels(n, kUnlabeled);
    for (std::size_t li = first; li < lines.size(); ++li) {
        const auto& [number, text] = lines[li];
        auto fields = split_fields(text, ',');
        if (fields.size() < 2) throw FormatError("line " + std::to_string(number) + ": expected node_id and values");
        std::int64_t ext = 0;
        if (!parse_number(fields[0], ext)) throw ParseError(number, "bad node id");
        std::int64_t id = ext;
        if (external_ids) {
            auto it = std::lower_bound(external_ids->begin(), external_ids->end(), ext);
            if (it == external_ids->end() || *it != ext) {
                throw ValidationError("line " + std::to_string(number) + ": unknown node id " + std::to_string(ext));
            }
            id = it - external_ids->begin();
        }
        if (id < 0 || static_cast<std::size_t>(id) >= n) {
            throw ValidationError("line " + std::to_string(number) + ": node id out of range");
        }
        if (seen[id]) throw ValidationError("line " + std::to_string(number) + ": duplicate node id " + std::to_string(ext));
        seen[id] = 1;

        if (mode == NodeTableMode::labels) {
            if (fields.size() != 2) throw FormatError("line " + std::to_string(number) + ": label rows have two columns");
            int label = 0;
            if (!parse_number(fields[1], label) || label < 0) throw ParseError(number, "bad class id");
            labels[id] = label;
        } else {
            const std::size_t width = fields.size() - 1;
            if (dim == 0) {
                dim = width;
                attrs.assign(n * dim, 0.0);
            } else if (width != dim) {
                throw FormatError("line " + std::to_string(number) + ": row has " + std::to_string(width) +
                                  " values, earlier rows have " + std::to_string(dim));
            }
            for (std::size_t j = 0; j < dim; ++j) {
                double x = 0;
                if (!parse_number(fields[j + 1], x)) throw ParseError(number, "bad attribute value");
                attrs[static_cast<std::size_t>(id) * dim + j] = x;
            }
        }
    }
    if (mode == NodeTableMode::labels) return graph.with_labels(std::move(labels));
    if (dim == 0) throw FormatError(path.string() + ": no attribute rows");
    return graph.with_attributes(std::move(attrs), dim, AttributeKind::continuous);
}

GraphSet load_graph_dataset(const fs::path& dir) {
    const auto a_path = find_dataset_file(dir, "A.txt", true);
    const auto ind_path = find_dataset_file(dir, "graph_indicator.txt", true);
    const auto lab_path = find_dataset_file(dir, "graph_labels.txt", true);
    const auto nl_path = find_dataset_file(dir, "node_labels.txt", false);
    const auto na_path = find_dataset_file(dir, "node_attributes.txt", false);

    // graph_indicator: line i holds the 1-based graph id of node i.
    std::vector<std::int64_t> indicator;
    for (const auto& [number, text] : read_lines(ind_path)) {
        std::int64_t g = 0;
        if (!parse_number(text, g)) throw ParseError(number, "bad graph id in " + ind_path.filename().string());
        indicator.push_back(g);
    }
    const std::size_t total = indicator.size();
    if (total == 0) throw ValidationError("empty graph indicator");
    const auto [lo, hi] = std::minmax_element(indicator.begin(), indicator.end());
    if (*lo != 1) throw ValidationError("graph indicator must start at 1");
    const std::size_t num_graphs = static_cast<std::size_t>(*hi);
    std::vector<std::vector<std::size_t>> members(num_graphs);
    for (std::size_t v = 0; v < total; ++v) members[indicator[v] - 1].push_back(v);
    for (std::size_t g = 0; g < num_graphs; ++g) {
        if (members[g].empty()) throw ValidationError("graph indicator has a gap at graph id " + std::to_string(g + 1));
    }
    std::vector<std::size_t> local(total);
    for (auto& m : members) {
        for (std::size_t i = 0; i < m.size(); ++i) local[m[i]] = i;
    }

    std::vector<std::vector<Edge>> edges(num_graphs);
    for (const auto& [number, text] : read_lines(a_path)) {
        auto fields = split_fields(text, ',');
        std::int64_t u = 0, v = 0;
        if (fields.size() != 2 || !parse_number(fields[0], u) || !parse_number(fields[1], v)) {
            throw ParseError(number, "expected 'u, v' in " + a_path.filename().string());
        }
        if (u < 1 || v < 1 || static_cast<std::size_t>(u) > total || static_cast<std::size_t>(v) > total) {
            throw ValidationError("line " + std::to_string(number) + ": node id out of range");
        }
        --u;
        --v;
        if (indicator[u] != indicator[v]) {
            throw ValidationError("line " + std::to_string(number) + ": edge joins graphs " +
                                  std::to_string(indicator[u]) + " and " + std::to_string(indicator[v]));
        }
        edges[indicator[u] - 1].emplace_back(static_cast<NodeId>(local[u]), static_cast<NodeId>(local[v]));
    }

    // Graph labels are remapped to dense ids in ascending order of raw value.
    std::vector<std::int64_t> raw_labels;
    for (const auto& [number, text] : read_lines(lab_path)) {
        std::int64_t y = 0;
        if (!parse_number(text, y)) throw ParseError(number, "bad graph label");
        raw_labels.push_back(y);
    }
    if (raw_labels.size() != num_graphs) {
        throw ValidationError("graph_labels has " + std::to_string(raw_labels.size()) + " rows for " +
                              std::to_string(num_graphs) + " graphs");
    }
    std::vector<std::int64_t> label_values = raw_labels;
    std::sort(label_values.begin(), label_values.end());
    label_values.erase(std::unique(label_values.begin(), label_values.end()), label_values.end());

    std::vector<double> attrs;
    std::size_t dim = 0;
    AttributeKind kind = AttributeKind::categorical;
    if (!na_path.empty()) {
        auto lines = read_lines(na_path);
        if (lines.size() != total) throw ValidationError("node_attributes row count != node count");
        for (const auto& [number, text] : lines) {
            auto fields = split_fields(text, ',');
            if (dim == 0) dim = fields.size();
            if (fields.size() != dim) throw FormatError("line " + std::to_string(number) + ": inconsistent attribute width");
            for (auto f : fields) {
                double x = 0;
                if (!parse_number(f, x)) throw ParseError(number, "bad attribute value");
                attrs.push_back(x);
            }
        }
        kind = AttributeKind::continuous;
    } else if (!nl_path.empty()) {
        std::vector<std::int64_t> node_labels;
        for (const auto& [number, text] : read_lines(nl_path)) {
            std::int64_t c = 0;
            if (!parse_number(split_fields(text, ',')[0], c)) throw ParseError(number, "bad node label");
            node_labels.push_back(c);
        }
        if (node_labels.size() != total) throw ValidationError("node_labels row count != node count");
        std::vector<std::int64_t> values = node_labels;
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        dim = values.size();
        attrs.assign(total * dim, 0.0);
        for (std::size_t v = 0; v < total; ++v) {
            const auto c = std::lower_bound(values.begin(), values.end(), node_labels[v]) - values.begin();
            attrs[v * dim + static_cast<std::size_t>(c)] = 1.0;
        }
    } else {
        dim = 1;
        attrs.assign(total, 1.0);
    }

    GraphSet set;
    set.attr_dim = dim;
    for (std::size_t g = 0; g < num_graphs; ++g) {
        Graph graph = Graph::from_edges(members[g].size(), edges[g]);
        std::vector<double> ga;
        ga.reserve(members[g].size() * dim);
        for (std::size_t v : members[g]) {
            ga.insert(ga.end(), attrs.begin() + static_cast<std::ptrdiff_t>(v * dim),
                      attrs.begin() + static_cast<std::ptrdiff_t>((v + 1) * dim));
        }
        set.graphs.push_back(graph.with_attributes(std::move(ga), dim, kind));
        set.graph_labels.push_back(static_cast<int>(
            std::lower_bound(label_values.begin(), label_values.end(), raw_labels[g]) - label_values.begin()));
    }
    set.validate();
    return set;
}

void write_graph_dataset(const fs::path& dir, const GraphSet& set) {
    fs::create_directories(dir);
    std::ofstream a(dir / "A.txt"), ind(dir / "graph_indicator.txt"), lab(dir / "graph_labels.txt");
    if (!a || !ind || !lab) throw std::runtime_error("cannot write dataset into " + dir.string());
    const bool continuous = std::any_of(set.graphs.begin(), set.graphs.end(), [](const Graph& g) {
        return g.attribute_kind() == AttributeKind::continuous;
    });
    std::ofstream attrs_out;
    if (set.attr_dim > 0) attrs_out.open(dir / (continuous ? "node_attributes.txt" : "node_labels.txt"));

    std::size_t base = 0;
    for (std::size_t g = 0; g < set.size(); ++g) {
        const Graph& graph = set.graphs[g];
        for (auto [u, v] : graph.edges()) {
            a << base + u + 1 << ", " << base + v + 1 << '\n';
            a << base + v + 1 << ", " << base + u + 1 << '\n';
        }
        for (std::size_t v = 0; v < graph.num_nodes(); ++v) {
            ind << g + 1 << '\n';
            if (set.attr_dim == 0) continue;
            auto row = graph.attribute(static_cast<NodeId>(v));
            if (continuous) {
                for (std::size_t j = 0; j < row.size(); ++j) attrs_out << (j ? ", " : "") << row[j];
                attrs_out << '\n';
            } else {
                attrs_out << (std::max_element(row.begin(), row.end()) - row.begin()) << '\n';
            }
        }
        lab << (set.graph_labels.empty() ? 0 : set.graph_labels[g]) << '\n';
        base += graph.num_nodes();
    }
}

void write_edge_list(const fs::path& path, const Graph& g) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# " << g.num_nodes() << " nodes, " << g.num_edges() << " edges\n";
    for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

}  // namespace demonet
