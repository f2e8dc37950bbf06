#include "spot/graph/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace spot::graph {

Graph::Graph(std::size_t n_nodes, std::span<const Edge> edges, bool directed)
    : adjacency_(n_nodes), directed_(directed) {
    for (const auto& [u, v] : edges) {
        if (u >= n_nodes || v >= n_nodes) {
            throw GraphError("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") outside node range [0, " +
                             std::to_string(n_nodes) + ")");
        }
        adjacency_[u].push_back(v);
        if (!directed && u != v) adjacency_[v].push_back(u);
    }
    for (auto& list : adjacency_) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
}

Graph Graph::ring(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return Graph(n, e);
}

Graph Graph::path(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return Graph(n, e);
}

bool Graph::has_edge(std::size_t from, std::size_t to) const {
    const auto& list = adjacency_.at(from);
    return std::binary_search(list.begin(), list.end(), to);
}

std::vector<Edge> Graph::edges() const {
    std::vector<Edge> out;
    for (std::size_t u = 0; u < adjacency_.size(); ++u) {
        for (auto v : adjacency_[u]) {
            if (directed_ || u <= v) out.emplace_back(u, v);
        }
    }
    return out;
}

std::size_t Graph::n_edges() const { return edges().size(); }

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_id(const std::string& field, std::size_t& out) {
    const std::string f = trim(field);
    if (f.empty()) return false;
    // PEMS-style files sometimes write ids as floats ("12.0").
    double d = 0.0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), d);
    if (ec != std::errc() || p != f.data() + f.size() || d < 0.0 || d != static_cast<double>(static_cast<std::size_t>(d))) {
        return false;
    }
    out = static_cast<std::size_t>(d);
    return true;
}

} // namespace

Graph read_edge_list(std::istream& is, std::size_t n_nodes, bool directed) {
    std::vector<Edge> edges;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    std::size_t max_id = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto c1 = line.find(',');
        std::size_t u = 0, v = 0;
        bool ok = c1 != std::string::npos;
        if (ok) {
            const auto c2 = line.find(',', c1 + 1);
            ok = parse_id(line.substr(0, c1), u) &&
                 parse_id(line.substr(c1 + 1, c2 == std::string::npos ? std::string::npos : c2 - c1 - 1), v);
        }
        if (!ok) {
            if (first) {
                first = false;
                continue; // header
            }
            throw GraphError("edge list line " + std::to_string(lineno) + ": expected `src,dst`, got `" + line + "`");
        }
        first = false;
        edges.emplace_back(u, v);
        max_id = std::max({max_id, u, v});
    }
    if (edges.empty() && n_nodes == 0) throw GraphError("edge list is empty");
    const std::size_t n = n_nodes ? n_nodes : max_id + 1;
    return Graph(n, edges, directed);
}

Graph load_edge_list(const std::filesystem::path& path, std::size_t n_nodes, bool directed) {
    std::ifstream is(path);
    if (!is) throw GraphError("cannot open edge list " + path.string());
    return read_edge_list(is, n_nodes, directed);
}

void write_edge_list(std::ostream& os, const Graph& g) {
    os << "src,dst\n";
    for (const auto& [u, v] : g.edges()) os << u << ',' << v << '\n';
}

} // namespace spot::graph
