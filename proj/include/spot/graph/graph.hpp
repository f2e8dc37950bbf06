#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spot::graph {

using Edge = std::pair<std::size_t, std::size_t>;

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adjacency lists, sorted ascending and duplicate-free. Undirected graphs
/// store each edge in both lists.
class Graph {
public:
    Graph() = default;
    Graph(std::size_t n_nodes, std::span<const Edge> edges, bool directed = false);

    static Graph ring(std::size_t n);
    static Graph path(std::size_t n);

    std::size_t n_nodes() const noexcept { return adjacency_.size(); }
    bool directed() const noexcept { return directed_; }
    std::span<const std::size_t> neighbors(std::size_t node) const { return adjacency_.at(node); }
    bool has_edge(std::size_t from, std::size_t to) const;
    /// Undirected edges are counted once.
    std::size_t n_edges() const;
    std::vector<Edge> edges() const;

private:
    std::vector<std::vector<std::size_t>> adjacency_;
    bool directed_ = false;
};

/// Edge-list CSV: `src,dst[,...]` per line, zero-based ids, optional header.
/// The node count is max id + 1 unless `n_nodes` is given.
Graph read_edge_list(std::istream& is, std::size_t n_nodes = 0, bool directed = false);
Graph load_edge_list(const std::filesystem::path& path, std::size_t n_nodes = 0, bool directed = false);
void write_edge_list(std::ostream& os, const Graph& g);

} // namespace spot::graph
