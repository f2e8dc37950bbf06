#pragma once

#include "spot/graph/graph.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string_view>

namespace spot::graph {

enum class WalkType : std::size_t { BFS = 0, DFS = 1, RW = 2 };
inline constexpr std::array<WalkType, 3> kWalkTypes{WalkType::BFS, WalkType::DFS, WalkType::RW};
std::string_view walk_type_name(WalkType t);

using Rng = std::mt19937_64;

// BFS and DFS expand each node's neighbours in a freshly shuffled order. When
// the component reachable from `start` has fewer than K nodes the traversal
// restarts from `start` with an empty visited set and keeps appending.

/// First K nodes in breadth-first order from `start`.
std::vector<std::size_t> bfs_walk(const Graph& g, std::size_t start, std::size_t K, Rng& rng);
/// First K nodes of a depth-first preorder from `start`.
std::vector<std::size_t> dfs_walk(const Graph& g, std::size_t start, std::size_t K, Rng& rng);
/// Uniform random walk; a node without neighbours repeats itself.
std::vector<std::size_t> random_walk(const Graph& g, std::size_t start, std::size_t K, Rng& rng);

/// 3 x M x N walks of length K, stored [type][m][node][k].
struct WalkSet {
    std::size_t n_nodes = 0;
    std::size_t K = 0;
    std::size_t M = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> nodes;

    std::span<const std::size_t> walk(WalkType type, std::size_t m, std::size_t node) const;
    std::size_t offset(WalkType type, std::size_t m, std::size_t node) const;
    std::size_t n_walks() const { return 3 * M * n_nodes; }
};

/// Each (type, m, node) walk draws from its own generator seeded by
/// (seed, type, m, node), so the result does not depend on generation order.
WalkSet generate_walks(const Graph& g, std::size_t K, std::size_t M, std::uint64_t seed);

/// CSV with header `type,m,node,k0,...` and one row per walk.
void write_walks_csv(std::ostream& os, const WalkSet& walks);

} // namespace spot::graph
