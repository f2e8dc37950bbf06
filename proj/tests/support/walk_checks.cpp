#include "support/walk_checks.hpp"

#include <deque>
#include <limits>
#include <random>
#include <set>

namespace spot::testing {

using graph::Graph;

Graph random_graph(std::uint64_t seed, std::size_t max_nodes) {
    std::mt19937_64 rng(seed);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, max_nodes)(rng);
    // Mix sparse and dense graphs so both restarts and long traversals occur.
    const double p = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
    std::bernoulli_distribution coin(p);
    std::vector<graph::Edge> edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            if (coin(rng)) edges.emplace_back(u, v);
        }
    }
    return Graph(n, edges);
}

std::vector<std::size_t> hop_distances(const Graph& g, std::size_t source) {
    std::vector<std::size_t> dist(g.n_nodes(), std::numeric_limits<std::size_t>::max());
    std::deque<std::size_t> q{source};
    dist[source] = 0;
    while (!q.empty()) {
        auto u = q.front();
        q.pop_front();
        for (auto v : g.neighbors(u)) {
            if (dist[v] == std::numeric_limits<std::size_t>::max()) {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    return dist;
}

namespace {

std::string check_common(const Graph& g, std::size_t start, std::size_t K, std::span<const std::size_t> walk) {
    if (walk.size() != K) return "length " + std::to_string(walk.size()) + " != K=" + std::to_string(K);
    if (walk[0] != start) return "walk from " + std::to_string(start) + " begins at " + std::to_string(walk[0]);
    for (auto v : walk) {
        if (v >= g.n_nodes()) return "node " + std::to_string(v) + " out of range";
    }
    return {};
}

// Splits a traversal into restart segments. Within one segment the source is
// visited exactly once, so each occurrence of `start` begins a new segment.
std::vector<std::span<const std::size_t>> segments(std::size_t start, std::span<const std::size_t> walk) {
    std::vector<std::span<const std::size_t>> out;
    std::size_t b = 0;
    for (std::size_t j = 1; j <= walk.size(); ++j) {
        if (j == walk.size() || walk[j] == start) {
            out.push_back(walk.subspan(b, j - b));
            b = j;
        }
    }
    return out;
}

std::string check_segments_complete(const Graph& g, std::size_t start, std::span<const std::size_t> walk) {
    // Every segment but the last must cover the whole reachable component.
    const auto dist = hop_distances(g, start);
    std::size_t reachable = 0;
    for (auto d : dist) reachable += d != std::numeric_limits<std::size_t>::max();
    const auto segs = segments(start, walk);
    for (std::size_t s = 0; s + 1 < segs.size(); ++s) {
        if (segs[s].size() != reachable) return "restart before exhausting the component";
    }
    return {};
}

} // namespace

std::string check_bfs(const Graph& g, std::size_t start, std::size_t K, std::span<const std::size_t> walk) {
    if (auto e = check_common(g, start, K, walk); !e.empty()) return "bfs: " + e;
    const auto dist = hop_distances(g, start);
    for (auto seg : segments(start, walk)) {
        std::set<std::size_t> seen;
        for (std::size_t j = 0; j < seg.size(); ++j) {
            if (!seen.insert(seg[j]).second) return "bfs: repeated node inside a segment";
            if (dist[seg[j]] == std::numeric_limits<std::size_t>::max()) return "bfs: unreachable node visited";
            if (j > 0 && dist[seg[j]] < dist[seg[j - 1]]) return "bfs: depth decreases";
        }
    }
    return check_segments_complete(g, start, walk);
}

std::string check_dfs(const Graph& g, std::size_t start, std::size_t K, std::span<const std::size_t> walk) {
    if (auto e = check_common(g, start, K, walk); !e.empty()) return "dfs: " + e;
    for (auto seg : segments(start, walk)) {
        std::set<std::size_t> seen;
        // Preorder property: each new node is adjacent to some node on the
        // current root path, which is what remains after backtracking.
        std::vector<std::size_t> path;
        for (auto v : seg) {
            if (!seen.insert(v).second) return "dfs: repeated node inside a segment";
            if (path.empty()) {
                path.push_back(v);
                continue;
            }
            while (!path.empty() && !g.has_edge(path.back(), v)) path.pop_back();
            if (path.empty()) return "dfs: node not adjacent to the current branch";
            path.push_back(v);
        }
    }
    return check_segments_complete(g, start, walk);
}

std::string check_rw(const Graph& g, std::size_t start, std::size_t K, std::span<const std::size_t> walk) {
    if (auto e = check_common(g, start, K, walk); !e.empty()) return "rw: " + e;
    for (std::size_t j = 1; j < walk.size(); ++j) {
        const auto u = walk[j - 1], v = walk[j];
        const bool stall = u == v && g.neighbors(u).empty();
        if (!stall && !g.has_edge(u, v)) return "rw: step " + std::to_string(u) + "->" + std::to_string(v) + " is not an edge";
    }
    return {};
}

std::string check_walk_set(const Graph& g, const graph::WalkSet& ws) {
    if (ws.n_nodes != g.n_nodes()) return "walk set node count mismatch";
    if (ws.nodes.size() != ws.n_walks() * ws.K) return "walk set storage size mismatch";
    for (std::size_t m = 0; m < ws.M; ++m) {
        for (std::size_t i = 0; i < ws.n_nodes; ++i) {
            if (auto e = check_bfs(g, i, ws.K, ws.walk(graph::WalkType::BFS, m, i)); !e.empty()) return e;
            if (auto e = check_dfs(g, i, ws.K, ws.walk(graph::WalkType::DFS, m, i)); !e.empty()) return e;
            if (auto e = check_rw(g, i, ws.K, ws.walk(graph::WalkType::RW, m, i)); !e.empty()) return e;
        }
    }
    return {};
}

WalkSuiteResult walk_invariant_suite(std::uint64_t seed, std::size_t n_graphs, std::size_t max_nodes) {
    WalkSuiteResult res;
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < n_graphs; ++t) {
        const auto g = random_graph(rng(), max_nodes);
        const std::size_t K = std::uniform_int_distribution<std::size_t>(1, 25)(rng);
        const std::size_t M = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
        const std::uint64_t walk_seed = rng();
        const auto a = graph::generate_walks(g, K, M, walk_seed);
        const auto b = graph::generate_walks(g, K, M, walk_seed);
        ++res.graphs;
        res.walks += a.n_walks();
        const std::string tag = "graph " + std::to_string(t) + " (N=" + std::to_string(g.n_nodes()) + ", K=" + std::to_string(K) + "): ";
        if (auto e = check_walk_set(g, a); !e.empty()) res.failures.push_back(tag + e);
        if (a.nodes != b.nodes) res.failures.push_back(tag + "not deterministic under a fixed seed");
    }
    return res;
}

} // namespace spot::testing
