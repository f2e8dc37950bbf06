#include "spot/graph/walks.hpp"

#include <algorithm>
#include <deque>
#include <ostream>

namespace spot::graph {

std::string_view walk_type_name(WalkType t) {
    switch (t) {
    case WalkType::BFS: return "bfs";
    case WalkType::DFS: return "dfs";
    case WalkType::RW: return "rw";
    }
    return "?";
}

namespace {

void check_start(const Graph& g, std::size_t start, std::size_t K) {
    if (start >= g.n_nodes()) throw GraphError("walk start " + std::to_string(start) + " is not a node");
    if (K == 0) throw GraphError("walk length must be at least 1");
}

std::vector<std::size_t> shuffled_neighbors(const Graph& g, std::size_t node, Rng& rng) {
    auto nb = g.neighbors(node);
    std::vector<std::size_t> order(nb.begin(), nb.end());
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

} // namespace

std::vector<std::size_t> bfs_walk(const Graph& g, std::size_t start, std::size_t K, Rng& rng) {
    check_start(g, start, K);
    std::vector<std::size_t> out;
    out.reserve(K);
    while (out.size() < K) {
        std::vector<char> seen(g.n_nodes(), 0);
        std::deque<std::size_t> queue{start};
        seen[start] = 1;
        while (!queue.empty() && out.size() < K) {
            const std::size_t u = queue.front();
            queue.pop_front();
            out.push_back(u);
            for (auto v : shuffled_neighbors(g, u, rng)) {
                if (!seen[v]) {
                    seen[v] = 1;
                    queue.push_back(v);
                }
            }
        }
    }
    return out;
}

std::vector<std::size_t> dfs_walk(const Graph& g, std::size_t start, std::size_t K, Rng& rng) {
    check_start(g, start, K);
    std::vector<std::size_t> out;
    out.reserve(K);
    while (out.size() < K) {
        std::vector<char> seen(g.n_nodes(), 0);
        std::vector<std::size_t> stack{start};
        while (!stack.empty() && out.size() < K) {
            const std::size_t u = stack.back();
            stack.pop_back();
            if (seen[u]) continue;
            seen[u] = 1;
            out.push_back(u);
            auto order = shuffled_neighbors(g, u, rng);
            // Push in reverse so the first shuffled neighbour is explored first.
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                if (!seen[*it]) stack.push_back(*it);
            }
        }
    }
    return out;
}

std::vector<std::size_t> random_walk(const Graph& g, std::size_t start, std::size_t K, Rng& rng) {
    check_start(g, start, K);
    std::vector<std::size_t> out{start};
    out.reserve(K);
    while (out.size() < K) {
        const auto nb = g.neighbors(out.back());
        if (nb.empty()) {
            out.push_back(out.back());
            continue;
        }
        std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
        out.push_back(nb[pick(rng)]);
    }
    return out;
}

std::size_t WalkSet::offset(WalkType type, std::size_t m, std::size_t node) const {
    return ((static_cast<std::size_t>(type) * M + m) * n_nodes + node) * K;
}

std::span<const std::size_t> WalkSet::walk(WalkType type, std::size_t m, std::size_t node) const {
    if (m >= M || node >= n_nodes) throw GraphError("walk index out of range");
    return std::span<const std::size_t>(nodes).subspan(offset(type, m, node), K);
}

WalkSet generate_walks(const Graph& g, std::size_t K, std::size_t M, std::uint64_t seed) {
    if (K == 0 || M == 0) throw GraphError("generate_walks requires K >= 1 and M >= 1");
    WalkSet ws;
    ws.n_nodes = g.n_nodes();
    ws.K = K;
    ws.M = M;
    ws.seed = seed;
    ws.nodes.resize(3 * M * ws.n_nodes * K);
    for (auto type : kWalkTypes) {
        for (std::size_t m = 0; m < M; ++m) {
            for (std::size_t i = 0; i < ws.n_nodes; ++i) {
                std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                                  static_cast<std::uint32_t>(type), static_cast<std::uint32_t>(m),
                                  static_cast<std::uint32_t>(i)};
                Rng rng(seq);
                std::vector<std::size_t> w;
                switch (type) {
                case WalkType::BFS: w = bfs_walk(g, i, K, rng); break;
                case WalkType::DFS: w = dfs_walk(g, i, K, rng); break;
                case WalkType::RW: w = random_walk(g, i, K, rng); break;
                }
                std::copy(w.begin(), w.end(), ws.nodes.begin() + static_cast<std::ptrdiff_t>(ws.offset(type, m, i)));
            }
        }
    }
    return ws;
}

void write_walks_csv(std::ostream& os, const WalkSet& walks) {
    os << "type,m,node";
    for (std::size_t k = 0; k < walks.K; ++k) os << ",k" << k;
    os << '\n';
    for (auto type : kWalkTypes) {
        for (std::size_t m = 0; m < walks.M; ++m) {
            for (std::size_t i = 0; i < walks.n_nodes; ++i) {
                os << walk_type_name(type) << ',' << m << ',' << i;
                for (auto v : walks.walk(type, m, i)) os << ',' << v;
                os << '\n';
            }
        }
    }
}

} // namespace spot::graph
