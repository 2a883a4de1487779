#pragma once

// Generators and independent oracles shared by the unit tests. Nothing here
// calls into the library's own component or rank machinery.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "coarse/exact.hpp"
#include "coarse/graph.hpp"
#include "coarse/space_models.hpp"

namespace coarse::testing {

inline std::string source_path(const std::string& rel) { return std::string(COARSE_SOURCE_DIR) + "/" + rel; }

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng); }

  // Points on the 1/den grid in [0, span]^dim, distinct.
  std::vector<std::pair<std::string, Point>> cloud(std::size_t n, std::size_t dim, std::int64_t span, std::int64_t den) {
    double room = 1;
    for (std::size_t i = 0; i < dim; ++i) room *= static_cast<double>(span * den + 1);
    if (static_cast<double>(n) > room / 2) throw std::invalid_argument("cloud grid too small for n distinct points");
    std::set<std::vector<std::int64_t>> used;
    std::vector<std::pair<std::string, Point>> out;
    while (out.size() < n) {
      std::vector<std::int64_t> raw(dim);
      for (auto& x : raw) x = between(0, span * den);
      if (!used.insert(raw).second) continue;
      Point p;
      for (auto x : raw) p.emplace_back(Rational(x, den));
      out.emplace_back("p" + std::to_string(out.size()), p);
    }
    return out;
  }

  Graph graph(std::size_t n, double p) {
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v)
        if (coin(p)) edges.emplace_back(u, v);
    return Graph::from_edges(n, edges);
  }

  // Random graph with every degree at most `cap`: candidate edges in shuffled
  // order, kept while both endpoints have room.
  Graph bounded_degree_graph(std::size_t n, std::size_t cap, double p) {
    std::vector<Edge> cand;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v)
        if (coin(p)) cand.emplace_back(u, v);
    std::shuffle(cand.begin(), cand.end(), rng);
    std::vector<std::size_t> deg(n, 0);
    std::vector<Edge> edges;
    for (auto [u, v] : cand)
      if (deg[u] < cap && deg[v] < cap) {
        ++deg[u];
        ++deg[v];
        edges.emplace_back(u, v);
      }
    return Graph::from_edges(n, edges);
  }

  // Random tree on n vertices with degree at most cap (cap >= 2): each new
  // vertex hangs off a random earlier vertex that still has room.
  Graph tree(std::size_t n, std::size_t cap) {
    std::vector<std::size_t> deg(n, 0);
    std::vector<Edge> edges;
    for (std::size_t v = 1; v < n; ++v) {
      std::vector<std::size_t> open;
      for (std::size_t u = 0; u < v; ++u)
        if (deg[u] < cap) open.push_back(u);
      std::size_t u = open[static_cast<std::size_t>(between(0, static_cast<std::int64_t>(open.size()) - 1))];
      ++deg[u];
      ++deg[v];
      edges.emplace_back(u, v);
    }
    return Graph::from_edges(n, edges);
  }
};

// Component count by breadth-first search.
inline std::size_t bfs_component_count(const Graph& g) {
  std::vector<std::vector<std::size_t>> adj(g.vertex_count);
  for (auto [u, v] : g.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<bool> seen(g.vertex_count, false);
  std::size_t count = 0;
  for (std::size_t s = 0; s < g.vertex_count; ++s) {
    if (seen[s]) continue;
    ++count;
    std::deque<std::size_t> q{s};
    seen[s] = true;
    while (!q.empty()) {
      auto u = q.front();
      q.pop_front();
      for (auto v : adj[u])
        if (!seen[v]) {
          seen[v] = true;
          q.push_back(v);
        }
    }
  }
  return count;
}

// BFS partition as a set of vertex sets.
inline std::set<std::set<std::size_t>> bfs_partition(const Graph& g) {
  std::vector<std::vector<std::size_t>> adj(g.vertex_count);
  for (auto [u, v] : g.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<bool> seen(g.vertex_count, false);
  std::set<std::set<std::size_t>> out;
  for (std::size_t s = 0; s < g.vertex_count; ++s) {
    if (seen[s]) continue;
    std::set<std::size_t> comp;
    std::deque<std::size_t> q{s};
    seen[s] = true;
    while (!q.empty()) {
      auto u = q.front();
      q.pop_front();
      comp.insert(u);
      for (auto v : adj[u])
        if (!seen[v]) {
          seen[v] = true;
          q.push_back(v);
        }
    }
    out.insert(comp);
  }
  return out;
}

// Rank over Q of an integer matrix by fraction-free Bareiss elimination.
inline std::size_t bareiss_rank(std::vector<std::vector<BigInt>> m) {
  std::size_t rows = m.size(), cols = rows ? m[0].size() : 0, rank = 0;
  BigInt prev = 1;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t pivot = rank;
    while (pivot < rows && m[pivot][c] == 0) ++pivot;
    if (pivot == rows) continue;
    std::swap(m[pivot], m[rank]);
    for (std::size_t r = rank + 1; r < rows; ++r) {
      for (std::size_t k = c + 1; k < cols; ++k) m[r][k] = (m[rank][c] * m[r][k] - m[r][c] * m[rank][k]) / prev;
      m[r][c] = 0;
    }
    prev = m[rank][c];
    ++rank;
  }
  return rank;
}

// dim H_0 = |V| - rank(boundary d_1), with d_1 the vertex-by-edge incidence matrix.
inline std::size_t h0_rank(const Graph& g) {
  std::vector<std::vector<BigInt>> d(g.vertex_count, std::vector<BigInt>(g.edges.size(), 0));
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    d[g.edges[e].first][e] = -1;
    d[g.edges[e].second][e] = 1;
  }
  return g.vertex_count - bareiss_rank(std::move(d));
}

// True when the edge list has no cycle (checked by DFS on an explicit adjacency).
inline bool acyclic(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<std::size_t> parent(n, SIZE_MAX);
  std::vector<bool> seen(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      bool skipped_parent = false;
      for (auto v : adj[u]) {
        if (v == parent[u] && !skipped_parent) {
          skipped_parent = true;
          continue;
        }
        if (seen[v]) return false;
        seen[v] = true;
        parent[v] = u;
        stack.push_back(v);
      }
    }
  }
  return true;
}

inline Point pt(std::initializer_list<Rational> xs) { return Point(xs); }

}  // namespace coarse::testing
