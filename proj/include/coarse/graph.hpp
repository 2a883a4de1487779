#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "coarse/error.hpp"
#include "coarse/union_find.hpp"

namespace coarse {

using Edge = std::pair<std::size_t, std::size_t>;

// Simple undirected graph on vertices 0..n-1. Edges are stored normalized
// (first < second) in insertion order; adjacency lists are sorted.
struct Graph {
  std::size_t vertex_count = 0;
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> adjacency;

  static Graph from_edges(std::size_t n, std::vector<Edge> edge_list) {
    Graph g;
    g.vertex_count = n;
    g.adjacency.resize(n);
    for (auto [u, v] : edge_list) {
      if (u >= n || v >= n || u == v) throw ContractError("edge endpoints must be distinct vertices of the graph");
      if (u > v) std::swap(u, v);
      g.edges.emplace_back(u, v);
      g.adjacency[u].push_back(v);
      g.adjacency[v].push_back(u);
    }
    for (auto& a : g.adjacency) std::sort(a.begin(), a.end());
    return g;
  }

  std::size_t degree(std::size_t v) const { return adjacency[v].size(); }

  std::size_t max_degree() const {
    std::size_t d = 0;
    for (auto& a : adjacency) d = std::max(d, a.size());
    return d;
  }

  // Component id per vertex (numbered by smallest member) via union-find over
  // edges in stored order.
  std::vector<std::size_t> components() const {
    UnionFind uf(vertex_count);
    for (auto [u, v] : edges) uf.unite(u, v);
    return uf.labels();
  }
};

}  // namespace coarse
