#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dynperc {

using Vertex = std::uint32_t;
using EdgeId = std::uint32_t;

struct Edge {
  Vertex u;
  Vertex v;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  Vertex vertex;
  EdgeId edge;
};

/// Finite, simple, connected, undirected graph with stable edge ids.
///
/// Edge ids are 0..|E|-1 in the order the constructor produced them. Graphs
/// are immutable once built and can be shared freely between threads.
class Graph {
 public:
  /// Builds a graph keeping `edges` in input order as edge ids.
  /// Throws Error{kOutOfRange | kLoopEdge | kDuplicateEdge | kDisconnected}.
  static Graph from_edges(std::size_t n_vertices, std::span<const Edge> edges,
                          std::string descriptor = "edges");

  std::size_t vertex_count() const { return n_vertices_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }

  std::span<const Neighbor> neighbors(Vertex v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  std::size_t degree(Vertex v) const { return offsets_[v + 1] - offsets_[v]; }

  const std::string& descriptor() const { return descriptor_; }

  // Set only by constructors whose output is vertex-transitive by
  // construction (torus, hypercube, cycle, complete graph).
  bool certified_transitive() const { return certified_transitive_; }

 private:
  Graph() = default;

  friend Graph build_torus(std::size_t, std::size_t);
  friend Graph build_hypercube(std::size_t);
  friend Graph build_complete(std::size_t);

  std::size_t n_vertices_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
  std::string descriptor_;
  bool certified_transitive_ = false;
};

/// Torus Z_n^d. For n = 2 the doubled edges collapse and the result is the
/// hypercube {0,1}^d. Edge ids are lexicographic on (min, max) endpoints.
Graph build_torus(std::size_t n, std::size_t d);
Graph build_hypercube(std::size_t d);
Graph build_cycle(std::size_t n);
Graph build_path(std::size_t n);
Graph build_star(std::size_t leaves);
Graph build_complete(std::size_t n);
Graph build_from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> pairs);

/// Degree-biased stationary law of simple random walk: deg(x) / 2|E|.
class StationaryDist {
 public:
  explicit StationaryDist(std::vector<double> weights) : weights_(std::move(weights)) {}

  const std::vector<double>& weights() const { return weights_; }
  double operator[](std::size_t x) const { return weights_[x]; }
  std::size_t size() const { return weights_.size(); }

 private:
  std::vector<double> weights_;
};

StationaryDist stationary_distribution(const Graph& g);

std::vector<std::size_t> bfs_distances(const Graph& g, Vertex source);
std::size_t diameter(const Graph& g);
bool is_bipartite(const Graph& g);

// Necessary conditions for vertex-transitivity: regular, and every vertex has
// the same multiset of BFS distances. Cheap heuristic, not a proof.
bool looks_vertex_transitive(const Graph& g);

// Edge-list text format: "n m" then m lines "u v".
Graph read_edge_list(std::istream& in);
Graph read_edge_list_file(const std::string& path);
void write_edge_list(std::ostream& out, const Graph& g);

}  // namespace dynperc
