#include "dynperc/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

#include "dynperc/error.hpp"

namespace dynperc {

Graph Graph::from_edges(std::size_t n_vertices, std::span<const Edge> edges,
                        std::string descriptor) {
  if (n_vertices == 0) fail(ErrorCode::kOutOfRange, "graph needs at least one vertex");
  Graph g;
  g.n_vertices_ = n_vertices;
  g.descriptor_ = std::move(descriptor);
  g.edges_.assign(edges.begin(), edges.end());

  std::set<std::pair<Vertex, Vertex>> seen;
  std::vector<std::size_t> deg(n_vertices, 0);
  for (std::size_t i = 0; i < g.edges_.size(); ++i) {
    const auto [u, v] = g.edges_[i];
    if (u >= n_vertices || v >= n_vertices) {
      fail(ErrorCode::kOutOfRange, "edge " + std::to_string(i) + " has an endpoint out of range");
    }
    if (u == v) fail(ErrorCode::kLoopEdge, "edge " + std::to_string(i) + " is a self-loop");
    if (!seen.emplace(std::min(u, v), std::max(u, v)).second) {
      fail(ErrorCode::kDuplicateEdge, "edge " + std::to_string(i) + " duplicates an earlier edge");
    }
    ++deg[u];
    ++deg[v];
  }

  g.offsets_.assign(n_vertices + 1, 0);
  for (std::size_t x = 0; x < n_vertices; ++x) g.offsets_[x + 1] = g.offsets_[x] + deg[x];
  g.adjacency_.resize(g.offsets_.back());
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (EdgeId e = 0; e < g.edges_.size(); ++e) {
    const auto [u, v] = g.edges_[e];
    g.adjacency_[fill[u]++] = {v, e};
    g.adjacency_[fill[v]++] = {u, e};
  }

  const auto dist = bfs_distances(g, 0);
  if (std::any_of(dist.begin(), dist.end(),
                  [](std::size_t d) { return d == std::numeric_limits<std::size_t>::max(); })) {
    fail(ErrorCode::kDisconnected, "graph is not connected");
  }
  return g;
}

Graph build_torus(std::size_t n, std::size_t d) {
  if (n < 2 || d < 1) fail(ErrorCode::kInvalidArgument, "torus needs n >= 2 and d >= 1");
  std::size_t count = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (count > std::numeric_limits<Vertex>::max() / n) {
      fail(ErrorCode::kTooLarge, "torus vertex count overflows");
    }
    count *= n;
  }
  std::set<std::pair<Vertex, Vertex>> unique;
  for (std::size_t x = 0; x < count; ++x) {
    std::size_t stride = 1;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t coord = (x / stride) % n;
      const std::size_t y = x - coord * stride + ((coord + 1) % n) * stride;
      unique.emplace(static_cast<Vertex>(std::min(x, y)), static_cast<Vertex>(std::max(x, y)));
      stride *= n;
    }
  }
  std::vector<Edge> edges;
  edges.reserve(unique.size());
  for (const auto& [u, v] : unique) edges.push_back({u, v});

  std::ostringstream name;
  if (n == 2) {
    name << "hypercube(d=" << d << ")";
  } else if (d == 1) {
    name << "cycle(n=" << n << ")";
  } else {
    name << "torus(n=" << n << ",d=" << d << ")";
  }
  Graph g = Graph::from_edges(count, edges, name.str());
  g.certified_transitive_ = true;
  return g;
}

Graph build_hypercube(std::size_t d) {
  if (d < 1) fail(ErrorCode::kInvalidArgument, "hypercube needs d >= 1");
  return build_torus(2, d);
}

Graph build_cycle(std::size_t n) {
  if (n < 3) fail(ErrorCode::kInvalidArgument, "cycle needs n >= 3");
  return build_torus(n, 1);
}

Graph build_path(std::size_t n) {
  if (n < 2) fail(ErrorCode::kInvalidArgument, "path needs n >= 2");
  std::vector<Edge> edges;
  for (Vertex i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Graph::from_edges(n, edges, "path(n=" + std::to_string(n) + ")");
}

Graph build_star(std::size_t leaves) {
  if (leaves < 1) fail(ErrorCode::kInvalidArgument, "star needs at least one leaf");
  std::vector<Edge> edges;
  for (Vertex i = 1; i <= leaves; ++i) edges.push_back({0, i});
  return Graph::from_edges(leaves + 1, edges, "star(leaves=" + std::to_string(leaves) + ")");
}

Graph build_complete(std::size_t n) {
  if (n < 2) fail(ErrorCode::kInvalidArgument, "complete graph needs n >= 2");
  std::vector<Edge> edges;
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v) edges.push_back({u, v});
  Graph g = Graph::from_edges(n, edges, "complete(n=" + std::to_string(n) + ")");
  g.certified_transitive_ = true;
  return g;
}

Graph build_from_edges(std::size_t n,
                       std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [u, v] : pairs) {
    if (u >= n || v >= n) fail(ErrorCode::kOutOfRange, "edge endpoint out of range");
    edges.push_back({static_cast<Vertex>(u), static_cast<Vertex>(v)});
  }
  return Graph::from_edges(n, edges);
}

StationaryDist stationary_distribution(const Graph& g) {
  const double total = 2.0 * static_cast<double>(g.edge_count());
  std::vector<double> w(g.vertex_count());
  for (Vertex x = 0; x < g.vertex_count(); ++x) w[x] = static_cast<double>(g.degree(x)) / total;
  return StationaryDist(std::move(w));
}

std::vector<std::size_t> bfs_distances(const Graph& g, Vertex source) {
  constexpr auto kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(g.vertex_count(), kUnreached);
  std::queue<Vertex> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    const Vertex x = q.front();
    q.pop();
    for (const auto& nb : g.neighbors(x)) {
      if (dist[nb.vertex] == kUnreached) {
        dist[nb.vertex] = dist[x] + 1;
        q.push(nb.vertex);
      }
    }
  }
  return dist;
}

std::size_t diameter(const Graph& g) {
  std::size_t best = 0;
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    const auto d = bfs_distances(g, x);
    best = std::max(best, *std::max_element(d.begin(), d.end()));
  }
  return best;
}

bool is_bipartite(const Graph& g) {
  const auto d = bfs_distances(g, 0);
  for (const auto& e : g.edges())
    if (d[e.u] % 2 == d[e.v] % 2) return false;
  return true;
}

bool looks_vertex_transitive(const Graph& g) {
  auto profile = [&](Vertex x) {
    auto d = bfs_distances(g, x);
    std::sort(d.begin(), d.end());
    return d;
  };
  const auto ref = profile(0);
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    if (g.degree(x) != g.degree(0)) return false;
    if (profile(x) != ref) return false;
  }
  return true;
}

Graph read_edge_list(std::istream& in) {
  std::size_t n = 0, m = 0;
  if (!(in >> n >> m)) fail(ErrorCode::kIoError, "edge list: expected header 'n m'");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    long long u = -1, v = -1;
    if (!(in >> u >> v)) {
      fail(ErrorCode::kIoError, "edge list: expected " + std::to_string(m) + " edges, got " +
                                    std::to_string(i));
    }
    if (u < 0 || v < 0) fail(ErrorCode::kOutOfRange, "edge list: negative vertex id");
    edges.push_back({static_cast<Vertex>(u), static_cast<Vertex>(v)});
  }
  return Graph::from_edges(n, edges, "edge-list(n=" + std::to_string(n) + ",m=" +
                                         std::to_string(m) + ")");
}

Graph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open edge list file: " + path);
  return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << g.vertex_count() << ' ' << g.edge_count() << '\n';
  for (const auto& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

}  // namespace dynperc
