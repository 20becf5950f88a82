#pragma once

#include <cstdint>
#include <functional>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sagefin/errors.hpp"
#include "sagefin/types.hpp"

namespace sagefin {

struct Edge {
  int u = 0;  // index into the U partition
  int v = 0;  // index into the V partition

  bool operator==(const Edge&) const = default;
};

// Neighborhood of one node. `neighbors[k]` is the node on the far end of
// incident edge `edges[k]`, so the two lists are parallel and equally long
// (parallel edges contribute one entry each). Edge indices are ascending.
struct NeighborView {
  Partition partition = Partition::U;
  int node = 0;
  std::vector<int> neighbors;
  std::vector<int> edges;
};

// Node/edge closure reachable within n hops of one node. Hop 0 is the node
// itself; each hop crosses to the other partition. `edges` holds every edge
// with both endpoints inside the node set. All lists are sorted ascending.
struct Neighborhood {
  std::vector<int> u_nodes;
  std::vector<int> v_nodes;
  std::vector<int> edges;
};

// Immutable bipartite node-and-edge-attributed graph. Both partitions carry
// dense feature matrices, edges carry their own features, and incidence is
// indexed CSR-style per partition for O(deg) neighborhood access. Safe for
// concurrent reads once built.
class BipartiteGraph {
 public:
  BipartiteGraph() = default;
  BipartiteGraph(Matrix u_features, Matrix v_features, std::vector<Edge> edges,
                 Matrix e_features, std::vector<Label> u_labels,
                 std::vector<Label> v_labels);

  Index num_u() const { return u_features_.rows(); }
  Index num_v() const { return v_features_.rows(); }
  Index num_nodes(Partition p) const { return p == Partition::U ? num_u() : num_v(); }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }

  const Matrix& u_features() const { return u_features_; }
  const Matrix& v_features() const { return v_features_; }
  const Matrix& e_features() const { return e_features_; }
  const Matrix& features(Partition p) const {
    return p == Partition::U ? u_features_ : v_features_;
  }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }

  const std::vector<Label>& u_labels() const { return u_labels_; }
  const std::vector<Label>& v_labels() const { return v_labels_; }
  const std::vector<Label>& labels(Partition p) const {
    return p == Partition::U ? u_labels_ : v_labels_;
  }
  Label label(Partition p, int node) const {
    return labels(p)[static_cast<std::size_t>(node)];
  }

  // Endpoint of `e` on the given side / opposite side.
  int endpoint(int e, Partition p) const {
    return p == Partition::U ? edges_[static_cast<std::size_t>(e)].u
                             : edges_[static_cast<std::size_t>(e)].v;
  }

  int degree(Partition p, int node) const;
  NeighborView neighbors(Partition p, int node) const;

  // Incident edge indices of `node`, ascending. Cheap span-style access used
  // by the convolution inner loops.
  const int* incident_begin(Partition p, int node) const;
  const int* incident_end(Partition p, int node) const;

  // True if the (u, v) pair exists as at least one edge.
  bool has_pair(int u, int v) const {
    return pair_set_.count(pair_key(u, v)) > 0;
  }
  Index num_distinct_pairs() const { return static_cast<Index>(pair_set_.size()); }

  void check_node(Partition p, int node) const;
  void check_edge(int e) const;

  static std::uint64_t pair_key(int u, int v) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
  }

 private:
  Matrix u_features_;
  Matrix v_features_;
  std::vector<Edge> edges_;
  Matrix e_features_;
  std::vector<Label> u_labels_;
  std::vector<Label> v_labels_;

  // CSR incidence: incident edge ids of node n live in
  // adj_edges[adj_ptr[n] .. adj_ptr[n + 1]).
  std::vector<int> u_adj_ptr_, u_adj_edges_;
  std::vector<int> v_adj_ptr_, v_adj_edges_;
  std::unordered_set<std::uint64_t> pair_set_;
};

BipartiteGraph build_graph(Matrix u_features, Matrix v_features,
                           std::vector<Edge> edges, Matrix e_features,
                           std::vector<Label> u_labels = {},
                           std::vector<Label> v_labels = {});

// Logical edge mask over an immutable base graph. Removing an edge hides it
// from every aggregation without touching the base; feature matrices and
// edge indices stay stable. Copies share nothing mutable.
class GraphView {
 public:
  explicit GraphView(const BipartiteGraph& g) : g_(&g) {}

  const BipartiteGraph& base() const { return *g_; }

  bool edge_alive(int e) const {
    return removed_.empty() || !removed_[static_cast<std::size_t>(e)];
  }
  Index num_removed() const { return num_removed_; }

  GraphView without_edge(int e) const;
  GraphView without_edges(const std::vector<int>& es) const;

  int alive_degree(Partition p, int node) const;

  // Calls fn(edge_index, neighbor_index) for every alive incident edge of
  // `node`, in ascending edge order.
  template <typename Fn>
  void for_each_incident(Partition p, int node, Fn&& fn) const {
    const Partition q = other(p);
    for (const int* it = g_->incident_begin(p, node),
                  * end = g_->incident_end(p, node);
         it != end; ++it) {
      if (edge_alive(*it)) fn(*it, g_->endpoint(*it, q));
    }
  }

  NeighborView neighbors(Partition p, int node) const;

 private:
  const BipartiteGraph* g_;
  std::vector<std::uint8_t> removed_;  // empty means nothing removed
  Index num_removed_ = 0;
};

GraphView remove_edge_view(const BipartiteGraph& g, int edge_index);

Neighborhood n_hop_neighborhood(const BipartiteGraph& g, Partition p, int node,
                                int n);

// BFS distance from (p, node) to every node, by partition; -1 = unreachable.
// Distances respect the view's edge mask.
std::pair<std::vector<int>, std::vector<int>> bfs_distances(const GraphView& view,
                                                            Partition p, int node);

}  // namespace sagefin
