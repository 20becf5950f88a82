#include "sagefin/graph.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace sagefin {

namespace {

void build_incidence(const std::vector<Edge>& edges, Index n, Partition side,
                     std::vector<int>& ptr, std::vector<int>& out) {
  ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const Edge& e : edges) {
    const int node = side == Partition::U ? e.u : e.v;
    ++ptr[static_cast<std::size_t>(node) + 1];
  }
  for (std::size_t i = 1; i < ptr.size(); ++i) ptr[i] += ptr[i - 1];
  out.resize(edges.size());
  std::vector<int> cursor(ptr.begin(), ptr.end() - 1);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const int node = side == Partition::U ? edges[e].u : edges[e].v;
    out[static_cast<std::size_t>(cursor[static_cast<std::size_t>(node)]++)] =
        static_cast<int>(e);
  }
}

}  // namespace

BipartiteGraph::BipartiteGraph(Matrix u_features, Matrix v_features,
                               std::vector<Edge> edges, Matrix e_features,
                               std::vector<Label> u_labels,
                               std::vector<Label> v_labels)
    : u_features_(std::move(u_features)),
      v_features_(std::move(v_features)),
      edges_(std::move(edges)),
      e_features_(std::move(e_features)),
      u_labels_(std::move(u_labels)),
      v_labels_(std::move(v_labels)) {
  if (u_labels_.empty()) u_labels_.assign(static_cast<std::size_t>(num_u()), Label::Unknown);
  if (v_labels_.empty()) v_labels_.assign(static_cast<std::size_t>(num_v()), Label::Unknown);

  if (static_cast<Index>(edges_.size()) != e_features_.rows()) {
    throw DimensionMismatch("edge count " + std::to_string(edges_.size()) +
                            " != edge feature rows " +
                            std::to_string(e_features_.rows()));
  }
  if (static_cast<Index>(u_labels_.size()) != num_u() ||
      static_cast<Index>(v_labels_.size()) != num_v()) {
    throw DimensionMismatch("label vector length does not match node count");
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.u < 0 || e.u >= num_u() || e.v < 0 || e.v >= num_v()) {
      throw IndexOutOfRange("edge " + std::to_string(i) + " references (" +
                            std::to_string(e.u) + ", " + std::to_string(e.v) +
                            ") outside " + std::to_string(num_u()) + "x" +
                            std::to_string(num_v()));
    }
  }

  build_incidence(edges_, num_u(), Partition::U, u_adj_ptr_, u_adj_edges_);
  build_incidence(edges_, num_v(), Partition::V, v_adj_ptr_, v_adj_edges_);
  pair_set_.reserve(edges_.size());
  for (const Edge& e : edges_) pair_set_.insert(pair_key(e.u, e.v));
}

void BipartiteGraph::check_node(Partition p, int node) const {
  if (node < 0 || node >= num_nodes(p)) {
    throw IndexOutOfRange(std::string("node ") + std::to_string(node) +
                          " outside partition " + partition_name(p) +
                          " of size " + std::to_string(num_nodes(p)));
  }
}

void BipartiteGraph::check_edge(int e) const {
  if (e < 0 || e >= num_edges()) {
    throw IndexOutOfRange("edge " + std::to_string(e) + " outside edge set of size " +
                          std::to_string(num_edges()));
  }
}

const int* BipartiteGraph::incident_begin(Partition p, int node) const {
  const auto& ptr = p == Partition::U ? u_adj_ptr_ : v_adj_ptr_;
  const auto& adj = p == Partition::U ? u_adj_edges_ : v_adj_edges_;
  return adj.data() + ptr[static_cast<std::size_t>(node)];
}

const int* BipartiteGraph::incident_end(Partition p, int node) const {
  const auto& ptr = p == Partition::U ? u_adj_ptr_ : v_adj_ptr_;
  const auto& adj = p == Partition::U ? u_adj_edges_ : v_adj_edges_;
  return adj.data() + ptr[static_cast<std::size_t>(node) + 1];
}

int BipartiteGraph::degree(Partition p, int node) const {
  check_node(p, node);
  return static_cast<int>(incident_end(p, node) - incident_begin(p, node));
}

NeighborView BipartiteGraph::neighbors(Partition p, int node) const {
  check_node(p, node);
  NeighborView view{p, node, {}, {}};
  const Partition q = other(p);
  for (const int* it = incident_begin(p, node); it != incident_end(p, node); ++it) {
    view.edges.push_back(*it);
    view.neighbors.push_back(endpoint(*it, q));
  }
  return view;
}

BipartiteGraph build_graph(Matrix u_features, Matrix v_features,
                           std::vector<Edge> edges, Matrix e_features,
                           std::vector<Label> u_labels,
                           std::vector<Label> v_labels) {
  return BipartiteGraph(std::move(u_features), std::move(v_features),
                        std::move(edges), std::move(e_features),
                        std::move(u_labels), std::move(v_labels));
}

GraphView GraphView::without_edge(int e) const {
  g_->check_edge(e);
  GraphView out = *this;
  if (out.removed_.empty()) {
    out.removed_.assign(static_cast<std::size_t>(g_->num_edges()), 0);
  }
  if (!out.removed_[static_cast<std::size_t>(e)]) {
    out.removed_[static_cast<std::size_t>(e)] = 1;
    ++out.num_removed_;
  }
  return out;
}

GraphView GraphView::without_edges(const std::vector<int>& es) const {
  GraphView out = *this;
  if (es.empty()) return out;
  if (out.removed_.empty()) {
    out.removed_.assign(static_cast<std::size_t>(g_->num_edges()), 0);
  }
  for (int e : es) {
    g_->check_edge(e);
    if (!out.removed_[static_cast<std::size_t>(e)]) {
      out.removed_[static_cast<std::size_t>(e)] = 1;
      ++out.num_removed_;
    }
  }
  return out;
}

int GraphView::alive_degree(Partition p, int node) const {
  g_->check_node(p, node);
  int deg = 0;
  for (const int* it = g_->incident_begin(p, node); it != g_->incident_end(p, node); ++it) {
    if (edge_alive(*it)) ++deg;
  }
  return deg;
}

NeighborView GraphView::neighbors(Partition p, int node) const {
  g_->check_node(p, node);
  NeighborView view{p, node, {}, {}};
  for_each_incident(p, node, [&](int e, int nbr) {
    view.edges.push_back(e);
    view.neighbors.push_back(nbr);
  });
  return view;
}

GraphView remove_edge_view(const BipartiteGraph& g, int edge_index) {
  return GraphView(g).without_edge(edge_index);
}

Neighborhood n_hop_neighborhood(const BipartiteGraph& g, Partition p, int node,
                                int n) {
  g.check_node(p, node);
  if (n < 0) throw InvalidConfig("n-hop radius must be >= 0");

  std::vector<std::uint8_t> seen_u(static_cast<std::size_t>(g.num_u()), 0);
  std::vector<std::uint8_t> seen_v(static_cast<std::size_t>(g.num_v()), 0);
  auto& seen0 = p == Partition::U ? seen_u : seen_v;
  seen0[static_cast<std::size_t>(node)] = 1;

  std::deque<std::pair<Partition, int>> frontier{{p, node}};
  for (int hop = 0; hop < n && !frontier.empty(); ++hop) {
    std::deque<std::pair<Partition, int>> next;
    for (const auto& [fp, fn] : frontier) {
      const Partition q = other(fp);
      auto& seen_q = q == Partition::U ? seen_u : seen_v;
      for (const int* it = g.incident_begin(fp, fn); it != g.incident_end(fp, fn); ++it) {
        const int nbr = g.endpoint(*it, q);
        if (!seen_q[static_cast<std::size_t>(nbr)]) {
          seen_q[static_cast<std::size_t>(nbr)] = 1;
          next.emplace_back(q, nbr);
        }
      }
    }
    frontier.swap(next);
  }

  Neighborhood hood;
  for (Index i = 0; i < g.num_u(); ++i) {
    if (seen_u[static_cast<std::size_t>(i)]) hood.u_nodes.push_back(static_cast<int>(i));
  }
  for (Index i = 0; i < g.num_v(); ++i) {
    if (seen_v[static_cast<std::size_t>(i)]) hood.v_nodes.push_back(static_cast<int>(i));
  }
  for (Index e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(static_cast<int>(e));
    if (seen_u[static_cast<std::size_t>(ed.u)] && seen_v[static_cast<std::size_t>(ed.v)]) {
      hood.edges.push_back(static_cast<int>(e));
    }
  }
  return hood;
}

std::pair<std::vector<int>, std::vector<int>> bfs_distances(const GraphView& view,
                                                            Partition p, int node) {
  const BipartiteGraph& g = view.base();
  g.check_node(p, node);
  std::vector<int> dist_u(static_cast<std::size_t>(g.num_u()), -1);
  std::vector<int> dist_v(static_cast<std::size_t>(g.num_v()), -1);
  auto& d0 = p == Partition::U ? dist_u : dist_v;
  d0[static_cast<std::size_t>(node)] = 0;

  std::deque<std::pair<Partition, int>> queue{{p, node}};
  while (!queue.empty()) {
    const auto [qp, qn] = queue.front();
    queue.pop_front();
    const int d = (qp == Partition::U ? dist_u : dist_v)[static_cast<std::size_t>(qn)];
    const Partition nq = other(qp);
    auto& dn = nq == Partition::U ? dist_u : dist_v;
    view.for_each_incident(qp, qn, [&](int, int nbr) {
      if (dn[static_cast<std::size_t>(nbr)] < 0) {
        dn[static_cast<std::size_t>(nbr)] = d + 1;
        queue.emplace_back(nq, nbr);
      }
    });
  }
  return {std::move(dist_u), std::move(dist_v)};
}

}  // namespace sagefin
