#include "sagefin/bean_conv.hpp"

#include <limits>
#include <string>

namespace sagefin {

Index node_message_width(Index self, Index nbr, Index edge, Aggregator agg) {
  return agg == Aggregator::Mean ? self + nbr + edge : self + 2 * nbr + 2 * edge;
}

BeanConvParams make_bean_conv(LayerDims in, LayerDims out, Aggregator agg,
                              bool post, Rng& rng) {
  BeanConvParams p;
  p.aggregator = agg;
  p.post = post;
  p.u_lin = make_linear(node_message_width(in.u, in.v, in.e, agg), out.u, rng);
  p.v_lin = make_linear(node_message_width(in.v, in.u, in.e, agg), out.v, rng);
  p.e_lin = make_linear(in.u + in.v + in.e, out.e, rng);
  if (post) {
    p.u_bn = make_batchnorm(out.u);
    p.v_bn = make_batchnorm(out.v);
    p.e_bn = make_batchnorm(out.e);
  } else {
    p.u_bn = make_batchnorm(0);
    p.v_bn = make_batchnorm(0);
    p.e_bn = make_batchnorm(0);
  }
  return p;
}

RowVector aggregate_mean(const Matrix& rows, const std::vector<int>& index_set) {
  RowVector acc = RowVector::Zero(rows.cols());
  for (int i : index_set) {
    if (i < 0 || i >= rows.rows()) {
      throw IndexOutOfRange("aggregate_mean index " + std::to_string(i) +
                            " outside " + std::to_string(rows.rows()) + " rows");
    }
    acc += rows.row(i);
  }
  if (!index_set.empty()) acc /= static_cast<double>(index_set.size());
  return acc;
}

namespace {

// Assembles the per-node message matrix for one target partition: the node's
// own row, then mean (and optionally max) over cross-partition neighbor rows
// and over incident edge rows. Empty aggregates are zero.
Matrix assemble_node_messages(const GraphView& view, Partition p,
                              const Matrix& self_rows, const Matrix& nbr_rows,
                              const Matrix& edge_rows, Aggregator agg,
                              Eigen::MatrixXi* amax_nbr, Eigen::MatrixXi* amax_edge) {
  const Index n = self_rows.rows();
  const Index a = self_rows.cols();
  const Index b = nbr_rows.cols();
  const Index c = edge_rows.cols();
  const bool with_max = agg == Aggregator::MeanMax;

  Matrix msg = Matrix::Zero(n, node_message_width(a, b, c, agg));
  if (with_max) {
    amax_nbr->setConstant(n, b, -1);
    amax_edge->setConstant(n, c, -1);
  }

  const Index max_nbr_off = a + b;
  const Index mean_edge_off = with_max ? a + 2 * b : a + b;
  const Index max_edge_off = mean_edge_off + c;

  for (Index i = 0; i < n; ++i) {
    msg.block(i, 0, 1, a) = self_rows.row(i);
    RowVector nbr_sum = RowVector::Zero(b);
    RowVector edge_sum = RowVector::Zero(c);
    RowVector nbr_max, edge_max;
    if (with_max) {
      nbr_max = RowVector::Constant(b, -std::numeric_limits<double>::infinity());
      edge_max = RowVector::Constant(c, -std::numeric_limits<double>::infinity());
    }
    int deg = 0;
    view.for_each_incident(p, static_cast<int>(i), [&](int e, int nbr) {
      nbr_sum += nbr_rows.row(nbr);
      edge_sum += edge_rows.row(e);
      if (with_max) {
        for (Index f = 0; f < b; ++f) {
          if (nbr_rows(nbr, f) > nbr_max(f)) {
            nbr_max(f) = nbr_rows(nbr, f);
            (*amax_nbr)(i, f) = nbr;
          }
        }
        for (Index f = 0; f < c; ++f) {
          if (edge_rows(e, f) > edge_max(f)) {
            edge_max(f) = edge_rows(e, f);
            (*amax_edge)(i, f) = e;
          }
        }
      }
      ++deg;
    });
    if (deg > 0) {
      msg.block(i, a, 1, b) = nbr_sum / static_cast<double>(deg);
      msg.block(i, mean_edge_off, 1, c) = edge_sum / static_cast<double>(deg);
      if (with_max) {
        msg.block(i, max_nbr_off, 1, b) = nbr_max;
        msg.block(i, max_edge_off, 1, c) = edge_max;
      }
    }
  }
  return msg;
}

Matrix post_stage(const Matrix& lin_out, LinearParams&, BatchNormParams& bn,
                  bool post, bool training, bool update_running,
                  BatchNormCache* bn_cache, Matrix* act) {
  if (!post) {
    if (act) *act = lin_out;
    return lin_out;
  }
  Matrix normed = batchnorm_forward(lin_out, bn, training, update_running, bn_cache);
  if (act) *act = normed;
  return relu(normed);
}

}  // namespace

LayerState bean_conv_forward(const GraphView& view, const LayerState& in,
                             BeanConvParams& params, bool training,
                             bool update_running, BeanConvCache* cache) {
  const BipartiteGraph& g = view.base();
  if (in.u.rows() != g.num_u() || in.v.rows() != g.num_v() ||
      in.e.rows() != g.num_edges()) {
    throw DimensionMismatch("layer state row counts do not match graph");
  }

  BeanConvCache local;
  BeanConvCache& c = cache ? *cache : local;

  c.msg_u = assemble_node_messages(view, Partition::U, in.u, in.v, in.e,
                                   params.aggregator, &c.amax_u_nbr, &c.amax_u_edge);
  c.msg_v = assemble_node_messages(view, Partition::V, in.v, in.u, in.e,
                                   params.aggregator, &c.amax_v_nbr, &c.amax_v_edge);

  // Edge target: both endpoint rows plus the edge's own row, no aggregation.
  const Index a = in.u.cols(), b = in.v.cols(), ce = in.e.cols();
  c.msg_e.resize(g.num_edges(), a + b + ce);
  for (Index e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(static_cast<int>(e));
    c.msg_e.block(e, 0, 1, a) = in.u.row(ed.u);
    c.msg_e.block(e, a, 1, b) = in.v.row(ed.v);
    c.msg_e.block(e, a + b, 1, ce) = in.e.row(e);
  }

  LayerState out;
  out.u = post_stage(linear_forward(c.msg_u, params.u_lin), params.u_lin,
                     params.u_bn, params.post, training, update_running,
                     &c.bn_u, &c.act_u);
  out.v = post_stage(linear_forward(c.msg_v, params.v_lin), params.v_lin,
                     params.v_bn, params.post, training, update_running,
                     &c.bn_v, &c.act_v);
  out.e = post_stage(linear_forward(c.msg_e, params.e_lin), params.e_lin,
                     params.e_bn, params.post, training, update_running,
                     &c.bn_e, &c.act_e);
  c.valid = true;
  return out;
}

BeanConvGrads make_bean_conv_grads(const BeanConvParams& p) {
  BeanConvGrads g;
  auto zero_lin = [](const LinearParams& lp, LinearGrads& lg) {
    lg.w = Matrix::Zero(lp.w.rows(), lp.w.cols());
    lg.b = RowVector::Zero(lp.b.size());
  };
  zero_lin(p.u_lin, g.u_lin);
  zero_lin(p.v_lin, g.v_lin);
  zero_lin(p.e_lin, g.e_lin);
  auto zero_bn = [](const BatchNormParams& bp, BatchNormGrads& bg) {
    bg.gamma = RowVector::Zero(bp.dim());
    bg.beta = RowVector::Zero(bp.dim());
  };
  zero_bn(p.u_bn, g.u_bn);
  zero_bn(p.v_bn, g.v_bn);
  zero_bn(p.e_bn, g.e_bn);
  return g;
}

namespace {

// Backward of one node-target branch: ReLU -> BN -> linear, then scatter the
// message gradient back onto the input state.
void node_branch_backward(const GraphView& view, Partition p, const Matrix& msg,
                          const Matrix& act, const BatchNormCache& bn_cache,
                          const LinearParams& lin, const BatchNormParams& bn,
                          bool post, Aggregator agg, const Matrix& gout,
                          const Eigen::MatrixXi& amax_nbr,
                          const Eigen::MatrixXi& amax_edge, Matrix& gin_self,
                          Matrix& gin_nbr, Matrix& gin_edge, LinearGrads& glin,
                          BatchNormGrads& gbn) {
  Matrix g = gout;
  if (post) {
    g = relu_backward(act, g);
    g = batchnorm_backward(bn_cache, bn, g, gbn);
  }
  LinearGrads lg;
  const Matrix gmsg = linear_backward(msg, lin, g, lg);
  glin.w += lg.w;
  glin.b += lg.b;

  const Index a = gin_self.cols();
  const Index b = gin_nbr.cols();
  const Index c = gin_edge.cols();
  const bool with_max = agg == Aggregator::MeanMax;
  const Index max_nbr_off = a + b;
  const Index mean_edge_off = with_max ? a + 2 * b : a + b;
  const Index max_edge_off = mean_edge_off + c;

  for (Index i = 0; i < gmsg.rows(); ++i) {
    gin_self.row(i) += gmsg.block(i, 0, 1, a);
    const int deg = view.alive_degree(p, static_cast<int>(i));
    if (deg == 0) continue;
    const double inv = 1.0 / static_cast<double>(deg);
    view.for_each_incident(p, static_cast<int>(i), [&](int e, int nbr) {
      gin_nbr.row(nbr) += inv * gmsg.block(i, a, 1, b);
      gin_edge.row(e) += inv * gmsg.block(i, mean_edge_off, 1, c);
    });
    if (with_max) {
      for (Index f = 0; f < b; ++f) {
        const int nbr = amax_nbr(i, f);
        if (nbr >= 0) gin_nbr(nbr, f) += gmsg(i, max_nbr_off + f);
      }
      for (Index f = 0; f < c; ++f) {
        const int e = amax_edge(i, f);
        if (e >= 0) gin_edge(e, f) += gmsg(i, max_edge_off + f);
      }
    }
  }
}

}  // namespace

LayerState bean_conv_backward(const GraphView& view, const LayerState& in,
                              const BeanConvParams& params,
                              const BeanConvCache& cache, const LayerState& gout,
                              BeanConvGrads& pg) {
  if (!cache.valid) {
    throw MissingForwardCache("bean_conv backward without forward cache");
  }
  const BipartiteGraph& g = view.base();

  LayerState gin;
  gin.u = Matrix::Zero(in.u.rows(), in.u.cols());
  gin.v = Matrix::Zero(in.v.rows(), in.v.cols());
  gin.e = Matrix::Zero(in.e.rows(), in.e.cols());

  node_branch_backward(view, Partition::U, cache.msg_u, cache.act_u, cache.bn_u,
                       params.u_lin, params.u_bn, params.post, params.aggregator,
                       gout.u, cache.amax_u_nbr, cache.amax_u_edge, gin.u, gin.v,
                       gin.e, pg.u_lin, pg.u_bn);
  node_branch_backward(view, Partition::V, cache.msg_v, cache.act_v, cache.bn_v,
                       params.v_lin, params.v_bn, params.post, params.aggregator,
                       gout.v, cache.amax_v_nbr, cache.amax_v_edge, gin.v, gin.u,
                       gin.e, pg.v_lin, pg.v_bn);

  // Edge branch.
  {
    Matrix ge = gout.e;
    if (params.post) {
      ge = relu_backward(cache.act_e, ge);
      ge = batchnorm_backward(cache.bn_e, params.e_bn, ge, pg.e_bn);
    }
    LinearGrads lg;
    const Matrix gmsg = linear_backward(cache.msg_e, params.e_lin, ge, lg);
    pg.e_lin.w += lg.w;
    pg.e_lin.b += lg.b;
    const Index a = in.u.cols(), b = in.v.cols(), c = in.e.cols();
    for (Index e = 0; e < g.num_edges(); ++e) {
      const Edge& ed = g.edge(static_cast<int>(e));
      gin.u.row(ed.u) += gmsg.block(e, 0, 1, a);
      gin.v.row(ed.v) += gmsg.block(e, a, 1, b);
      gin.e.row(e) += gmsg.block(e, a + b, 1, c);
    }
  }
  return gin;
}

void adam_step(BeanConvParams& p, const BeanConvGrads& g, const AdamState& state) {
  adam_step(p.u_lin, g.u_lin, state);
  adam_step(p.v_lin, g.v_lin, state);
  adam_step(p.e_lin, g.e_lin, state);
  if (p.post) {
    adam_step(p.u_bn, g.u_bn, state);
    adam_step(p.v_bn, g.v_bn, state);
    adam_step(p.e_bn, g.e_bn, state);
  }
}

}  // namespace sagefin
