#pragma once

#include <vector>

#include "sagefin/graph.hpp"
#include "sagefin/nn.hpp"

namespace sagefin {

enum class Aggregator : std::uint8_t { Mean, MeanMax };

// Hidden representations of both node partitions and the edge set at one
// convolution depth. Row counts always match the base graph, masked edges
// included, so edge indices stay valid across views.
struct LayerState {
  Matrix u, v, e;
};

struct LayerDims {
  Index u = 0, v = 0, e = 0;
};

inline LayerDims dims_of(const LayerState& s) {
  return {s.u.cols(), s.v.cols(), s.e.cols()};
}

// One convolution layer. Each target (U node, V node, edge) has its own
// linear transform over the concatenated message vector plus an optional
// batch-norm + ReLU post stage; the final feature-decoder layer runs without
// the post stage so reconstructions can reach negative values.
struct BeanConvParams {
  LinearParams u_lin, v_lin, e_lin;
  BatchNormParams u_bn, v_bn, e_bn;
  Aggregator aggregator = Aggregator::Mean;
  bool post = true;  // batch norm + ReLU after the linear stage

  LayerDims out_dims() const {
    return {u_lin.out_dim(), v_lin.out_dim(), e_lin.out_dim()};
  }
};

// Width of the concatenated message feeding a node update: self plus one
// (mean) or two (mean||max) blocks for each of the neighbor and edge sources.
Index node_message_width(Index self, Index nbr, Index edge, Aggregator agg);

BeanConvParams make_bean_conv(LayerDims in, LayerDims out, Aggregator agg,
                              bool post, Rng& rng);

// Mean of the selected rows; empty selection yields the zero vector.
RowVector aggregate_mean(const Matrix& rows, const std::vector<int>& index_set);

struct BeanConvCache {
  Matrix msg_u, msg_v, msg_e;     // assembled linear inputs
  Matrix act_u, act_v, act_e;     // post-linear (and post-BN when enabled), pre-ReLU
  BatchNormCache bn_u, bn_v, bn_e;
  // Argmax row (edge index) per (node, feature) for the max blocks.
  Eigen::MatrixXi amax_u_nbr, amax_u_edge, amax_v_nbr, amax_v_edge;
  bool valid = false;
};

// Synchronous update: all three outputs are computed from the previous layer
// state. Masked edges never contribute to aggregates; their own output rows
// are still produced to keep indices stable.
LayerState bean_conv_forward(const GraphView& view, const LayerState& in,
                             BeanConvParams& params, bool training,
                             bool update_running = false,
                             BeanConvCache* cache = nullptr);

struct BeanConvGrads {
  LinearGrads u_lin, v_lin, e_lin;
  BatchNormGrads u_bn, v_bn, e_bn;
};

BeanConvGrads make_bean_conv_grads(const BeanConvParams& p);

// Returns gradients w.r.t. the input state; accumulates parameter gradients.
// Mean aggregation distributes 1/|set| to each contributing row.
LayerState bean_conv_backward(const GraphView& view, const LayerState& in,
                              const BeanConvParams& params,
                              const BeanConvCache& cache, const LayerState& gout,
                              BeanConvGrads& pg);

void adam_step(BeanConvParams& p, const BeanConvGrads& g, const AdamState& state);

}  // namespace sagefin
