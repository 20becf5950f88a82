#pragma once

#include <string>
#include <vector>

#include "sagefin/bean_conv.hpp"
#include "sagefin/graph.hpp"
#include "sagefin/nn.hpp"

namespace sagefin {

struct SageFinConfig {
  int conv_layers = 4;  // total P, split evenly between encoder and decoder
  int hidden_dim = 32;
  int latent_dim = 32;
  int mlp_depth = 4;  // dense layers in the structure / classifier heads
  int negative_ratio = 5;
  double lambda_feature = 1.0;
  double lambda_structure = 1.0;
  double lambda_class = 1.0;
  Aggregator aggregator = Aggregator::Mean;
  bool reconstruct_edge_features = true;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-column statistics used to standardize features; kept with the model so
// downstream commands reproduce the exact training-time inputs.
struct FeatureScaler {
  RowVector mean, stddev;
};

struct SageFinModel {
  SageFinConfig config;
  LayerDims input_dims;
  std::vector<BeanConvParams> encoder;  // conv_layers / 2
  std::vector<BeanConvParams> decoder;  // conv_layers / 2, last layer linear-only
  Mlp structure_decoder;  // [z_u ; z_v] -> edge-existence logit
  Mlp u_classifier, v_classifier;  // latent -> fraud logit
  AdamState adam;
  FeatureScaler u_scaler, v_scaler, e_scaler;
  std::uint64_t split_seed = 0;
  bool trained = false;

  const Mlp& classifier(Partition p) const {
    return p == Partition::U ? u_classifier : v_classifier;
  }
};

SageFinModel make_model(const SageFinConfig& config, LayerDims input_dims, Rng& rng);

// Initial layer state: the (standardized) input features themselves.
LayerState input_state(const BipartiteGraph& g);

struct EncodeCache {
  std::vector<LayerState> inputs;       // input to each encoder layer
  std::vector<BeanConvCache> layers;
  bool valid = false;
};

LayerState encode(const GraphView& view, SageFinModel& model, bool training,
                  bool update_running = false, EncodeCache* cache = nullptr);

struct DecodeCache {
  std::vector<LayerState> inputs;
  std::vector<BeanConvCache> layers;
  bool valid = false;
};

LayerState decode_features(const GraphView& view, const LayerState& latent,
                           SageFinModel& model, bool training,
                           bool update_running = false,
                           DecodeCache* cache = nullptr);

// Edge-existence logit for one candidate pair of latent rows.
double predict_edge(const RowVector& latent_u_row, const RowVector& latent_v_row,
                    const SageFinModel& model);

// Fraud logit for one latent row of the given partition.
double predict_node(const RowVector& latent_row, const SageFinModel& model,
                    Partition partition);

// Fraud logits for all nodes of a partition.
Vector predict_nodes(const Matrix& latent, const SageFinModel& model,
                     Partition partition);

struct EdgePair {
  int u = 0, v = 0;
};

// Uniformly samples ratio * |E| distinct node pairs that are not edges.
std::vector<EdgePair> sample_negative_edges(const BipartiteGraph& g, int ratio,
                                            Rng& rng);

struct LossBreakdown {
  double feature_u = 0, feature_v = 0, feature_e = 0;
  double structure = 0;
  double class_u = 0, class_v = 0;
  double total = 0;

  double feature_sum() const { return feature_u + feature_v + feature_e; }
  double class_sum() const { return class_u + class_v; }
  bool finite() const;
  std::string describe() const;
};

// Which nodes contribute to the classification term (labeled and in-split).
struct ClassMasks {
  std::vector<std::uint8_t> u, v;
};

struct ModelCache {
  EncodeCache enc;
  DecodeCache dec;
  LayerState latent;
  LayerState recon;
  Matrix struct_in;
  MlpCache struct_cache;
  Vector struct_logits, struct_targets;
  std::vector<EdgePair> struct_pairs;
  Matrix cls_in_u, cls_in_v;
  MlpCache cls_cache_u, cls_cache_v;
  Vector cls_logits_u, cls_logits_v, cls_targets_u, cls_targets_v;
  std::vector<int> cls_rows_u, cls_rows_v;
  bool valid = false;
};

// Composite objective: feature reconstruction MSE over U/V/E, binary
// cross-entropy over positive edges vs sampled negatives, and binary
// cross-entropy over the masked labeled nodes. Unknown-label nodes are never
// read. `positive_edges` selects which edges act as structure positives.
LossBreakdown loss_total(const BipartiteGraph& g, SageFinModel& model,
                         const ClassMasks& masks,
                         const std::vector<int>& positive_edges,
                         const std::vector<EdgePair>& negatives, bool training,
                         bool update_running = false, ModelCache* cache = nullptr);

struct ModelGrads {
  std::vector<BeanConvGrads> encoder, decoder;
  MlpGrads structure_decoder, u_classifier, v_classifier;
};

ModelGrads make_model_grads(const SageFinModel& model);

// Gradient of loss_total w.r.t. every parameter, from the caches of the
// matching forward call.
ModelGrads loss_backward(const BipartiteGraph& g, const SageFinModel& model,
                         const ModelCache& cache);

// One optimizer step over every parameter tensor; increments model.adam.t.
void apply_gradients(SageFinModel& model, const ModelGrads& grads);

void save_checkpoint(const SageFinModel& model, const std::string& path);
SageFinModel load_checkpoint(const std::string& path);

}  // namespace sagefin
