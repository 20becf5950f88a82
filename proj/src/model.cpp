#include "sagefin/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace sagefin {

void SageFinConfig::validate() const {
  if (conv_layers < 2 || conv_layers % 2 != 0) {
    throw InvalidConfig("conv_layers must be even and >= 2, got " +
                        std::to_string(conv_layers));
  }
  if (hidden_dim <= 0 || latent_dim <= 0) {
    throw InvalidConfig("hidden_dim and latent_dim must be positive");
  }
  if (mlp_depth < 1) throw InvalidConfig("mlp_depth must be >= 1");
  if (negative_ratio < 1) throw InvalidConfig("negative_ratio must be >= 1");
  if (lambda_feature < 0 || lambda_structure < 0 || lambda_class < 0) {
    throw InvalidConfig("loss weights must be non-negative");
  }
}

SageFinModel make_model(const SageFinConfig& config, LayerDims input_dims, Rng& rng) {
  config.validate();
  if (input_dims.u <= 0 || input_dims.v <= 0 || input_dims.e <= 0) {
    throw InvalidConfig("feature dimensions must be positive");
  }

  SageFinModel m;
  m.config = config;
  m.input_dims = input_dims;

  const int half = config.conv_layers / 2;
  const LayerDims hidden{config.hidden_dim, config.hidden_dim, config.hidden_dim};
  const LayerDims latent{config.latent_dim, config.latent_dim, config.latent_dim};

  LayerDims in = input_dims;
  for (int i = 0; i < half; ++i) {
    const LayerDims out = (i == half - 1) ? latent : hidden;
    m.encoder.push_back(make_bean_conv(in, out, config.aggregator, true, rng));
    in = out;
  }
  in = latent;
  for (int i = 0; i < half; ++i) {
    const bool last = i == half - 1;
    const LayerDims out = last ? input_dims : hidden;
    m.decoder.push_back(make_bean_conv(in, out, config.aggregator, !last, rng));
    in = out;
  }

  m.structure_decoder = make_mlp(2 * config.latent_dim, config.hidden_dim, 1,
                                 config.mlp_depth, rng);
  m.u_classifier = make_mlp(config.latent_dim, config.hidden_dim, 1,
                            config.mlp_depth, rng);
  m.v_classifier = make_mlp(config.latent_dim, config.hidden_dim, 1,
                            config.mlp_depth, rng);

  // shape chain: the decoder must land back on the input feature widths
  const LayerDims out = m.decoder.back().out_dims();
  if (out.u != input_dims.u || out.v != input_dims.v || out.e != input_dims.e) {
    throw DimensionMismatch("decoder output dims do not close the shape chain");
  }
  return m;
}

LayerState input_state(const BipartiteGraph& g) {
  return {g.u_features(), g.v_features(), g.e_features()};
}

LayerState encode(const GraphView& view, SageFinModel& model, bool training,
                  bool update_running, EncodeCache* cache) {
  const LayerDims got = {view.base().u_features().cols(),
                         view.base().v_features().cols(),
                         view.base().e_features().cols()};
  if (got.u != model.input_dims.u || got.v != model.input_dims.v ||
      got.e != model.input_dims.e) {
    throw DimensionMismatch("graph feature dims do not match model input dims");
  }
  if (cache) {
    cache->inputs.clear();
    cache->layers.assign(model.encoder.size(), {});
    cache->valid = true;
  }
  LayerState s = input_state(view.base());
  for (std::size_t i = 0; i < model.encoder.size(); ++i) {
    if (cache) cache->inputs.push_back(s);
    s = bean_conv_forward(view, s, model.encoder[i], training, update_running,
                          cache ? &cache->layers[i] : nullptr);
  }
  return s;
}

LayerState decode_features(const GraphView& view, const LayerState& latent,
                           SageFinModel& model, bool training,
                           bool update_running, DecodeCache* cache) {
  if (cache) {
    cache->inputs.clear();
    cache->layers.assign(model.decoder.size(), {});
    cache->valid = true;
  }
  LayerState s = latent;
  for (std::size_t i = 0; i < model.decoder.size(); ++i) {
    if (cache) cache->inputs.push_back(s);
    s = bean_conv_forward(view, s, model.decoder[i], training, update_running,
                          cache ? &cache->layers[i] : nullptr);
  }
  return s;
}

double predict_edge(const RowVector& latent_u_row, const RowVector& latent_v_row,
                    const SageFinModel& model) {
  Matrix in(1, latent_u_row.size() + latent_v_row.size());
  in << latent_u_row, latent_v_row;
  return mlp_forward(model.structure_decoder, in)(0, 0);
}

double predict_node(const RowVector& latent_row, const SageFinModel& model,
                    Partition partition) {
  Matrix in(1, latent_row.size());
  in.row(0) = latent_row;
  return mlp_forward(model.classifier(partition), in)(0, 0);
}

Vector predict_nodes(const Matrix& latent, const SageFinModel& model,
                     Partition partition) {
  return mlp_forward(model.classifier(partition), latent).col(0);
}

std::vector<EdgePair> sample_negative_edges(const BipartiteGraph& g, int ratio,
                                            Rng& rng) {
  if (ratio < 1) throw InvalidConfig("negative ratio must be >= 1");
  const std::uint64_t total =
      static_cast<std::uint64_t>(g.num_u()) * static_cast<std::uint64_t>(g.num_v());
  const std::uint64_t available =
      total - static_cast<std::uint64_t>(g.num_distinct_pairs());
  const std::uint64_t count =
      static_cast<std::uint64_t>(ratio) * static_cast<std::uint64_t>(g.num_edges());
  if (count == 0) return {};
  if (count > available) {
    throw ExhaustedSpace("requested " + std::to_string(count) +
                         " negative pairs but only " + std::to_string(available) +
                         " non-edges exist");
  }

  std::vector<EdgePair> out;
  out.reserve(count);
  if (2 * count > available && total <= (1u << 22)) {
    // Dense regime: enumerate non-edges, then draw a partial shuffle.
    std::vector<EdgePair> pool;
    pool.reserve(available);
    for (Index u = 0; u < g.num_u(); ++u) {
      for (Index v = 0; v < g.num_v(); ++v) {
        if (!g.has_pair(static_cast<int>(u), static_cast<int>(v))) {
          pool.push_back({static_cast<int>(u), static_cast<int>(v)});
        }
      }
    }
    for (std::uint64_t k = 0; k < count; ++k) {
      const std::uint64_t j = k + rng.uniform_int(pool.size() - k);
      std::swap(pool[k], pool[j]);
      out.push_back(pool[k]);
    }
  } else {
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(count * 2);
    while (out.size() < count) {
      const int u = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(g.num_u())));
      const int v = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(g.num_v())));
      const std::uint64_t key = BipartiteGraph::pair_key(u, v);
      if (g.has_pair(u, v) || !chosen.insert(key).second) continue;
      out.push_back({u, v});
    }
  }
  return out;
}

bool LossBreakdown::finite() const {
  return std::isfinite(feature_u) && std::isfinite(feature_v) &&
         std::isfinite(feature_e) && std::isfinite(structure) &&
         std::isfinite(class_u) && std::isfinite(class_v) && std::isfinite(total);
}

std::string LossBreakdown::describe() const {
  std::ostringstream os;
  os << "feature_u=" << feature_u << " feature_v=" << feature_v
     << " feature_e=" << feature_e << " structure=" << structure
     << " class_u=" << class_u << " class_v=" << class_v << " total=" << total;
  return os.str();
}

namespace {

void classification_branch(const Matrix& latent, const SageFinModel& model,
                           Partition p, const std::vector<std::uint8_t>& mask,
                           const std::vector<Label>& labels, Matrix& cls_in,
                           MlpCache& cls_cache, Vector& logits, Vector& targets,
                           std::vector<int>& rows) {
  rows.clear();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(static_cast<int>(i));
  }
  if (rows.empty()) {
    logits.resize(0);
    targets.resize(0);
    cls_cache.valid = false;
    return;
  }
  cls_in.resize(static_cast<Index>(rows.size()), latent.cols());
  targets.resize(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    cls_in.row(static_cast<Index>(k)) = latent.row(rows[k]);
    // Labels are read here and nowhere else; unknown-label nodes never reach
    // this point because masks cover labeled nodes only.
    targets(static_cast<Index>(k)) =
        labels[static_cast<std::size_t>(rows[k])] == Label::Fraud ? 1.0 : 0.0;
  }
  logits = mlp_forward(model.classifier(p), cls_in, &cls_cache).col(0);
}

}  // namespace

LossBreakdown loss_total(const BipartiteGraph& g, SageFinModel& model,
                         const ClassMasks& masks,
                         const std::vector<int>& positive_edges,
                         const std::vector<EdgePair>& negatives, bool training,
                         bool update_running, ModelCache* cache) {
  if (masks.u.size() != static_cast<std::size_t>(g.num_u()) ||
      masks.v.size() != static_cast<std::size_t>(g.num_v())) {
    throw DimensionMismatch("class mask sizes do not match graph");
  }

  ModelCache local;
  ModelCache& c = cache ? *cache : local;
  const GraphView view(g);

  c.latent = encode(view, model, training, update_running, &c.enc);
  c.recon = decode_features(view, c.latent, model, training, update_running, &c.dec);

  LossBreakdown loss;
  loss.feature_u = mse(c.recon.u, g.u_features());
  loss.feature_v = mse(c.recon.v, g.v_features());
  loss.feature_e = model.config.reconstruct_edge_features && g.num_edges() > 0
                       ? mse(c.recon.e, g.e_features())
                       : 0.0;

  // Structure term: positives get target 1, sampled non-edges target 0.
  c.struct_pairs.clear();
  c.struct_pairs.reserve(positive_edges.size() + negatives.size());
  for (int e : positive_edges) {
    g.check_edge(e);
    c.struct_pairs.push_back({g.edge(e).u, g.edge(e).v});
  }
  for (const EdgePair& p : negatives) c.struct_pairs.push_back(p);
  const Index n_struct = static_cast<Index>(c.struct_pairs.size());
  if (n_struct > 0) {
    const Index latent_dim = c.latent.u.cols();
    c.struct_in.resize(n_struct, 2 * latent_dim);
    c.struct_targets.resize(n_struct);
    for (Index k = 0; k < n_struct; ++k) {
      const EdgePair& p = c.struct_pairs[static_cast<std::size_t>(k)];
      c.struct_in.block(k, 0, 1, latent_dim) = c.latent.u.row(p.u);
      c.struct_in.block(k, latent_dim, 1, latent_dim) = c.latent.v.row(p.v);
      c.struct_targets(k) = k < static_cast<Index>(positive_edges.size()) ? 1.0 : 0.0;
    }
    c.struct_logits =
        mlp_forward(model.structure_decoder, c.struct_in, &c.struct_cache).col(0);
    loss.structure = bce_with_logits(c.struct_logits, c.struct_targets);
  } else {
    c.struct_logits.resize(0);
    c.struct_targets.resize(0);
    c.struct_cache.valid = false;
    loss.structure = 0.0;
  }

  classification_branch(c.latent.u, model, Partition::U, masks.u, g.u_labels(),
                        c.cls_in_u, c.cls_cache_u, c.cls_logits_u,
                        c.cls_targets_u, c.cls_rows_u);
  classification_branch(c.latent.v, model, Partition::V, masks.v, g.v_labels(),
                        c.cls_in_v, c.cls_cache_v, c.cls_logits_v,
                        c.cls_targets_v, c.cls_rows_v);
  loss.class_u = c.cls_logits_u.size() > 0
                     ? bce_with_logits(c.cls_logits_u, c.cls_targets_u)
                     : 0.0;
  loss.class_v = c.cls_logits_v.size() > 0
                     ? bce_with_logits(c.cls_logits_v, c.cls_targets_v)
                     : 0.0;

  loss.total = model.config.lambda_feature * loss.feature_sum() +
               model.config.lambda_structure * loss.structure +
               model.config.lambda_class * loss.class_sum();
  c.valid = true;
  return loss;
}

ModelGrads make_model_grads(const SageFinModel& model) {
  ModelGrads g;
  for (const auto& layer : model.encoder) g.encoder.push_back(make_bean_conv_grads(layer));
  for (const auto& layer : model.decoder) g.decoder.push_back(make_bean_conv_grads(layer));
  g.structure_decoder = make_mlp_grads(model.structure_decoder);
  g.u_classifier = make_mlp_grads(model.u_classifier);
  g.v_classifier = make_mlp_grads(model.v_classifier);
  return g;
}

ModelGrads loss_backward(const BipartiteGraph& g, const SageFinModel& model,
                         const ModelCache& c) {
  if (!c.valid) throw MissingForwardCache("loss_backward without loss_total cache");
  const GraphView view(g);
  ModelGrads grads = make_model_grads(model);

  LayerState dlatent;
  dlatent.u = Matrix::Zero(c.latent.u.rows(), c.latent.u.cols());
  dlatent.v = Matrix::Zero(c.latent.v.rows(), c.latent.v.cols());
  dlatent.e = Matrix::Zero(c.latent.e.rows(), c.latent.e.cols());

  // Feature reconstruction branch, back through the decoder stack.
  const double lf = model.config.lambda_feature;
  {
    LayerState drecon;
    drecon.u = lf * mse_backward(c.recon.u, g.u_features());
    drecon.v = lf * mse_backward(c.recon.v, g.v_features());
    drecon.e = model.config.reconstruct_edge_features && g.num_edges() > 0
                   ? Matrix(lf * mse_backward(c.recon.e, g.e_features()))
                   : Matrix(Matrix::Zero(c.recon.e.rows(), c.recon.e.cols()));
    LayerState ds = drecon;
    for (std::size_t i = model.decoder.size(); i-- > 0;) {
      ds = bean_conv_backward(view, c.dec.inputs[i], model.decoder[i],
                              c.dec.layers[i], ds, grads.decoder[i]);
    }
    dlatent.u += ds.u;
    dlatent.v += ds.v;
    dlatent.e += ds.e;
  }

  // Structure branch.
  const double ls = model.config.lambda_structure;
  if (c.struct_logits.size() > 0) {
    Matrix dlogits = ls * bce_with_logits_backward(c.struct_logits, c.struct_targets);
    const Matrix din =
        mlp_backward(model.structure_decoder, c.struct_cache, dlogits,
                     grads.structure_decoder);
    const Index latent_dim = c.latent.u.cols();
    for (Index k = 0; k < din.rows(); ++k) {
      const EdgePair& p = c.struct_pairs[static_cast<std::size_t>(k)];
      dlatent.u.row(p.u) += din.block(k, 0, 1, latent_dim);
      dlatent.v.row(p.v) += din.block(k, latent_dim, 1, latent_dim);
    }
  }

  // Classification branches.
  const double lc = model.config.lambda_class;
  if (c.cls_logits_u.size() > 0) {
    Matrix dlog = lc * bce_with_logits_backward(c.cls_logits_u, c.cls_targets_u);
    const Matrix din = mlp_backward(model.u_classifier, c.cls_cache_u, dlog,
                                    grads.u_classifier);
    for (Index k = 0; k < din.rows(); ++k) {
      dlatent.u.row(c.cls_rows_u[static_cast<std::size_t>(k)]) += din.row(k);
    }
  }
  if (c.cls_logits_v.size() > 0) {
    Matrix dlog = lc * bce_with_logits_backward(c.cls_logits_v, c.cls_targets_v);
    const Matrix din = mlp_backward(model.v_classifier, c.cls_cache_v, dlog,
                                    grads.v_classifier);
    for (Index k = 0; k < din.rows(); ++k) {
      dlatent.v.row(c.cls_rows_v[static_cast<std::size_t>(k)]) += din.row(k);
    }
  }

  // Encoder backward from the accumulated latent gradient.
  LayerState ds = dlatent;
  for (std::size_t i = model.encoder.size(); i-- > 0;) {
    ds = bean_conv_backward(view, c.enc.inputs[i], model.encoder[i],
                            c.enc.layers[i], ds, grads.encoder[i]);
  }
  return grads;
}

void apply_gradients(SageFinModel& model, const ModelGrads& grads) {
  ++model.adam.t;
  for (std::size_t i = 0; i < model.encoder.size(); ++i) {
    adam_step(model.encoder[i], grads.encoder[i], model.adam);
  }
  for (std::size_t i = 0; i < model.decoder.size(); ++i) {
    adam_step(model.decoder[i], grads.decoder[i], model.adam);
  }
  adam_step(model.structure_decoder, grads.structure_decoder, model.adam);
  adam_step(model.u_classifier, grads.u_classifier, model.adam);
  adam_step(model.v_classifier, grads.v_classifier, model.adam);
}

}  // namespace sagefin
