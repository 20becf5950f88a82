#include "sagefin/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace sagefin {

Metrics Metrics::from_counts(long tp, long fp, long fn, long tn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

namespace {

// Shuffles `ids` and cuts it at round(cumulative ratio) boundaries.
void split_ids(std::vector<int>& ids, const SplitRatios& r, Rng& rng,
               std::vector<std::uint8_t>& train, std::vector<std::uint8_t>& val,
               std::vector<std::uint8_t>& test) {
  for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.uniform_int(ids.size() - k));
    std::swap(ids[k], ids[j]);
  }
  const double m = static_cast<double>(ids.size());
  const std::size_t b1 = static_cast<std::size_t>(std::llround(r.train * m));
  const std::size_t b2 = static_cast<std::size_t>(std::llround((r.train + r.val) * m));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto& mask = k < b1 ? train : (k < b2 ? val : test);
    mask[static_cast<std::size_t>(ids[k])] = 1;
  }
}

void split_partition(const std::vector<Label>& labels, const SplitRatios& r,
                     Partition p, Rng& rng, std::vector<std::uint8_t>& train,
                     std::vector<std::uint8_t>& val, std::vector<std::uint8_t>& test) {
  train.assign(labels.size(), 0);
  val.assign(labels.size(), 0);
  test.assign(labels.size(), 0);
  std::vector<int> fraud, nonfraud;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::Fraud) fraud.push_back(static_cast<int>(i));
    if (labels[i] == Label::NonFraud) nonfraud.push_back(static_cast<int>(i));
  }
  if (fraud.size() < 3 || nonfraud.size() < 3) {
    throw InsufficientLabels(std::string("partition ") + partition_name(p) +
                             " has " + std::to_string(fraud.size()) + " fraud / " +
                             std::to_string(nonfraud.size()) +
                             " non-fraud labeled nodes; need >= 3 of each");
  }
  split_ids(fraud, r, rng, train, val, test);
  split_ids(nonfraud, r, rng, train, val, test);
}

}  // namespace

SplitMasks make_splits(const BipartiteGraph& g, const SplitRatios& ratios,
                       std::uint64_t seed) {
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw InvalidConfig("split ratios must sum to 1");
  }
  Rng rng(seed);
  SplitMasks masks;
  std::vector<std::uint8_t> u_test, v_test, e_test;
  split_partition(g.u_labels(), ratios, Partition::U, rng, masks.u_train,
                  masks.u_val, u_test);
  split_partition(g.v_labels(), ratios, Partition::V, rng, masks.v_train,
                  masks.v_val, v_test);

  masks.e_train.assign(static_cast<std::size_t>(g.num_edges()), 0);
  masks.e_val.assign(static_cast<std::size_t>(g.num_edges()), 0);
  e_test.assign(static_cast<std::size_t>(g.num_edges()), 0);
  std::vector<int> edge_ids(static_cast<std::size_t>(g.num_edges()));
  for (std::size_t i = 0; i < edge_ids.size(); ++i) edge_ids[i] = static_cast<int>(i);
  if (!edge_ids.empty()) {
    split_ids(edge_ids, ratios, rng, masks.e_train, masks.e_val, e_test);
  }
  masks.set_test(std::move(u_test), std::move(v_test), std::move(e_test));
  return masks;
}

StandardizeResult standardize(const Matrix& x, const std::vector<int>* stat_rows) {
  if (x.rows() < 2) {
    throw DegenerateInput("standardization needs >= 2 rows, got " +
                          std::to_string(x.rows()));
  }
  RowVector mean, var;
  if (stat_rows) {
    if (stat_rows->size() < 2) {
      throw DegenerateInput("standardization needs >= 2 statistics rows");
    }
    Matrix sub(static_cast<Index>(stat_rows->size()), x.cols());
    for (std::size_t k = 0; k < stat_rows->size(); ++k) {
      sub.row(static_cast<Index>(k)) = x.row((*stat_rows)[k]);
    }
    mean = sub.colwise().mean();
    var = (sub.rowwise() - mean).array().square().colwise().mean();
  } else {
    mean = x.colwise().mean();
    var = (x.rowwise() - mean).array().square().colwise().mean();
  }
  StandardizeResult out;
  out.scaler.mean = mean;
  out.scaler.stddev = var.array().sqrt();
  out.x = apply_scaler(x, out.scaler);
  return out;
}

Matrix apply_scaler(const Matrix& x, const FeatureScaler& s) {
  if (x.cols() != s.mean.size()) {
    throw DimensionMismatch("scaler width does not match features");
  }
  RowVector divisor = s.stddev;
  for (Index j = 0; j < divisor.size(); ++j) {
    if (divisor(j) < 1e-12) divisor(j) = 1.0;  // constant column maps to zero
  }
  return (x.rowwise() - s.mean).array().rowwise() / divisor.array();
}

Metrics node_metrics(const Vector& logits, const std::vector<Label>& labels,
                     const std::vector<std::uint8_t>& mask, double threshold) {
  if (static_cast<std::size_t>(logits.size()) != labels.size() ||
      labels.size() != mask.size()) {
    throw DimensionMismatch("node metric input sizes disagree");
  }
  long tp = 0, fp = 0, fn = 0, tn = 0;
  long seen = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    ++seen;
    const bool truth = labels[i] == Label::Fraud;
    const bool pred = stable_sigmoid(logits(static_cast<Index>(i))) >= threshold;
    if (truth && pred) ++tp;
    else if (!truth && pred) ++fp;
    else if (truth && !pred) ++fn;
    else ++tn;
  }
  if (seen == 0) throw EmptyMask("no nodes selected for metric computation");
  return Metrics::from_counts(tp, fp, fn, tn);
}

namespace {

Vector structure_logits(const SageFinModel& model, const LayerState& latent,
                        const std::vector<EdgePair>& pairs) {
  const Index latent_dim = latent.u.cols();
  Matrix in(static_cast<Index>(pairs.size()), 2 * latent_dim);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    in.block(static_cast<Index>(k), 0, 1, latent_dim) = latent.u.row(pairs[k].u);
    in.block(static_cast<Index>(k), latent_dim, 1, latent_dim) = latent.v.row(pairs[k].v);
  }
  return mlp_forward(model.structure_decoder, in).col(0);
}

Metrics edge_metrics(const SageFinModel& model, const BipartiteGraph& g,
                     const LayerState& latent, const std::vector<std::uint8_t>& edge_mask,
                     int neg_ratio, Rng& rng, double threshold) {
  std::vector<EdgePair> pairs;
  Index n_pos = 0;
  for (std::size_t e = 0; e < edge_mask.size(); ++e) {
    if (edge_mask[e]) {
      pairs.push_back({g.edge(static_cast<int>(e)).u, g.edge(static_cast<int>(e)).v});
      ++n_pos;
    }
  }
  if (n_pos == 0) throw EmptyMask("no edges selected for metric computation");
  if (static_cast<std::uint64_t>(g.num_distinct_pairs()) ==
      static_cast<std::uint64_t>(g.num_u()) * static_cast<std::uint64_t>(g.num_v())) {
    throw ExhaustedSpace("complete bipartite graph has no negative pairs");
  }

  // Fresh negatives at the configured ratio, sized to the positives at hand.
  const std::uint64_t want =
      static_cast<std::uint64_t>(neg_ratio) * static_cast<std::uint64_t>(n_pos);
  std::uint64_t drawn = 0;
  while (drawn < want) {
    const int u = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(g.num_u())));
    const int v = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(g.num_v())));
    if (g.has_pair(u, v)) continue;
    pairs.push_back({u, v});
    ++drawn;
  }

  const Vector logits = structure_logits(model, latent, pairs);
  long tp = 0, fp = 0, fn = 0, tn = 0;
  for (Index k = 0; k < logits.size(); ++k) {
    const bool truth = k < n_pos;
    const bool pred = stable_sigmoid(logits(k)) >= threshold;
    if (truth && pred) ++tp;
    else if (!truth && pred) ++fp;
    else if (truth && !pred) ++fn;
    else ++tn;
  }
  return Metrics::from_counts(tp, fp, fn, tn);
}

std::vector<int> mask_to_ids(const std::vector<std::uint8_t>& mask) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) ids.push_back(static_cast<int>(i));
  }
  return ids;
}

struct TestLockGuard {
  const SplitMasks& masks;
  explicit TestLockGuard(const SplitMasks& m) : masks(m) { masks.lock_test(true); }
  ~TestLockGuard() { masks.lock_test(false); }
};

}  // namespace

TrainResult train(const BipartiteGraph& g, const SplitMasks& masks,
                  const SageFinConfig& config, const TrainSettings& settings) {
  config.validate();
  if (settings.epochs < 0) throw InvalidConfig("epochs must be >= 0");

  Rng rng(config.seed);
  SageFinModel model = make_model(
      config, {g.u_features().cols(), g.v_features().cols(), g.e_features().cols()},
      rng);
  model.adam.learning_rate = settings.learning_rate;

  const ClassMasks train_masks{masks.u_train, masks.v_train};
  const std::vector<int> train_edges = mask_to_ids(masks.e_train);
  bool warned_empty = false;

  TrainResult result;
  result.model = model;
  result.report.best_epoch = 0;
  double best_f1 = -1.0;

  {
    TestLockGuard guard(masks);
    for (int epoch = 1; epoch <= settings.epochs; ++epoch) {
      const std::vector<EdgePair> negatives =
          sample_negative_edges(g, config.negative_ratio, rng);

      ModelCache cache;
      const LossBreakdown loss = loss_total(g, model, train_masks, train_edges,
                                            negatives, /*training=*/true,
                                            /*update_running=*/true, &cache);
      if (!loss.finite()) {
        throw NonFiniteLoss("epoch " + std::to_string(epoch) +
                            " produced a non-finite loss: " + loss.describe());
      }
      if (!warned_empty && cache.cls_rows_u.empty() && cache.cls_rows_v.empty()) {
        std::fprintf(stderr,
                     "warning: no labeled nodes in the training masks; "
                     "classification term is zero\n");
        warned_empty = true;
      }
      const ModelGrads grads = loss_backward(g, model, cache);
      apply_gradients(model, grads);

      // Validation pass in inference mode.
      EpochRecord rec;
      rec.epoch = epoch;
      rec.loss = loss;
      const LayerState latent = encode(GraphView(g), model, /*training=*/false);
      rec.val_u = node_metrics(predict_nodes(latent.u, model, Partition::U),
                               g.u_labels(), masks.u_val, settings.threshold);
      rec.val_v = node_metrics(predict_nodes(latent.v, model, Partition::V),
                               g.v_labels(), masks.v_val, settings.threshold);
      rec.val_edge = edge_metrics(model, g, latent, masks.e_val,
                                  config.negative_ratio, rng, settings.threshold);
      result.report.epochs.push_back(rec);

      // Ties go to the later epoch; the other loss terms keep improving
      // after the small validation set saturates.
      const double mean_f1 = 0.5 * (rec.val_u.f1 + rec.val_v.f1);
      if (mean_f1 >= best_f1) {
        best_f1 = mean_f1;
        result.model = model;
        result.report.best_epoch = epoch;
      }
    }
  }

  if (settings.epochs == 0) result.model = model;
  result.model.trained = true;
  result.model.split_seed = config.seed;
  result.report.test = evaluate(result.model, g, masks, Split::Test,
                                config.seed ^ 0x9e3779b97f4a7c15ull,
                                settings.threshold);
  return result;
}

EvalMetrics evaluate(const SageFinModel& model, const BipartiteGraph& g,
                     const SplitMasks& masks, Split split, std::uint64_t seed,
                     double threshold) {
  const auto& u_mask = split == Split::Train ? masks.u_train
                       : split == Split::Val ? masks.u_val
                                             : masks.u_test();
  const auto& v_mask = split == Split::Train ? masks.v_train
                       : split == Split::Val ? masks.v_val
                                             : masks.v_test();
  const auto& e_mask = split == Split::Train ? masks.e_train
                       : split == Split::Val ? masks.e_val
                                             : masks.e_test();

  SageFinModel m = model;  // inference is const in spirit; running stats untouched
  const LayerState latent = encode(GraphView(g), m, /*training=*/false);
  Rng rng(seed);
  EvalMetrics out;
  out.u_nodes = node_metrics(predict_nodes(latent.u, m, Partition::U), g.u_labels(),
                             u_mask, threshold);
  out.v_nodes = node_metrics(predict_nodes(latent.v, m, Partition::V), g.v_labels(),
                             v_mask, threshold);
  out.edges = edge_metrics(m, g, latent, e_mask, m.config.negative_ratio, rng,
                           threshold);
  return out;
}

Metrics logistic_baseline(const Matrix& features, const std::vector<Label>& labels,
                          const std::vector<std::uint8_t>& train_mask,
                          const std::vector<std::uint8_t>& eval_mask,
                          int iterations, double learning_rate, double threshold) {
  const std::vector<int> train_rows = mask_to_ids(train_mask);
  long pos = 0, neg = 0;
  for (int r : train_rows) {
    (labels[static_cast<std::size_t>(r)] == Label::Fraud ? pos : neg) += 1;
  }
  if (pos < 1 || neg < 1) {
    throw InsufficientLabels("logistic baseline needs both classes in training");
  }

  Matrix x(static_cast<Index>(train_rows.size()), features.cols());
  Vector t(static_cast<Index>(train_rows.size()));
  for (std::size_t k = 0; k < train_rows.size(); ++k) {
    x.row(static_cast<Index>(k)) = features.row(train_rows[k]);
    t(static_cast<Index>(k)) =
        labels[static_cast<std::size_t>(train_rows[k])] == Label::Fraud ? 1.0 : 0.0;
  }

  Vector w = Vector::Zero(features.cols());
  double b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (int it = 0; it < iterations; ++it) {
    Vector z = x * w;
    z.array() += b;
    Vector err(z.size());
    for (Index i = 0; i < z.size(); ++i) err(i) = stable_sigmoid(z(i)) - t(i);
    w -= learning_rate * inv_n * (x.transpose() * err);
    b -= learning_rate * inv_n * err.sum();
  }

  Vector logits = features * w;
  logits.array() += b;
  return node_metrics(logits, labels, eval_mask, threshold);
}

namespace {

std::string format_metric_cells(const Metrics& m) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%10.6f %10.6f %10.6f", m.precision, m.recall, m.f1);
  return buf;
}

}  // namespace

std::string format_metrics_table(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "model            partition        precision     recall         f1\n";
  for (const MetricsRow& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-16s %-14s", r.model.c_str(), r.partition.c_str());
    os << buf << ' ' << format_metric_cells(r.metrics) << '\n';
  }
  return os.str();
}

std::string format_train_report(const TrainReport& report) {
  std::ostringstream os;
  os << "epoch      total  feature_u  feature_v  feature_e  structure"
        "    class_u    class_v"
        "    val_u_p    val_u_r   val_u_f1"
        "    val_v_p    val_v_r   val_v_f1"
        "    val_e_p    val_e_r   val_e_f1\n";
  for (const EpochRecord& r : report.epochs) {
    char buf[384];
    std::snprintf(buf, sizeof buf,
                  "%5d %10.6f %10.6f %10.6f %10.6f %10.6f %10.6f %10.6f"
                  " %10.6f %10.6f %10.6f %10.6f %10.6f %10.6f %10.6f %10.6f %10.6f",
                  r.epoch, r.loss.total, r.loss.feature_u, r.loss.feature_v,
                  r.loss.feature_e, r.loss.structure, r.loss.class_u,
                  r.loss.class_v, r.val_u.precision, r.val_u.recall, r.val_u.f1,
                  r.val_v.precision, r.val_v.recall, r.val_v.f1,
                  r.val_edge.precision, r.val_edge.recall, r.val_edge.f1);
    os << buf << '\n';
  }
  os << "best_epoch " << report.best_epoch << '\n';
  os << format_metrics_table({{"SAGE-FIN", "u", report.test.u_nodes},
                              {"SAGE-FIN", "v", report.test.v_nodes},
                              {"SAGE-FIN", "edges", report.test.edges}});
  return os.str();
}

}  // namespace sagefin
