#pragma once

#include <string>
#include <vector>

#include "sagefin/model.hpp"

namespace sagefin {

struct Metrics {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0, recall = 0, f1 = 0;

  static Metrics from_counts(long tp, long fp, long fn, long tn);
};

enum class Split : std::uint8_t { Train, Val, Test };

struct SplitRatios {
  double train = 0.70, val = 0.15, test = 0.15;
};

// Train/val/test masks over labeled nodes (per partition) and over edges.
// Test masks sit behind an access guard so the training loop cannot read
// them; `lock_test` is flipped by the loop and checked on every accessor.
class SplitMasks {
 public:
  std::vector<std::uint8_t> u_train, u_val;
  std::vector<std::uint8_t> v_train, v_val;
  std::vector<std::uint8_t> e_train, e_val;

  const std::vector<std::uint8_t>& u_test() const { return guarded(u_test_); }
  const std::vector<std::uint8_t>& v_test() const { return guarded(v_test_); }
  const std::vector<std::uint8_t>& e_test() const { return guarded(e_test_); }

  void set_test(std::vector<std::uint8_t> u, std::vector<std::uint8_t> v,
                std::vector<std::uint8_t> e) {
    u_test_ = std::move(u);
    v_test_ = std::move(v);
    e_test_ = std::move(e);
  }
  void lock_test(bool on) const { test_locked_ = on; }
  bool test_locked() const { return test_locked_; }

 private:
  const std::vector<std::uint8_t>& guarded(const std::vector<std::uint8_t>& m) const {
    if (test_locked_) {
      throw TestAccessViolation("test masks were read while training holds the leakage guard");
    }
    return m;
  }

  std::vector<std::uint8_t> u_test_, v_test_, e_test_;
  mutable bool test_locked_ = false;
};

// Stratified labeled-node splits (fraud fraction preserved per split within
// one node) plus random edge splits, both driven by the seed alone.
SplitMasks make_splits(const BipartiteGraph& g, const SplitRatios& ratios,
                       std::uint64_t seed);

struct StandardizeResult {
  Matrix x;
  FeatureScaler scaler;
};

// Column-wise zero-mean unit-variance transform (population std). Statistics
// come from `stat_rows` when given (training rows) and are applied to every
// row; zero-variance columns map to zero.
StandardizeResult standardize(const Matrix& x,
                              const std::vector<int>* stat_rows = nullptr);

Matrix apply_scaler(const Matrix& x, const FeatureScaler& s);

struct EvalMetrics {
  Metrics u_nodes, v_nodes, edges;
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;
  Metrics val_u, val_v, val_edge;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based epoch index of the retained checkpoint
  EvalMetrics test;
};

struct TrainSettings {
  int epochs = 200;
  double learning_rate = 0.005;
  double threshold = 0.5;  // decision threshold on the sigmoid
};

struct TrainResult {
  SageFinModel model;  // best-validation checkpoint
  TrainReport report;
};

// Full-graph training: every epoch redraws negatives, takes one Adam step on
// the composite loss over the train masks, and records validation metrics.
// The checkpoint with the best mean validation node F1 is retained. Features
// must already be standardized.
TrainResult train(const BipartiteGraph& g, const SplitMasks& masks,
                  const SageFinConfig& config, const TrainSettings& settings);

// Node metrics on labeled nodes of the split per partition, edge metrics on
// the split's held-out edges versus freshly sampled negatives.
EvalMetrics evaluate(const SageFinModel& model, const BipartiteGraph& g,
                     const SplitMasks& masks, Split split, std::uint64_t seed,
                     double threshold = 0.5);

Metrics node_metrics(const Vector& logits, const std::vector<Label>& labels,
                     const std::vector<std::uint8_t>& mask, double threshold);

// Feature-only logistic regression trained by gradient descent on the
// train-mask rows and scored on the eval-mask rows.
Metrics logistic_baseline(const Matrix& features, const std::vector<Label>& labels,
                          const std::vector<std::uint8_t>& train_mask,
                          const std::vector<std::uint8_t>& eval_mask,
                          int iterations = 2000, double learning_rate = 0.5,
                          double threshold = 0.5);

// One row of the benchmark-style metrics table.
struct MetricsRow {
  std::string model;
  std::string partition;
  Metrics metrics;
};

std::string format_metrics_table(const std::vector<MetricsRow>& rows);
std::string format_train_report(const TrainReport& report);

}  // namespace sagefin
