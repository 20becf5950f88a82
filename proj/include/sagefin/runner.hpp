#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sagefin/data_io.hpp"
#include "sagefin/explain.hpp"
#include "sagefin/train.hpp"

namespace sagefin {

// Everything one CLI invocation needs; file-based composition only. The
// seed drives every stochastic component of the command.
struct RunConfig {
  std::string command;  // generate | train | evaluate | explain | benchmark
  std::string data_dir;
  std::string out_dir;
  std::uint64_t seed = 1;
  SageFinConfig model;
  TrainSettings training;
  ExplainConfig explaining;
  SyntheticConfig synthetic;
  SplitRatios ratios;
  std::vector<std::pair<Partition, int>> targets;

  void validate() const;
};

// Merges a JSON config file into `config` (flags applied afterwards win).
void apply_config_file(RunConfig& config, const std::string& path);

// "u12,v3" -> {(U,12), (V,3)}.
std::vector<std::pair<Partition, int>> parse_targets(const std::string& list);

// Standardized graph plus the split masks a checkpoint's seed implies.
struct PreparedData {
  BipartiteGraph graph;
  SplitMasks splits;
  FeatureScaler u_scaler, v_scaler, e_scaler;
  std::string u_name, v_name;
};

// Splits first, then standardization with statistics from the training rows
// only: nodes outside the labeled val/test masks, edges in the train split.
PreparedData prepare_training_data(const LoadedDataset& data,
                                   const SplitRatios& ratios, std::uint64_t seed);

void run_generate(const RunConfig& config);
TrainResult run_train(const RunConfig& config);
EvalMetrics run_evaluate(const RunConfig& config);
void run_explain(const RunConfig& config);
void run_benchmark(const RunConfig& config);

// Dispatches on config.command; returns the process exit code and prints a
// single machine-parseable error line on failure.
int run(const RunConfig& config);

}  // namespace sagefin
