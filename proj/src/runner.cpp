#include "sagefin/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

namespace sagefin {

namespace {

nlohmann::json model_to_json(const SageFinConfig& c) {
  return {{"conv_layers", c.conv_layers},
          {"hidden_dim", c.hidden_dim},
          {"latent_dim", c.latent_dim},
          {"mlp_depth", c.mlp_depth},
          {"negative_ratio", c.negative_ratio},
          {"lambda_feature", c.lambda_feature},
          {"lambda_structure", c.lambda_structure},
          {"lambda_class", c.lambda_class},
          {"aggregator", c.aggregator == Aggregator::Mean ? "mean" : "mean_max"},
          {"reconstruct_edge_features", c.reconstruct_edge_features}};
}

void model_from_json(const nlohmann::json& j, SageFinConfig& c) {
  c.conv_layers = j.value("conv_layers", c.conv_layers);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.mlp_depth = j.value("mlp_depth", c.mlp_depth);
  c.negative_ratio = j.value("negative_ratio", c.negative_ratio);
  c.lambda_feature = j.value("lambda_feature", c.lambda_feature);
  c.lambda_structure = j.value("lambda_structure", c.lambda_structure);
  c.lambda_class = j.value("lambda_class", c.lambda_class);
  if (j.contains("aggregator")) {
    const std::string a = j.at("aggregator").get<std::string>();
    if (a == "mean") c.aggregator = Aggregator::Mean;
    else if (a == "mean_max") c.aggregator = Aggregator::MeanMax;
    else throw InvalidConfig("unknown aggregator '" + a + "'");
  }
  c.reconstruct_edge_features =
      j.value("reconstruct_edge_features", c.reconstruct_edge_features);
}

nlohmann::json synthetic_to_json(const SyntheticConfig& c) {
  return {{"num_u", c.num_u},
          {"num_v", c.num_v},
          {"u_features", c.u_features},
          {"v_features", c.v_features},
          {"e_features", c.e_features},
          {"mean_degree", c.mean_degree},
          {"fraud_clusters", c.fraud_clusters},
          {"cluster_size", c.cluster_size},
          {"cluster_density", c.cluster_density},
          {"hub_fraction", c.hub_fraction},
          {"hub_mass", c.hub_mass},
          {"feature_shift", c.feature_shift},
          {"label_known_fraction", c.label_known_fraction}};
}

void synthetic_from_json(const nlohmann::json& j, SyntheticConfig& c) {
  c.num_u = j.value("num_u", c.num_u);
  c.num_v = j.value("num_v", c.num_v);
  c.u_features = j.value("u_features", c.u_features);
  c.v_features = j.value("v_features", c.v_features);
  c.e_features = j.value("e_features", c.e_features);
  c.mean_degree = j.value("mean_degree", c.mean_degree);
  c.fraud_clusters = j.value("fraud_clusters", c.fraud_clusters);
  c.cluster_size = j.value("cluster_size", c.cluster_size);
  c.cluster_density = j.value("cluster_density", c.cluster_density);
  c.hub_fraction = j.value("hub_fraction", c.hub_fraction);
  c.hub_mass = j.value("hub_mass", c.hub_mass);
  c.feature_shift = j.value("feature_shift", c.feature_shift);
  c.label_known_fraction = j.value("label_known_fraction", c.label_known_fraction);
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["command"] = c.command;
  j["seed"] = c.seed;
  j["data_dir"] = c.data_dir;
  j["out_dir"] = c.out_dir;
  j["model"] = model_to_json(c.model);
  j["training"] = {{"epochs", c.training.epochs},
                   {"learning_rate", c.training.learning_rate},
                   {"threshold", c.training.threshold}};
  j["explain"] = {{"n_hops", c.explaining.n_hops},
                  {"top_k", c.explaining.top_k},
                  {"threads", c.explaining.threads},
                  {"reference",
                   c.explaining.reference == ReferenceLabel::Predicted
                       ? "predicted"
                       : "ground_truth"}};
  j["synthetic"] = synthetic_to_json(c.synthetic);
  j["split_ratios"] = {{"train", c.ratios.train},
                       {"val", c.ratios.val},
                       {"test", c.ratios.test}};
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& [p, id] : c.targets) {
    targets.push_back(std::string(partition_name(p)) + std::to_string(id));
  }
  j["targets"] = targets;
  return j;
}

void write_manifest(const RunConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  const std::string path = config.out_dir + "/manifest_" + config.command + ".json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << run_config_to_json(config).dump(2) << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

std::string checkpoint_path(const RunConfig& config) {
  return config.out_dir + "/checkpoint.bin";
}

}  // namespace

void RunConfig::validate() const {
  if (command != "generate" && command != "train" && command != "evaluate" &&
      command != "explain" && command != "benchmark") {
    throw InvalidConfig("unknown command '" + command + "'");
  }
  if (out_dir.empty()) throw InvalidConfig("--out-dir is required");
  model.validate();
  explaining.validate();
  synthetic.validate();
  if (command != "generate") {
    if (data_dir.empty()) throw InvalidConfig("--data-dir is required");
    if (!std::filesystem::exists(data_dir + "/schema.json")) {
      throw InvalidConfig("no dataset at " + data_dir + " (missing schema.json)");
    }
  }
  if (command == "evaluate" || command == "explain") {
    if (!std::filesystem::exists(out_dir + "/checkpoint.bin")) {
      throw InvalidConfig("no checkpoint.bin in " + out_dir + "; run train first");
    }
  }
  if (command == "explain" && targets.empty()) {
    throw InvalidConfig("explain needs --targets (e.g. u12,v3)");
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(path + ": " + e.what());
  }
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("data_dir")) config.data_dir = j.at("data_dir").get<std::string>();
  if (j.contains("out_dir")) config.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("model")) model_from_json(j.at("model"), config.model);
  if (j.contains("training")) {
    const auto& t = j.at("training");
    config.training.epochs = t.value("epochs", config.training.epochs);
    config.training.learning_rate =
        t.value("learning_rate", config.training.learning_rate);
    config.training.threshold = t.value("threshold", config.training.threshold);
  }
  if (j.contains("explain")) {
    const auto& e = j.at("explain");
    config.explaining.n_hops = e.value("n_hops", config.explaining.n_hops);
    config.explaining.top_k = e.value("top_k", config.explaining.top_k);
    config.explaining.threads = e.value("threads", config.explaining.threads);
    if (e.contains("reference")) {
      const std::string r = e.at("reference").get<std::string>();
      if (r == "predicted") config.explaining.reference = ReferenceLabel::Predicted;
      else if (r == "ground_truth") config.explaining.reference = ReferenceLabel::GroundTruth;
      else throw InvalidConfig("unknown explain reference '" + r + "'");
    }
  }
  if (j.contains("synthetic")) synthetic_from_json(j.at("synthetic"), config.synthetic);
  if (j.contains("split_ratios")) {
    const auto& r = j.at("split_ratios");
    config.ratios.train = r.value("train", config.ratios.train);
    config.ratios.val = r.value("val", config.ratios.val);
    config.ratios.test = r.value("test", config.ratios.test);
  }
  if (j.contains("targets")) {
    config.targets.clear();
    for (const auto& t : j.at("targets")) {
      const auto parsed = parse_targets(t.get<std::string>());
      config.targets.insert(config.targets.end(), parsed.begin(), parsed.end());
    }
  }
}

std::vector<std::pair<Partition, int>> parse_targets(const std::string& list) {
  std::vector<std::pair<Partition, int>> out;
  std::string token;
  std::stringstream ss(list);
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    Partition p;
    if (token[0] == 'u' || token[0] == 'U') p = Partition::U;
    else if (token[0] == 'v' || token[0] == 'V') p = Partition::V;
    else throw InvalidConfig("target '" + token + "' must start with u or v");
    try {
      out.emplace_back(p, std::stoi(token.substr(1)));
    } catch (const std::exception&) {
      throw InvalidConfig("cannot parse target '" + token + "'");
    }
  }
  return out;
}

PreparedData prepare_training_data(const LoadedDataset& data,
                                   const SplitRatios& ratios, std::uint64_t seed) {
  const BipartiteGraph& g = data.graph;
  PreparedData out;
  out.splits = make_splits(g, ratios, seed);
  out.u_name = data.u_name;
  out.v_name = data.v_name;

  // Statistics rows: every node not held out for evaluation, train edges only.
  auto stat_nodes = [](Index n, const std::vector<std::uint8_t>& val,
                       const std::vector<std::uint8_t>& test) {
    std::vector<int> rows;
    for (Index i = 0; i < n; ++i) {
      if (!val[static_cast<std::size_t>(i)] && !test[static_cast<std::size_t>(i)]) {
        rows.push_back(static_cast<int>(i));
      }
    }
    return rows;
  };
  const std::vector<int> u_rows =
      stat_nodes(g.num_u(), out.splits.u_val, out.splits.u_test());
  const std::vector<int> v_rows =
      stat_nodes(g.num_v(), out.splits.v_val, out.splits.v_test());
  std::vector<int> e_rows;
  for (std::size_t e = 0; e < out.splits.e_train.size(); ++e) {
    if (out.splits.e_train[e]) e_rows.push_back(static_cast<int>(e));
  }

  StandardizeResult u_std = standardize(g.u_features(), &u_rows);
  StandardizeResult v_std = standardize(g.v_features(), &v_rows);
  StandardizeResult e_std =
      g.num_edges() >= 2 && e_rows.size() >= 2
          ? standardize(g.e_features(), &e_rows)
          : StandardizeResult{g.e_features(),
                              {RowVector::Zero(g.e_features().cols()),
                               RowVector::Ones(g.e_features().cols())}};
  out.u_scaler = u_std.scaler;
  out.v_scaler = v_std.scaler;
  out.e_scaler = e_std.scaler;
  out.graph = build_graph(std::move(u_std.x), std::move(v_std.x), g.edges(),
                          std::move(e_std.x), g.u_labels(), g.v_labels());
  return out;
}

namespace {

// Rebuilds the standardized graph and splits a checkpoint was trained with.
PreparedData prepare_from_checkpoint(const LoadedDataset& data,
                                     const SageFinModel& model,
                                     const SplitRatios& ratios) {
  const BipartiteGraph& g = data.graph;
  PreparedData out;
  out.splits = make_splits(g, ratios, model.split_seed);
  out.u_name = data.u_name;
  out.v_name = data.v_name;
  out.u_scaler = model.u_scaler;
  out.v_scaler = model.v_scaler;
  out.e_scaler = model.e_scaler;
  out.graph = build_graph(apply_scaler(g.u_features(), model.u_scaler),
                          apply_scaler(g.v_features(), model.v_scaler),
                          g.edges(), apply_scaler(g.e_features(), model.e_scaler),
                          g.u_labels(), g.v_labels());
  return out;
}

}  // namespace

void run_generate(const RunConfig& config) {
  SyntheticConfig synth = config.synthetic;
  synth.seed = config.seed;
  const SyntheticData data = generate_synthetic(synth);
  export_csv_dataset(data.graph, &data.truth, config.out_dir);
  write_text(config.out_dir + "/degree_summary.txt",
             format_degree_summary(summarize_degrees(data.graph)));
  write_text(config.out_dir + "/dataset_summary.txt",
             format_summary(summarize(data.graph), "u", "v"));
  write_manifest(config);
}

TrainResult run_train(const RunConfig& config) {
  const LoadedDataset data = load_dataset(config.data_dir);
  PreparedData prepared = prepare_training_data(data, config.ratios, config.seed);

  SageFinConfig model_config = config.model;
  model_config.seed = config.seed;
  TrainResult result = train(prepared.graph, prepared.splits, model_config,
                             config.training);
  result.model.u_scaler = prepared.u_scaler;
  result.model.v_scaler = prepared.v_scaler;
  result.model.e_scaler = prepared.e_scaler;

  std::filesystem::create_directories(config.out_dir);
  save_checkpoint(result.model, checkpoint_path(config));
  write_text(config.out_dir + "/train_report.txt",
             format_train_report(result.report));
  write_manifest(config);
  return result;
}

EvalMetrics run_evaluate(const RunConfig& config) {
  const LoadedDataset data = load_dataset(config.data_dir);
  const SageFinModel model = load_checkpoint(checkpoint_path(config));
  const PreparedData prepared = prepare_from_checkpoint(data, model, config.ratios);

  const EvalMetrics metrics =
      evaluate(model, prepared.graph, prepared.splits, Split::Test,
               model.split_seed ^ 0x9e3779b97f4a7c15ull, config.training.threshold);
  const std::string table =
      format_metrics_table({{"SAGE-FIN", prepared.u_name, metrics.u_nodes},
                            {"SAGE-FIN", prepared.v_name, metrics.v_nodes},
                            {"SAGE-FIN", "edges", metrics.edges}});
  write_text(config.out_dir + "/metrics.txt", table);
  write_manifest(config);
  return metrics;
}

void run_explain(const RunConfig& config) {
  const LoadedDataset data = load_dataset(config.data_dir);
  const SageFinModel model = load_checkpoint(checkpoint_path(config));
  const PreparedData prepared = prepare_from_checkpoint(data, model, config.ratios);

  std::filesystem::create_directories(config.out_dir);
  for (const auto& [partition, node] : config.targets) {
    const Explanation e =
        explain(model, prepared.graph, partition, node, config.explaining);
    const std::string stem = config.out_dir + "/" + explanation_file_stem(e);
    export_dot(e, prepared.graph, stem + ".dot");
    export_json(e, prepared.graph, stem + ".json");
  }
  write_manifest(config);
}

void run_benchmark(const RunConfig& config) {
  const LoadedDataset data = load_dataset(config.data_dir);
  PreparedData prepared = prepare_training_data(data, config.ratios, config.seed);

  SageFinConfig model_config = config.model;
  model_config.seed = config.seed;
  const TrainResult result = train(prepared.graph, prepared.splits, model_config,
                                   config.training);

  const Metrics lr_u = logistic_baseline(prepared.graph.u_features(),
                                         prepared.graph.u_labels(),
                                         prepared.splits.u_train,
                                         prepared.splits.u_test());
  const Metrics lr_v = logistic_baseline(prepared.graph.v_features(),
                                         prepared.graph.v_labels(),
                                         prepared.splits.v_train,
                                         prepared.splits.v_test());

  const std::string table = format_metrics_table(
      {{"SAGE-FIN", prepared.u_name, result.report.test.u_nodes},
       {"SAGE-FIN", prepared.v_name, result.report.test.v_nodes},
       {"SAGE-FIN", "edges", result.report.test.edges},
       {"LR", prepared.u_name, lr_u},
       {"LR", prepared.v_name, lr_v}});
  std::filesystem::create_directories(config.out_dir);
  write_text(config.out_dir + "/benchmark.txt", table);
  write_manifest(config);
}

namespace {

const char* error_code(const Error& e) {
  if (dynamic_cast<const InvalidConfig*>(&e)) return "invalid_config";
  if (dynamic_cast<const IndexOutOfRange*>(&e)) return "index_out_of_range";
  if (dynamic_cast<const DimensionMismatch*>(&e)) return "dimension_mismatch";
  if (dynamic_cast<const SchemaMismatch*>(&e)) return "schema_mismatch";
  if (dynamic_cast<const DanglingEdge*>(&e)) return "dangling_edge";
  if (dynamic_cast<const InsufficientLabels*>(&e)) return "insufficient_labels";
  if (dynamic_cast<const NonFiniteLoss*>(&e)) return "non_finite_loss";
  if (dynamic_cast<const ExhaustedSpace*>(&e)) return "exhausted_space";
  if (dynamic_cast<const UntrainedModel*>(&e)) return "untrained_model";
  if (dynamic_cast<const IoError*>(&e)) return "io_error";
  if (dynamic_cast<const EmptyMask*>(&e)) return "empty_mask";
  if (dynamic_cast<const DegenerateBatch*>(&e)) return "degenerate_batch";
  if (dynamic_cast<const DegenerateInput*>(&e)) return "degenerate_input";
  return "error";
}

}  // namespace

int run(const RunConfig& config) {
  try {
    config.validate();
    if (config.command == "generate") {
      run_generate(config);
    } else if (config.command == "train") {
      run_train(config);
    } else if (config.command == "evaluate") {
      const EvalMetrics m = run_evaluate(config);
      std::cout << format_metrics_table({{"SAGE-FIN", "u", m.u_nodes},
                                         {"SAGE-FIN", "v", m.v_nodes},
                                         {"SAGE-FIN", "edges", m.edges}});
    } else if (config.command == "explain") {
      run_explain(config);
    } else if (config.command == "benchmark") {
      run_benchmark(config);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error:" << error_code(e) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error:internal: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace sagefin
