#include <string>

#include <CLI11.hpp>

#include "sagefin/runner.hpp"

// Command-line front end. Order of precedence: defaults, then --config file,
// then explicit flags.
int main(int argc, char** argv) {
  CLI::App app{"sagefin: semi-supervised bipartite GNN fraud detection with "
               "causal edge explanations"};
  app.require_subcommand(1);

  std::string config_file, data_dir, out_dir, targets_spec;
  std::uint64_t seed = 1;
  int epochs = -1, hidden_dim = -1, neg_ratio = -1, hops = -1, top_k = -1;
  int threads = -1;
  double lr = -1.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_file, "JSON config file");
    cmd->add_option("--data-dir", data_dir, "dataset directory (schema.json inside)");
    cmd->add_option("--out-dir", out_dir, "output directory");
    cmd->add_option("--seed", seed, "run seed");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--hidden-dim", hidden_dim, "hidden and latent width");
    cmd->add_option("--neg-ratio", neg_ratio, "negative samples per edge");
    cmd->add_option("--hops", hops, "explanation neighborhood radius");
    cmd->add_option("--top-k", top_k, "edges per explanation subgraph");
    cmd->add_option("--targets", targets_spec,
                    "comma-separated explanation targets, e.g. u12,v3");
    cmd->add_option("--threads", threads, "explainer worker threads (0 = auto)");
  };

  for (const char* name : {"generate", "train", "evaluate", "explain", "benchmark"}) {
    add_common(app.add_subcommand(name));
  }

  CLI11_PARSE(app, argc, argv);

  sagefin::RunConfig config;
  config.command = app.get_subcommands().front()->get_name();
  try {
    if (!config_file.empty()) sagefin::apply_config_file(config, config_file);
    if (!data_dir.empty()) config.data_dir = data_dir;
    if (!out_dir.empty()) config.out_dir = out_dir;
    config.seed = seed;
    if (epochs >= 0) config.training.epochs = epochs;
    if (lr > 0) config.training.learning_rate = lr;
    if (hidden_dim > 0) {
      config.model.hidden_dim = hidden_dim;
      config.model.latent_dim = hidden_dim;
    }
    if (neg_ratio > 0) config.model.negative_ratio = neg_ratio;
    if (hops > 0) config.explaining.n_hops = hops;
    if (top_k > 0) config.explaining.top_k = top_k;
    if (threads >= 0) config.explaining.threads = threads;
    if (!targets_spec.empty()) config.targets = sagefin::parse_targets(targets_spec);
  } catch (const sagefin::Error& e) {
    std::fprintf(stderr, "error:invalid_config: %s\n", e.what());
    return 1;
  }

  return sagefin::run(config);
}
