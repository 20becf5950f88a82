#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sagefin/graph.hpp"

namespace sagefin {

// File layout and column contract of an Elliptic++-shaped CSV dataset:
// a transactions (U) feature file, a wallets (V) feature file, an edge list
// of (wallet id, transaction id) rows, and per-partition label files. The
// aggregated U-feature column range is dropped at load time; which columns
// are aggregated is a schema parameter, not a constant.
struct EllipticSchema {
  std::string u_features_file;
  std::string v_features_file;
  std::string edges_file;
  std::string u_labels_file;
  std::string v_labels_file;
  int u_feature_count = 165;
  int v_feature_count = 56;
  int u_aggregated_begin = 93;  // dropped half-open column range of U features
  int u_aggregated_end = 165;
  bool u_has_time_column = false;  // parsed and ignored when present
  // When true the edge file carries its own feature columns; otherwise each
  // edge inherits the kept features of its transaction endpoint.
  bool edge_features_inline = false;
  int e_feature_count = 0;  // inline edge feature column count

  int u_kept_features() const {
    return u_feature_count - (u_aggregated_end - u_aggregated_begin);
  }
};

struct LoadedDataset {
  BipartiteGraph graph;
  std::vector<std::string> u_ids, v_ids;
  std::string u_name = "transactions";
  std::string v_name = "wallets";
};

LoadedDataset load_elliptic(const EllipticSchema& schema);

// Reads <dir>/schema.json and loads the dataset it describes.
LoadedDataset load_dataset(const std::string& dir);

struct DatasetSummary {
  long u_nodes = 0, v_nodes = 0, edges = 0;
  int u_features = 0, v_features = 0, e_features = 0;
  long u_fraud = 0, u_nonfraud = 0, u_unknown = 0;
  long v_fraud = 0, v_nonfraud = 0, v_unknown = 0;
};

DatasetSummary summarize(const BipartiteGraph& g);
std::string format_summary(const DatasetSummary& s, const std::string& u_name,
                           const std::string& v_name);

struct SyntheticConfig {
  int num_u = 400;
  int num_v = 400;
  int u_features = 10;
  int v_features = 8;
  int e_features = 4;
  double mean_degree = 3.0;  // background edges per U node
  // Background endpoints follow a two-tier popularity law: a small hub set
  // absorbs most of the edge mass, giving the heavy-tailed degree shape of
  // real transaction networks.
  double hub_fraction = 0.10;
  double hub_mass = 0.97;
  int fraud_clusters = 3;
  int cluster_size = 10;         // nodes per partition per cluster
  double cluster_density = 0.5;  // within-cluster connection probability
  double feature_shift = 3.0;    // fraud mean shift per feature, in sigmas
  double label_known_fraction = 0.3;
  std::uint64_t seed = 1;

  void validate() const;
};

// Full fraud/non-fraud truth per node. Returned beside the graph and never
// written into its labels beyond the configured known fraction.
struct GroundTruth {
  std::vector<std::uint8_t> u_fraud, v_fraud;
};

struct SyntheticData {
  BipartiteGraph graph;
  GroundTruth truth;
};

// Background nodes draw features from a standard normal; planted fraud
// clusters are densely connected cross-partition groups whose node and edge
// feature means are shifted. Labels are revealed for a random fraction only.
SyntheticData generate_synthetic(const SyntheticConfig& config);

// (degree, count) rows per partition, ascending degree.
struct DegreeHistogram {
  std::vector<std::pair<int, long>> u, v;
};

DegreeHistogram summarize_degrees(const BipartiteGraph& g);
std::string format_degree_summary(const DegreeHistogram& h);

// Writes the dataset back out in the loader's CSV schema (inline edge
// features) plus schema.json; `truth`, when given, lands in
// ground_truth.json. Values print with enough digits to round-trip exactly.
void export_csv_dataset(const BipartiteGraph& g, const GroundTruth* truth,
                        const std::string& dir);

GroundTruth load_ground_truth(const std::string& path);

}  // namespace sagefin
