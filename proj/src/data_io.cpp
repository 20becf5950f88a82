#include "sagefin/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace sagefin {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      first = false;  // header row
      continue;
    }
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (first) throw SchemaMismatch(path + ": missing header row");
  return rows;
}

double parse_double(const std::string& s, const std::string& path, std::size_t row) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaMismatch(path + " row " + std::to_string(row + 2) +
                         ": cannot parse number '" + s + "'");
  }
}

Label parse_label(const std::string& s) {
  if (s == "1" || s == "fraud") return Label::Fraud;
  if (s == "2" || s == "non-fraud" || s == "nonfraud" || s == "licit") {
    return Label::NonFraud;
  }
  if (s == "3" || s == "unknown") return Label::Unknown;
  throw SchemaMismatch("unrecognized class value '" + s + "'");
}

struct FeatureTable {
  std::vector<std::string> ids;
  Matrix features;
  std::unordered_map<std::string, int> index;
};

FeatureTable read_feature_table(const std::string& path, int feature_count,
                                bool has_time, int drop_begin, int drop_end) {
  const auto rows = read_csv(path);
  const int raw_cols = 1 + (has_time ? 1 : 0) + feature_count;
  const int kept = feature_count - (drop_end - drop_begin);
  FeatureTable table;
  table.features.resize(static_cast<Index>(rows.size()), kept);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<int>(rows[r].size()) != raw_cols) {
      throw SchemaMismatch(path + " row " + std::to_string(r + 2) + ": has " +
                           std::to_string(rows[r].size()) + " columns, expected " +
                           std::to_string(raw_cols));
    }
    const std::string& id = rows[r][0];
    if (!table.index.emplace(id, static_cast<int>(r)).second) {
      throw SchemaMismatch(path + " row " + std::to_string(r + 2) +
                           ": duplicate id '" + id + "'");
    }
    table.ids.push_back(id);
    const int base = has_time ? 2 : 1;
    Index col = 0;
    for (int f = 0; f < feature_count; ++f) {
      if (f >= drop_begin && f < drop_end) continue;
      table.features(static_cast<Index>(r), col++) =
          parse_double(rows[r][static_cast<std::size_t>(base + f)], path, r);
    }
  }
  return table;
}

void read_labels(const std::string& path, const std::unordered_map<std::string, int>& index,
                 std::vector<Label>& labels) {
  const auto rows = read_csv(path);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != 2) {
      throw SchemaMismatch(path + " row " + std::to_string(r + 2) +
                           ": expected 'id,class'");
    }
    const auto it = index.find(rows[r][0]);
    if (it == index.end()) continue;  // labels for absent nodes are ignored
    labels[static_cast<std::size_t>(it->second)] = parse_label(rows[r][1]);
  }
}

}  // namespace

LoadedDataset load_elliptic(const EllipticSchema& schema) {
  if (schema.u_aggregated_begin < 0 || schema.u_aggregated_end < schema.u_aggregated_begin ||
      schema.u_aggregated_end > schema.u_feature_count) {
    throw InvalidConfig("aggregated column range outside the U feature columns");
  }

  FeatureTable u = read_feature_table(schema.u_features_file, schema.u_feature_count,
                                      schema.u_has_time_column,
                                      schema.u_aggregated_begin,
                                      schema.u_aggregated_end);
  FeatureTable v = read_feature_table(schema.v_features_file, schema.v_feature_count,
                                      false, 0, 0);

  std::vector<Label> u_labels(u.ids.size(), Label::Unknown);
  std::vector<Label> v_labels(v.ids.size(), Label::Unknown);
  if (!schema.u_labels_file.empty()) read_labels(schema.u_labels_file, u.index, u_labels);
  if (!schema.v_labels_file.empty()) read_labels(schema.v_labels_file, v.index, v_labels);

  const auto edge_rows = read_csv(schema.edges_file);
  const int edge_cols = 2 + (schema.edge_features_inline ? schema.e_feature_count : 0);
  std::vector<Edge> edges;
  edges.reserve(edge_rows.size());
  const Index e_width = schema.edge_features_inline
                            ? schema.e_feature_count
                            : schema.u_kept_features();
  Matrix e_features(static_cast<Index>(edge_rows.size()), e_width);
  for (std::size_t r = 0; r < edge_rows.size(); ++r) {
    if (static_cast<int>(edge_rows[r].size()) != edge_cols) {
      throw SchemaMismatch(schema.edges_file + " row " + std::to_string(r + 2) +
                           ": has " + std::to_string(edge_rows[r].size()) +
                           " columns, expected " + std::to_string(edge_cols));
    }
    const auto vit = v.index.find(edge_rows[r][0]);
    if (vit == v.index.end()) {
      throw DanglingEdge(schema.edges_file + " row " + std::to_string(r + 2) +
                         ": unknown wallet id '" + edge_rows[r][0] + "'");
    }
    const auto uit = u.index.find(edge_rows[r][1]);
    if (uit == u.index.end()) {
      throw DanglingEdge(schema.edges_file + " row " + std::to_string(r + 2) +
                         ": unknown transaction id '" + edge_rows[r][1] + "'");
    }
    edges.push_back({uit->second, vit->second});
    if (schema.edge_features_inline) {
      for (int f = 0; f < schema.e_feature_count; ++f) {
        e_features(static_cast<Index>(r), f) =
            parse_double(edge_rows[r][static_cast<std::size_t>(2 + f)],
                         schema.edges_file, r);
      }
    } else {
      e_features.row(static_cast<Index>(r)) = u.features.row(uit->second);
    }
  }

  LoadedDataset out;
  out.graph = build_graph(std::move(u.features), std::move(v.features),
                          std::move(edges), std::move(e_features),
                          std::move(u_labels), std::move(v_labels));
  out.u_ids = std::move(u.ids);
  out.v_ids = std::move(v.ids);
  return out;
}

LoadedDataset load_dataset(const std::string& dir) {
  const std::string schema_path = dir + "/schema.json";
  std::ifstream in(schema_path);
  if (!in) throw IoError("cannot open " + schema_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaMismatch(schema_path + ": " + e.what());
  }

  EllipticSchema schema;
  schema.u_features_file = dir + "/" + j.at("u_features_file").get<std::string>();
  schema.v_features_file = dir + "/" + j.at("v_features_file").get<std::string>();
  schema.edges_file = dir + "/" + j.at("edges_file").get<std::string>();
  if (j.contains("u_labels_file")) {
    schema.u_labels_file = dir + "/" + j.at("u_labels_file").get<std::string>();
  }
  if (j.contains("v_labels_file")) {
    schema.v_labels_file = dir + "/" + j.at("v_labels_file").get<std::string>();
  }
  schema.u_feature_count = j.at("u_feature_count").get<int>();
  schema.v_feature_count = j.at("v_feature_count").get<int>();
  schema.u_aggregated_begin = j.value("u_aggregated_begin", 0);
  schema.u_aggregated_end = j.value("u_aggregated_end", 0);
  schema.u_has_time_column = j.value("u_has_time_column", false);
  schema.edge_features_inline = j.value("edge_features_inline", false);
  schema.e_feature_count = j.value("e_feature_count", 0);

  LoadedDataset out = load_elliptic(schema);
  out.u_name = j.value("u_name", std::string("transactions"));
  out.v_name = j.value("v_name", std::string("wallets"));
  return out;
}

DatasetSummary summarize(const BipartiteGraph& g) {
  DatasetSummary s;
  s.u_nodes = static_cast<long>(g.num_u());
  s.v_nodes = static_cast<long>(g.num_v());
  s.edges = static_cast<long>(g.num_edges());
  s.u_features = static_cast<int>(g.u_features().cols());
  s.v_features = static_cast<int>(g.v_features().cols());
  s.e_features = static_cast<int>(g.e_features().cols());
  for (Label l : g.u_labels()) {
    (l == Label::Fraud ? s.u_fraud : l == Label::NonFraud ? s.u_nonfraud : s.u_unknown) += 1;
  }
  for (Label l : g.v_labels()) {
    (l == Label::Fraud ? s.v_fraud : l == Label::NonFraud ? s.v_nonfraud : s.v_unknown) += 1;
  }
  return s;
}

std::string format_summary(const DatasetSummary& s, const std::string& u_name,
                           const std::string& v_name) {
  std::ostringstream os;
  auto pct = [](long part, long whole) {
    return whole > 0 ? 100.0 * static_cast<double>(part) / static_cast<double>(whole)
                     : 0.0;
  };
  char buf[256];
  os << "partition      nodes  features      fraud  non-fraud    unknown\n";
  std::snprintf(buf, sizeof buf, "%-12s %7ld %9d %5ld (%2.0f%%) %6ld (%2.0f%%) %6ld (%2.0f%%)\n",
                u_name.c_str(), s.u_nodes, s.u_features, s.u_fraud,
                pct(s.u_fraud, s.u_nodes), s.u_nonfraud, pct(s.u_nonfraud, s.u_nodes),
                s.u_unknown, pct(s.u_unknown, s.u_nodes));
  os << buf;
  std::snprintf(buf, sizeof buf, "%-12s %7ld %9d %5ld (%2.0f%%) %6ld (%2.0f%%) %6ld (%2.0f%%)\n",
                v_name.c_str(), s.v_nodes, s.v_features, s.v_fraud,
                pct(s.v_fraud, s.v_nodes), s.v_nonfraud, pct(s.v_nonfraud, s.v_nodes),
                s.v_unknown, pct(s.v_unknown, s.v_nodes));
  os << buf;
  os << "edges        " << s.edges << " (features " << s.e_features << ")\n";
  return os.str();
}

void SyntheticConfig::validate() const {
  if (num_u <= 0 || num_v <= 0 || u_features <= 0 || v_features <= 0 ||
      e_features <= 0) {
    throw InvalidConfig("synthetic sizes must be positive");
  }
  if (mean_degree < 0) throw InvalidConfig("mean_degree must be >= 0");
  if (fraud_clusters < 0 || cluster_size < 0) {
    throw InvalidConfig("cluster counts must be >= 0");
  }
  if (fraud_clusters * cluster_size > std::min(num_u, num_v)) {
    throw InvalidConfig("fraud clusters do not fit in the partitions");
  }
  if (cluster_density < 0.0 || cluster_density > 1.0) {
    throw InvalidConfig("cluster_density must be in [0, 1]");
  }
  if (hub_fraction <= 0.0 || hub_fraction >= 1.0 || hub_mass < 0.0 || hub_mass > 1.0) {
    throw InvalidConfig("hub_fraction must be in (0, 1) and hub_mass in [0, 1]");
  }
  if (label_known_fraction <= 0.0 || label_known_fraction > 1.0) {
    throw InvalidConfig("label_known_fraction must be in (0, 1]");
  }
}

SyntheticData generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);

  auto pick_cluster_nodes = [&](int n) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.uniform_int(ids.size() - k));
      std::swap(ids[k], ids[j]);
    }
    ids.resize(static_cast<std::size_t>(config.fraud_clusters * config.cluster_size));
    return ids;
  };
  const std::vector<int> fraud_u = pick_cluster_nodes(config.num_u);
  const std::vector<int> fraud_v = pick_cluster_nodes(config.num_v);

  GroundTruth truth;
  truth.u_fraud.assign(static_cast<std::size_t>(config.num_u), 0);
  truth.v_fraud.assign(static_cast<std::size_t>(config.num_v), 0);
  for (int i : fraud_u) truth.u_fraud[static_cast<std::size_t>(i)] = 1;
  for (int i : fraud_v) truth.v_fraud[static_cast<std::size_t>(i)] = 1;

  auto fill_features = [&](int n, int d, const std::vector<std::uint8_t>& fraud) {
    Matrix x(n, d);
    for (Index i = 0; i < n; ++i) {
      const double shift = fraud[static_cast<std::size_t>(i)] ? config.feature_shift : 0.0;
      for (Index f = 0; f < d; ++f) x(i, f) = rng.normal() + shift;
    }
    return x;
  };
  Matrix u_features = fill_features(config.num_u, config.u_features, truth.u_fraud);
  Matrix v_features = fill_features(config.num_v, config.v_features, truth.v_fraud);

  // Two-tier endpoint popularity: a small hub set receives `hub_mass` of the
  // background edge endpoints, giving heavy-tailed degrees. Hubs come from
  // the non-fraud population so the planted motif stays a small dense
  // cluster rather than blending into a hub's background traffic.
  auto popularity_order = [&](int n, const std::vector<std::uint8_t>& fraud) {
    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      if (!fraud[static_cast<std::size_t>(i)]) ids.push_back(i);
    }
    for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.uniform_int(ids.size() - k));
      std::swap(ids[k], ids[j]);
    }
    for (int i = 0; i < n; ++i) {
      if (fraud[static_cast<std::size_t>(i)]) ids.push_back(i);
    }
    return ids;
  };
  const std::vector<int> u_order = popularity_order(config.num_u, truth.u_fraud);
  const std::vector<int> v_order = popularity_order(config.num_v, truth.v_fraud);
  const std::size_t u_hubs = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(config.hub_fraction * config.num_u)));
  const std::size_t v_hubs = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(config.hub_fraction * config.num_v)));
  auto draw_endpoint = [&](const std::vector<int>& order, std::size_t hubs) {
    if (rng.uniform() < config.hub_mass) {
      return order[static_cast<std::size_t>(rng.uniform_int(hubs))];
    }
    return order[hubs + static_cast<std::size_t>(rng.uniform_int(order.size() - hubs))];
  };

  std::vector<Edge> edges;
  std::vector<bool> edge_in_cluster;
  const long background =
      std::lround(config.mean_degree * static_cast<double>(config.num_u));
  for (long k = 0; k < background; ++k) {
    edges.push_back({draw_endpoint(u_order, u_hubs), draw_endpoint(v_order, v_hubs)});
    edge_in_cluster.push_back(false);
  }
  for (int c = 0; c < config.fraud_clusters; ++c) {
    const int base = c * config.cluster_size;
    for (int a = 0; a < config.cluster_size; ++a) {
      for (int b = 0; b < config.cluster_size; ++b) {
        if (rng.uniform() < config.cluster_density) {
          edges.push_back({fraud_u[static_cast<std::size_t>(base + a)],
                           fraud_v[static_cast<std::size_t>(base + b)]});
          edge_in_cluster.push_back(true);
        }
      }
    }
  }

  Matrix e_features(static_cast<Index>(edges.size()), config.e_features);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double shift = edge_in_cluster[e] ? config.feature_shift : 0.0;
    for (Index f = 0; f < config.e_features; ++f) {
      e_features(static_cast<Index>(e), f) = rng.normal() + shift;
    }
  }

  // Stratified label budget: exactly round(fraction * count) labels per
  // class, so the known-label regime is controlled rather than binomial.
  auto reveal = [&](const std::vector<std::uint8_t>& fraud) {
    std::vector<Label> labels(fraud.size(), Label::Unknown);
    std::vector<int> classes[2];
    for (std::size_t i = 0; i < fraud.size(); ++i) {
      classes[fraud[i] ? 1 : 0].push_back(static_cast<int>(i));
    }
    for (auto& ids : classes) {
      for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.uniform_int(ids.size() - k));
        std::swap(ids[k], ids[j]);
      }
      const std::size_t reveal_count = static_cast<std::size_t>(
          std::lround(config.label_known_fraction * static_cast<double>(ids.size())));
      for (std::size_t k = 0; k < reveal_count && k < ids.size(); ++k) {
        const std::size_t id = static_cast<std::size_t>(ids[k]);
        labels[id] = fraud[id] ? Label::Fraud : Label::NonFraud;
      }
    }
    return labels;
  };
  std::vector<Label> u_labels = reveal(truth.u_fraud);
  std::vector<Label> v_labels = reveal(truth.v_fraud);

  SyntheticData out;
  out.graph = build_graph(std::move(u_features), std::move(v_features),
                          std::move(edges), std::move(e_features),
                          std::move(u_labels), std::move(v_labels));
  out.truth = std::move(truth);
  return out;
}

DegreeHistogram summarize_degrees(const BipartiteGraph& g) {
  auto histogram = [&](Partition p) {
    std::map<int, long> counts;
    for (Index i = 0; i < g.num_nodes(p); ++i) {
      ++counts[g.degree(p, static_cast<int>(i))];
    }
    return std::vector<std::pair<int, long>>(counts.begin(), counts.end());
  };
  return {histogram(Partition::U), histogram(Partition::V)};
}

std::string format_degree_summary(const DegreeHistogram& h) {
  std::ostringstream os;
  os << "# u partition\ndegree count\n";
  for (const auto& [d, c] : h.u) os << d << ' ' << c << '\n';
  os << "# v partition\ndegree count\n";
  for (const auto& [d, c] : h.v) os << d << ' ' << c << '\n';
  return os.str();
}

namespace {

const char* label_string(Label l) {
  switch (l) {
    case Label::Fraud: return "1";
    case Label::NonFraud: return "2";
    default: return "unknown";
  }
}

void write_feature_csv(const std::string& path, const std::string& id_prefix,
                       const Matrix& features) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "id";
  for (Index f = 0; f < features.cols(); ++f) out << ",f" << f;
  out << '\n';
  char buf[64];
  for (Index i = 0; i < features.rows(); ++i) {
    out << id_prefix << i;
    for (Index f = 0; f < features.cols(); ++f) {
      std::snprintf(buf, sizeof buf, ",%.17g", features(i, f));
      out << buf;
    }
    out << '\n';
  }
}

void write_label_csv(const std::string& path, const std::string& id_prefix,
                     const std::vector<Label>& labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "id,class\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << id_prefix << i << ',' << label_string(labels[i]) << '\n';
  }
}

}  // namespace

void export_csv_dataset(const BipartiteGraph& g, const GroundTruth* truth,
                        const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_feature_csv(dir + "/u_features.csv", "tx", g.u_features());
  write_feature_csv(dir + "/v_features.csv", "w", g.v_features());
  write_label_csv(dir + "/u_labels.csv", "tx", g.u_labels());
  write_label_csv(dir + "/v_labels.csv", "w", g.v_labels());

  {
    std::ofstream out(dir + "/edges.csv");
    if (!out) throw IoError("cannot write " + dir + "/edges.csv");
    out << "wallet_id,transaction_id";
    for (Index f = 0; f < g.e_features().cols(); ++f) out << ",f" << f;
    out << '\n';
    char buf[64];
    for (Index e = 0; e < g.num_edges(); ++e) {
      out << 'w' << g.edge(static_cast<int>(e)).v << ",tx"
          << g.edge(static_cast<int>(e)).u;
      for (Index f = 0; f < g.e_features().cols(); ++f) {
        std::snprintf(buf, sizeof buf, ",%.17g", g.e_features()(e, f));
        out << buf;
      }
      out << '\n';
    }
  }

  nlohmann::json schema;
  schema["u_features_file"] = "u_features.csv";
  schema["v_features_file"] = "v_features.csv";
  schema["edges_file"] = "edges.csv";
  schema["u_labels_file"] = "u_labels.csv";
  schema["v_labels_file"] = "v_labels.csv";
  schema["u_feature_count"] = static_cast<int>(g.u_features().cols());
  schema["v_feature_count"] = static_cast<int>(g.v_features().cols());
  schema["u_aggregated_begin"] = 0;
  schema["u_aggregated_end"] = 0;
  schema["u_has_time_column"] = false;
  schema["edge_features_inline"] = true;
  schema["e_feature_count"] = static_cast<int>(g.e_features().cols());
  schema["u_name"] = "u";
  schema["v_name"] = "v";
  std::ofstream sout(dir + "/schema.json");
  if (!sout) throw IoError("cannot write " + dir + "/schema.json");
  sout << schema.dump(2) << '\n';

  if (truth) {
    nlohmann::json t;
    t["u_fraud"] = nlohmann::json::array();
    t["v_fraud"] = nlohmann::json::array();
    for (std::size_t i = 0; i < truth->u_fraud.size(); ++i) {
      if (truth->u_fraud[i]) t["u_fraud"].push_back(static_cast<int>(i));
    }
    for (std::size_t i = 0; i < truth->v_fraud.size(); ++i) {
      if (truth->v_fraud[i]) t["v_fraud"].push_back(static_cast<int>(i));
    }
    t["num_u"] = static_cast<long>(g.num_u());
    t["num_v"] = static_cast<long>(g.num_v());
    std::ofstream tout(dir + "/ground_truth.json");
    if (!tout) throw IoError("cannot write " + dir + "/ground_truth.json");
    tout << t.dump(2) << '\n';
  }
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  in >> j;
  GroundTruth t;
  t.u_fraud.assign(j.at("num_u").get<std::size_t>(), 0);
  t.v_fraud.assign(j.at("num_v").get<std::size_t>(), 0);
  for (const auto& i : j.at("u_fraud")) t.u_fraud[i.get<std::size_t>()] = 1;
  for (const auto& i : j.at("v_fraud")) t.v_fraud[i.get<std::size_t>()] = 1;
  return t;
}

}  // namespace sagefin
