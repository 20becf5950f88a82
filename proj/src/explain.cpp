#include "sagefin/explain.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace sagefin {

void ExplainConfig::validate() const {
  if (n_hops < 1) throw InvalidConfig("n_hops must be >= 1");
  if (top_k < 1) throw InvalidConfig("top_k must be >= 1");
  if (threads < 0) throw InvalidConfig("threads must be >= 0");
}

namespace {

double single_bce(double logit, double target) {
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

// Fraud logit of one node under a (possibly masked) view, inference mode.
double target_logit(SageFinModel& work, const GraphView& view, Partition p,
                    int node) {
  const LayerState latent = encode(view, work, /*training=*/false);
  const Matrix& rows = p == Partition::U ? latent.u : latent.v;
  return predict_node(rows.row(node), work, p);
}

struct BaselineState {
  double logit = 0;
  double prob_fraud = 0;
  bool predicted_fraud = false;
  double reference = 0;  // BCE target for L1/L2
  double l1 = 0;
};

BaselineState baseline_state(const SageFinModel& model, const BipartiteGraph& g,
                             Partition p, int target, ReferenceLabel reference) {
  if (!model.trained) {
    throw UntrainedModel("explanations require a trained model checkpoint");
  }
  g.check_node(p, target);
  SageFinModel work = model;
  BaselineState s;
  s.logit = target_logit(work, GraphView(g), p, target);
  s.prob_fraud = stable_sigmoid(s.logit);
  s.predicted_fraud = s.prob_fraud >= 0.5;
  s.reference = s.predicted_fraud ? 1.0 : 0.0;
  if (reference == ReferenceLabel::GroundTruth && g.label(p, target) != Label::Unknown) {
    s.reference = g.label(p, target) == Label::Fraud ? 1.0 : 0.0;
  }
  s.l1 = single_bce(s.logit, s.reference);
  return s;
}

std::vector<int> candidate_edges(const BipartiteGraph& g, Partition p, int target,
                                 int n_hops) {
  const Neighborhood hood = n_hop_neighborhood(g, p, target, n_hops);
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(g.num_edges()), 0);
  auto touch = [&](Partition q, int node) {
    for (const int* it = g.incident_begin(q, node); it != g.incident_end(q, node); ++it) {
      seen[static_cast<std::size_t>(*it)] = 1;
    }
  };
  for (int u : hood.u_nodes) touch(Partition::U, u);
  for (int v : hood.v_nodes) touch(Partition::V, v);
  std::vector<int> out;
  for (std::size_t e = 0; e < seen.size(); ++e) {
    if (seen[e]) out.push_back(static_cast<int>(e));
  }
  return out;
}

}  // namespace

double baseline_loss(const SageFinModel& model, const BipartiteGraph& g,
                     Partition partition, int target, ReferenceLabel reference) {
  return baseline_state(model, g, partition, target, reference).l1;
}

std::vector<EdgeScore> score_edges(const SageFinModel& model,
                                   const BipartiteGraph& g, Partition partition,
                                   int target, const ExplainConfig& config) {
  config.validate();
  const BaselineState base = baseline_state(model, g, partition, target,
                                            config.reference);
  const std::vector<int> candidates = candidate_edges(g, partition, target,
                                                      config.n_hops);
  std::vector<EdgeScore> scores(candidates.size());

  unsigned n_threads = config.threads == 0 ? std::thread::hardware_concurrency()
                                           : static_cast<unsigned>(config.threads);
  if (n_threads == 0) n_threads = 1;
  n_threads = std::min<unsigned>(n_threads, std::max<std::size_t>(candidates.size(), 1));

  const GraphView full(g);
  auto worker = [&](std::size_t begin, std::size_t end) {
    SageFinModel work = model;  // private copy, batch-norm params stay frozen
    for (std::size_t k = begin; k < end; ++k) {
      const int e = candidates[k];
      const double logit = target_logit(work, full.without_edge(e), partition, target);
      const double l2 = single_bce(logit, base.reference);
      scores[k] = EdgeScore{e, l2 - base.l1, base.l1, l2};
    }
  };

  if (n_threads <= 1) {
    worker(0, candidates.size());
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_threads);
    const std::size_t chunk = (candidates.size() + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
      const std::size_t begin = std::min(candidates.size(), t * chunk);
      const std::size_t end = std::min(candidates.size(), begin + chunk);
      pool.emplace_back([&, t, begin, end] {
        try {
          worker(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }
  return scores;
}

Explanation select_subgraph(const std::vector<EdgeScore>& scores,
                            const BipartiteGraph& g, Partition partition,
                            int target, int top_k) {
  if (top_k < 1) throw InvalidConfig("top_k must be >= 1");
  g.check_node(partition, target);

  Explanation out;
  out.target_partition = partition;
  out.target_node = target;
  out.top_k = top_k;
  out.scores = scores;
  std::sort(out.scores.begin(), out.scores.end(),
            [](const EdgeScore& a, const EdgeScore& b) { return a.edge < b.edge; });

  // Candidates with positive causal effect, best first; ties by edge index.
  std::vector<EdgeScore> pool;
  for (const EdgeScore& s : out.scores) {
    if (s.c > 0.0) pool.push_back(s);
  }
  std::sort(pool.begin(), pool.end(), [](const EdgeScore& a, const EdgeScore& b) {
    if (a.c != b.c) return a.c > b.c;
    return a.edge < b.edge;
  });

  if (pool.empty()) {
    out.status = "no_positive_scores";
    return out;
  }

  std::vector<std::uint8_t> in_u(static_cast<std::size_t>(g.num_u()), 0);
  std::vector<std::uint8_t> in_v(static_cast<std::size_t>(g.num_v()), 0);
  (partition == Partition::U ? in_u : in_v)[static_cast<std::size_t>(target)] = 1;

  std::vector<std::uint8_t> taken(pool.size(), 0);
  std::vector<std::uint8_t> skipped(pool.size(), 0);
  while (static_cast<int>(out.subgraph.size()) < top_k) {
    std::size_t pick = pool.size();
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (taken[k]) continue;
      const Edge& ed = g.edge(pool[k].edge);
      if (in_u[static_cast<std::size_t>(ed.u)] || in_v[static_cast<std::size_t>(ed.v)]) {
        pick = k;
        break;
      }
      skipped[k] = 1;  // passed over while disconnected
    }
    if (pick == pool.size()) break;  // nothing connectable remains
    taken[pick] = 1;
    const Edge& ed = g.edge(pool[pick].edge);
    in_u[static_cast<std::size_t>(ed.u)] = 1;
    in_v[static_cast<std::size_t>(ed.v)] = 1;
    out.subgraph.push_back({pool[pick].edge, skipped[pick] != 0});
  }

  out.status = static_cast<int>(out.subgraph.size()) == top_k ? "ok" : "truncated";
  return out;
}

FidelityResult fidelity(const SageFinModel& model, const BipartiteGraph& g,
                        const Explanation& explanation) {
  const BaselineState base = baseline_state(model, g, explanation.target_partition,
                                            explanation.target_node,
                                            ReferenceLabel::Predicted);
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(g.num_edges()), 0);
  for (const SubgraphPick& pick : explanation.subgraph) {
    keep[static_cast<std::size_t>(pick.edge)] = 1;
  }
  std::vector<int> removed;
  for (const EdgeScore& s : explanation.scores) {
    if (!keep[static_cast<std::size_t>(s.edge)]) removed.push_back(s.edge);
  }

  SageFinModel work = model;
  const double logit = target_logit(work, GraphView(g).without_edges(removed),
                                    explanation.target_partition,
                                    explanation.target_node);
  const double prob_fraud_sub = stable_sigmoid(logit);

  FidelityResult out;
  out.prob_full = base.predicted_fraud ? base.prob_fraud : 1.0 - base.prob_fraud;
  out.prob_subgraph = base.predicted_fraud ? prob_fraud_sub : 1.0 - prob_fraud_sub;
  out.gap = std::abs(out.prob_full - out.prob_subgraph);
  return out;
}

Explanation explain(const SageFinModel& model, const BipartiteGraph& g,
                    Partition partition, int target, const ExplainConfig& config) {
  config.validate();
  const BaselineState base = baseline_state(model, g, partition, target,
                                            config.reference);
  const std::vector<EdgeScore> scores = score_edges(model, g, partition, target,
                                                    config);
  Explanation out = select_subgraph(scores, g, partition, target, config.top_k);
  out.n_hops = config.n_hops;
  out.predicted_fraud = base.predicted_fraud;
  const FidelityResult fid = fidelity(model, g, out);
  out.prob_full = fid.prob_full;
  out.prob_subgraph = fid.prob_subgraph;
  return out;
}

Neighborhood subgraph_nodes(const BipartiteGraph& g, const Explanation& e) {
  std::vector<std::uint8_t> in_u(static_cast<std::size_t>(g.num_u()), 0);
  std::vector<std::uint8_t> in_v(static_cast<std::size_t>(g.num_v()), 0);
  (e.target_partition == Partition::U ? in_u : in_v)[static_cast<std::size_t>(e.target_node)] = 1;
  Neighborhood hood;
  for (const SubgraphPick& pick : e.subgraph) {
    const Edge& ed = g.edge(pick.edge);
    in_u[static_cast<std::size_t>(ed.u)] = 1;
    in_v[static_cast<std::size_t>(ed.v)] = 1;
    hood.edges.push_back(pick.edge);
  }
  for (std::size_t i = 0; i < in_u.size(); ++i) {
    if (in_u[i]) hood.u_nodes.push_back(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < in_v.size(); ++i) {
    if (in_v[i]) hood.v_nodes.push_back(static_cast<int>(i));
  }
  std::sort(hood.edges.begin(), hood.edges.end());
  return hood;
}

std::string explanation_file_stem(const Explanation& e) {
  return std::string(partition_name(e.target_partition)) + "_" +
         std::to_string(e.target_node) + "_top" + std::to_string(e.top_k);
}

namespace {

const char* label_color(Label l) {
  switch (l) {
    case Label::Fraud: return "#e06666";
    case Label::NonFraud: return "#93c47d";
    default: return "#a4c2f4";
  }
}

std::string node_id(Partition p, int node) {
  return std::string(partition_name(p)) + std::to_string(node);
}

}  // namespace

void export_dot(const Explanation& e, const BipartiteGraph& g,
                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dot file: " + path);

  double max_c = 0.0;
  for (const SubgraphPick& pick : e.subgraph) {
    for (const EdgeScore& s : e.scores) {
      if (s.edge == pick.edge) max_c = std::max(max_c, s.c);
    }
  }

  const Neighborhood hood = subgraph_nodes(g, e);
  out << "graph \"" << explanation_file_stem(e) << "\" {\n";
  out << "  node [fontsize=10, style=filled];\n";
  auto emit_node = [&](Partition p, int node) {
    const bool is_target = p == e.target_partition && node == e.target_node;
    out << "  \"" << node_id(p, node) << "\" [shape="
        << (p == Partition::U ? "box" : "circle")
        << ", fillcolor=\"" << label_color(g.label(p, node)) << "\"";
    if (is_target) out << ", penwidth=3, peripheries=2";
    out << "];\n";
  };
  for (int u : hood.u_nodes) emit_node(Partition::U, u);
  for (int v : hood.v_nodes) emit_node(Partition::V, v);
  for (const SubgraphPick& pick : e.subgraph) {
    const Edge& ed = g.edge(pick.edge);
    double c = 0.0;
    for (const EdgeScore& s : e.scores) {
      if (s.edge == pick.edge) c = s.c;
    }
    const double width = max_c > 0.0 ? 1.0 + 4.0 * (c / max_c) : 1.0;
    out << "  \"" << node_id(Partition::U, ed.u) << "\" -- \""
        << node_id(Partition::V, ed.v) << "\" [penwidth=" << width << "];\n";
  }
  out << "}\n";
  if (!out) throw IoError("dot write failed: " + path);
}

namespace {

nlohmann::json explanation_to_json(const Explanation& e, const BipartiteGraph& g) {
  nlohmann::json j;
  j["target"] = {{"partition", partition_name(e.target_partition)},
                 {"node", e.target_node}};
  j["n_hops"] = e.n_hops;
  j["top_k"] = e.top_k;
  j["predicted_label"] = e.predicted_fraud ? "fraud" : "non-fraud";
  j["prob_full"] = e.prob_full;
  j["prob_subgraph"] = e.prob_subgraph;
  j["status"] = e.status;
  nlohmann::json picks = nlohmann::json::array();
  for (const SubgraphPick& pick : e.subgraph) {
    const Edge& ed = g.edge(pick.edge);
    picks.push_back({{"edge", pick.edge},
                     {"u", ed.u},
                     {"v", ed.v},
                     {"skipped_before_admission", pick.skipped_before_admission}});
  }
  j["subgraph"] = picks;
  nlohmann::json scores = nlohmann::json::array();
  for (const EdgeScore& s : e.scores) {
    scores.push_back({{"edge", s.edge}, {"c", s.c}, {"l1", s.l1}, {"l2", s.l2}});
  }
  j["scores"] = scores;
  return j;
}

}  // namespace

void export_json(const Explanation& e, const BipartiteGraph& g,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write explanation json: " + path);
  out << explanation_to_json(e, g).dump(2) << '\n';
  if (!out) throw IoError("explanation json write failed: " + path);
}

Explanation explanation_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Explanation e;
  const std::string pname = j.at("target").at("partition").get<std::string>();
  e.target_partition = pname == "u" ? Partition::U : Partition::V;
  e.target_node = j.at("target").at("node").get<int>();
  e.n_hops = j.at("n_hops").get<int>();
  e.top_k = j.at("top_k").get<int>();
  e.predicted_fraud = j.at("predicted_label").get<std::string>() == "fraud";
  e.prob_full = j.at("prob_full").get<double>();
  e.prob_subgraph = j.at("prob_subgraph").get<double>();
  e.status = j.at("status").get<std::string>();
  for (const auto& pick : j.at("subgraph")) {
    e.subgraph.push_back({pick.at("edge").get<int>(),
                          pick.at("skipped_before_admission").get<bool>()});
  }
  for (const auto& s : j.at("scores")) {
    e.scores.push_back({s.at("edge").get<int>(), s.at("c").get<double>(),
                        s.at("l1").get<double>(), s.at("l2").get<double>()});
  }
  return e;
}

Explanation explanation_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read explanation json: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return explanation_from_json(text);
}

}  // namespace sagefin
