#pragma once

#include <string>
#include <vector>

#include "sagefin/model.hpp"

namespace sagefin {

enum class ReferenceLabel : std::uint8_t { Predicted, GroundTruth };

struct ExplainConfig {
  int n_hops = 4;
  int top_k = 10;
  // Loss reference for the ablation deltas: the model's own prediction under
  // the full graph, or the ground-truth label when one exists.
  ReferenceLabel reference = ReferenceLabel::Predicted;
  int threads = 1;  // 0 = hardware concurrency

  void validate() const;
};

// Loss delta of one single-edge ablation against the intact graph.
struct EdgeScore {
  int edge = 0;
  double c = 0;   // l2 - l1
  double l1 = 0;  // classification loss on the full graph
  double l2 = 0;  // classification loss with this edge removed

  bool operator==(const EdgeScore&) const = default;
};

struct SubgraphPick {
  int edge = 0;
  // True when the greedy pass had to pass over this edge at least once
  // before a bridge made it connectable.
  bool skipped_before_admission = false;

  bool operator==(const SubgraphPick&) const = default;
};

struct Explanation {
  Partition target_partition = Partition::U;
  int target_node = 0;
  int n_hops = 0;
  int top_k = 0;
  bool predicted_fraud = false;
  double prob_full = 0;      // probability of the predicted label, full graph
  double prob_subgraph = 0;  // same probability with only the subgraph kept
  std::vector<EdgeScore> scores;      // every scored candidate, ascending edge id
  std::vector<SubgraphPick> subgraph; // selection order
  std::string status;  // "ok", "truncated", or "no_positive_scores"

  bool operator==(const Explanation&) const = default;
};

// Classification loss of the target under the intact graph, measured against
// the reference label (inference mode, frozen batch-norm statistics).
double baseline_loss(const SageFinModel& model, const BipartiteGraph& g,
                     Partition partition, int target,
                     ReferenceLabel reference = ReferenceLabel::Predicted);

// Scores every edge incident to the target's n-hop neighborhood by removing
// it (alone) from the intact graph and re-reading the target's loss.
// Ablations are independent and run on `threads` workers; results are merged
// by edge index, so the output is deterministic.
std::vector<EdgeScore> score_edges(const SageFinModel& model,
                                   const BipartiteGraph& g, Partition partition,
                                   int target, const ExplainConfig& config);

// Greedy top-K selection over the positive-score candidates, highest C first
// with ties broken by ascending edge index, admitting an edge only when it
// touches the connected component grown from the target.
Explanation select_subgraph(const std::vector<EdgeScore>& scores,
                            const BipartiteGraph& g, Partition partition,
                            int target, int top_k);

struct FidelityResult {
  double prob_full = 0;
  double prob_subgraph = 0;
  double gap = 0;
};

// Probability of the predicted label when every scored neighborhood edge
// outside the subgraph is removed; edges beyond the n-hop scan are untouched.
FidelityResult fidelity(const SageFinModel& model, const BipartiteGraph& g,
                        const Explanation& explanation);

// baseline + score + select + fidelity in one pass.
Explanation explain(const SageFinModel& model, const BipartiteGraph& g,
                    Partition partition, int target, const ExplainConfig& config);

// Node/edge membership of the selected subgraph (target always included).
Neighborhood subgraph_nodes(const BipartiteGraph& g, const Explanation& e);

std::string explanation_file_stem(const Explanation& e);

// Graphviz rendering: V-partition nodes as circles, U-partition nodes as
// boxes, colors by label, edge width scaled by causal score.
void export_dot(const Explanation& e, const BipartiteGraph& g,
                const std::string& path);

void export_json(const Explanation& e, const BipartiteGraph& g,
                 const std::string& path);
Explanation explanation_from_json_file(const std::string& path);
Explanation explanation_from_json(const std::string& text);

}  // namespace sagefin
