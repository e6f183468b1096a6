#pragma once

#include <optional>
#include <string>

#include "omnigraph/graph.hpp"

namespace omnigraph {

/// Freeman degree centralization of the undirected projection of the live
/// edge set: sum over nodes of (max degree − degree), normalized by
/// (n−1)(n−2). 1.0 for a star, 0.0 for degree-regular graphs such as cycles.
/// Throws DataError when the graph has fewer than 3 nodes.
double degree_centralization(const WorkflowGraph& g, bool forward_only = false);

/// Global reach centrality over directed live edges: each node's reach share
/// is the fraction of the other n−1 nodes it can reach; the score is the mean
/// lead of the best reacher over everyone, Σ(C_max − C_i)/(n−1). 1.0 for an
/// out-star, 0.0 when every node reaches equally far (e.g. a directed cycle).
/// Throws DataError when the graph has fewer than 2 nodes.
double global_reach_centrality(const WorkflowGraph& g, bool forward_only = false);

/// Krackhardt hierarchy: the share of ordered reachable pairs (u ≠ v) that
/// are NOT mutually reachable. 1.0 for any DAG and, by convention, when no
/// pair is reachable at all; 0.0 when every reachable pair is symmetric.
double krackhardt_hierarchy(const WorkflowGraph& g, bool forward_only = false);

/// Bundle of all three metrics. Metrics whose size preconditions fail are
/// carried as null with a reason instead of aborting the report.
struct TopologyReport {
  int nodes = 0;
  int edges_considered = 0;  // live edges (optionally forward only)
  bool forward_only = false;
  std::optional<double> centralization;
  std::string centralization_note;  // set when centralization is null
  std::optional<double> reach_centrality;
  std::string reach_note;  // set when reach_centrality is null
  double hierarchy = 1.0;

  nlohmann::json to_json() const;
};

TopologyReport topology_report(const WorkflowGraph& g, bool forward_only = false);

}  // namespace omnigraph
