#include "omnigraph/topology.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "omnigraph/errors.hpp"

namespace omnigraph {

namespace {

std::vector<std::pair<std::size_t, std::size_t>> considered_edges(const WorkflowGraph& g,
                                                                  bool forward_only) {
  std::map<AgentId, std::size_t> index;
  for (std::size_t i = 0; i < g.agent_ids().size(); ++i) index[g.agent_ids()[i]] = i;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const Edge& e : g.edges()) {
    if (!e.live) continue;
    if (forward_only && e.kind != EdgeKind::forward) continue;
    out.emplace_back(index.at(e.source), index.at(e.target));
  }
  return out;
}

/// reached[i][j] == true iff j is reachable from i along >= 1 directed edge.
std::vector<std::vector<bool>> reachability(std::size_t n,
                                            const std::vector<std::pair<std::size_t, std::size_t>>&
                                                edges) {
  std::vector<std::vector<std::size_t>> adjacency(n);
  for (const auto& [u, v] : edges) adjacency[u].push_back(v);
  std::vector<std::vector<bool>> reached(n, std::vector<bool>(n, false));
  for (std::size_t start = 0; start < n; ++start) {
    std::queue<std::size_t> frontier;
    for (std::size_t v : adjacency[start]) {
      if (!reached[start][v]) {
        reached[start][v] = true;
        frontier.push(v);
      }
    }
    while (!frontier.empty()) {
      std::size_t u = frontier.front();
      frontier.pop();
      for (std::size_t v : adjacency[u]) {
        if (!reached[start][v]) {
          reached[start][v] = true;
          frontier.push(v);
        }
      }
    }
  }
  return reached;
}

}  // namespace

double degree_centralization(const WorkflowGraph& g, bool forward_only) {
  const std::size_t n = g.agent_ids().size();
  if (n < 3) {
    throw DataError("degree centralization needs at least 3 nodes, got " + std::to_string(n));
  }
  std::set<std::pair<std::size_t, std::size_t>> undirected;
  for (const auto& [u, v] : considered_edges(g, forward_only)) {
    undirected.insert({std::min(u, v), std::max(u, v)});
  }
  std::vector<int> degree(n, 0);
  for (const auto& [u, v] : undirected) {
    degree[u] += 1;
    degree[v] += 1;
  }
  const int max_degree = *std::max_element(degree.begin(), degree.end());
  double sum = 0.0;
  for (int d : degree) sum += max_degree - d;
  return sum / (static_cast<double>(n - 1) * static_cast<double>(n - 2));
}

double global_reach_centrality(const WorkflowGraph& g, bool forward_only) {
  const std::size_t n = g.agent_ids().size();
  if (n < 2) {
    throw DataError("reach centrality needs at least 2 nodes, got " + std::to_string(n));
  }
  const auto reached = reachability(n, considered_edges(g, forward_only));
  std::vector<double> share(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    int count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && reached[i][j]) count += 1;
    }
    share[i] = static_cast<double>(count) / static_cast<double>(n - 1);
  }
  const double best = *std::max_element(share.begin(), share.end());
  double sum = 0.0;
  for (double s : share) sum += best - s;
  return sum / static_cast<double>(n - 1);
}

double krackhardt_hierarchy(const WorkflowGraph& g, bool forward_only) {
  const std::size_t n = g.agent_ids().size();
  const auto reached = reachability(n, considered_edges(g, forward_only));
  long long reachable_pairs = 0;
  long long symmetric_pairs = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (u == v || !reached[u][v]) continue;
      reachable_pairs += 1;
      if (reached[v][u]) symmetric_pairs += 1;
    }
  }
  if (reachable_pairs == 0) return 1.0;  // vacuously perfectly hierarchical
  return 1.0 - static_cast<double>(symmetric_pairs) / static_cast<double>(reachable_pairs);
}

nlohmann::json TopologyReport::to_json() const {
  nlohmann::json j;
  j["nodes"] = nodes;
  j["edges_considered"] = edges_considered;
  j["forward_only"] = forward_only;
  if (centralization) {
    j["centralization"] = *centralization;
  } else {
    j["centralization"] = nullptr;
    j["centralization_note"] = centralization_note;
  }
  if (reach_centrality) {
    j["reach_centrality"] = *reach_centrality;
  } else {
    j["reach_centrality"] = nullptr;
    j["reach_note"] = reach_note;
  }
  j["hierarchy"] = hierarchy;
  return j;
}

TopologyReport topology_report(const WorkflowGraph& g, bool forward_only) {
  TopologyReport report;
  report.nodes = static_cast<int>(g.agent_ids().size());
  report.edges_considered = static_cast<int>(considered_edges(g, forward_only).size());
  report.forward_only = forward_only;
  try {
    report.centralization = degree_centralization(g, forward_only);
  } catch (const DataError& e) {
    report.centralization = std::nullopt;
    report.centralization_note = e.what();
  }
  try {
    report.reach_centrality = global_reach_centrality(g, forward_only);
  } catch (const DataError& e) {
    report.reach_centrality = std::nullopt;
    report.reach_note = e.what();
  }
  report.hierarchy = krackhardt_hierarchy(g, forward_only);
  return report;
}

}  // namespace omnigraph
