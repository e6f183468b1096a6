#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "omnigraph/errors.hpp"
#include "omnigraph/ext/json.hpp"

namespace omnigraph {

using AgentId = std::string;

/// Declarative description of one agent in a workflow document.
struct AgentSpec {
  AgentId id;
  std::string role_label;
  std::string stage;
  std::vector<std::string> tools;         // must resolve in the tool registry
  std::string reasoning_ref;              // must resolve in the reasoning registry
  std::vector<std::string> required_context;  // stage tags a huddle must cover
};

/// Authored edge. A present retry_budget (integer or null in JSON) declares the
/// edge as feedback: it is excluded from the primary-flow order computation.
/// JSON null selects the configured default budget.
struct EdgeSpec {
  AgentId source;
  AgentId target;
  bool feedback_declared = false;
  std::optional<int> retry_budget;  // engaged only when feedback_declared
};

/// Tunables carried by a workflow document (all optional in the file).
struct WorkflowConfig {
  int max_rounds = 64;
  std::uint64_t seed = 0;
  int retry_budget_default = 3;
  int d_max = 2;       // huddle recursion depth cap
  int turn_limit = 1;  // round-robin cycles per huddle
};

/// Parsed workflow document, prior to validation/graph construction.
struct WorkflowDoc {
  std::vector<AgentSpec> agents;
  std::vector<EdgeSpec> edges;
  WorkflowConfig config;
};

/// One semantic problem found by validate_spec. All violations are collected,
/// never only the first.
struct Violation {
  std::string code;     // "duplicate_agent_id", "dangling_edge_source", ...
  std::string locus;    // "agents[2].id", "edges[0].target", ...
  std::string message;  // human-readable, names the offender
};

enum class EdgeKind { forward, reverse };

inline const char* to_string(EdgeKind k) { return k == EdgeKind::forward ? "forward" : "reverse"; }

/// A classified edge plus its runtime retry state. Forward edges carry no
/// budget and are always live. A reverse edge with budget 0 is born dead,
/// which degenerates the run to plain DAG execution.
struct Edge {
  AgentId source;
  AgentId target;
  EdgeKind kind = EdgeKind::forward;
  int budget = 0;    // meaningful for reverse edges only
  int counter = 0;   // deliveries so far; counter <= budget while live
  bool live = true;
};

/// Names known to the runtime, used to validate reasoning_ref / tools.
struct RegistryView {
  std::set<std::string> reasoning_names;
  std::set<std::string> tool_names;
};

/// Immutable topology plus mutable per-edge retry state. Construction derives
/// the topological order of the primary flow (lexicographic tie-break) and
/// classifies every edge against it: reverse iff the target precedes the
/// source. The scheduler flips `live` at round barriers; nothing else mutates.
class WorkflowGraph {
public:
  const std::vector<AgentSpec>& agents() const { return agents_; }
  const std::vector<AgentId>& agent_ids() const { return ids_; }
  bool has_agent(const AgentId& id) const { return index_.count(id) != 0; }
  const AgentSpec& agent(const AgentId& id) const;

  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<Edge>& edges() { return edges_; }
  const Edge* find_edge(const AgentId& source, const AgentId& target) const;
  Edge* find_edge(const AgentId& source, const AgentId& target);

  /// Topological order of the primary flow; position in it is the rank.
  const std::vector<AgentId>& topo_order() const { return topo_; }
  int topo_rank(const AgentId& id) const;

  const WorkflowConfig& config() const { return config_; }

  /// Deterministic structural dump (excludes mutable counters on request).
  nlohmann::json canonical_json(bool include_state = true) const;

private:
  friend WorkflowGraph build_graph(const WorkflowDoc& doc);

  std::vector<AgentSpec> agents_;   // sorted by id
  std::vector<AgentId> ids_;        // sorted
  std::map<AgentId, std::size_t> index_;
  std::vector<Edge> edges_;         // sorted by (source, target)
  std::vector<AgentId> topo_;
  std::map<AgentId, int> rank_;
  WorkflowConfig config_;
};

/// Parse a workflow document. Throws ParseError with a field locus on
/// malformed JSON or wrong field types/shapes; performs no semantic checks.
WorkflowDoc parse_workflow(const std::string& json_text);
WorkflowDoc parse_workflow(const nlohmann::json& doc);

/// Render a document back to its normative JSON shape.
nlohmann::json workflow_to_json(const WorkflowDoc& doc);

/// Collect every semantic violation: duplicate ids, dangling edge endpoints,
/// self-loops, duplicate edges, unresolvable reasoning_ref, unknown tools.
std::vector<Violation> validate_spec(const WorkflowDoc& doc, const RegistryView& known);

/// Build the classified graph. Pre: validate_spec returned empty. Throws
/// BuildError("forward cycle: ...") naming the cycle's nodes when the primary
/// flow (edges not declared as feedback) is cyclic.
WorkflowGraph build_graph(const WorkflowDoc& doc);

/// Live in-neighbors of `agent`, lexicographic. Pruned edges excluded.
std::vector<AgentId> predecessors(const WorkflowGraph& g, const AgentId& agent);

/// Live out-neighbors of `agent`, lexicographic. Pruned edges excluded.
std::vector<AgentId> successors(const WorkflowGraph& g, const AgentId& agent);

/// Live forward in-neighbors only (readiness prerequisites).
std::vector<AgentId> forward_predecessors(const WorkflowGraph& g, const AgentId& agent);

/// Successors over live edges restricted to agents with their activation flag
/// set. `activated` is the flag snapshot the caller is working from.
std::vector<AgentId> active_successors(const WorkflowGraph& g, const AgentId& agent,
                                       const std::set<AgentId>& activated);

}  // namespace omnigraph
