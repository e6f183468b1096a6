#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "omnigraph/context.hpp"
#include "omnigraph/graph.hpp"
#include "omnigraph/runtime.hpp"
#include "omnigraph/store.hpp"

namespace omnigraph {

enum class RunStatus { completed, round_limit_exceeded, deadlock };

const char* to_string(RunStatus s);

/// Process exit code convention for a finished run.
int exit_code_for(RunStatus s);

struct PruneRecord {
  AgentId source;
  AgentId target;
  int round = 0;  // first round the edge is gone (barrier round + 1)
};

struct WorkflowResult {
  RunStatus status = RunStatus::completed;
  int rounds_executed = 0;
  std::vector<Artifact> terminal_artifacts;  // latest artifact of each forward sink
  std::vector<PruneRecord> prune_log;
  std::vector<std::string> log;  // warnings: dropped sends, failed attempts, ...
};

/// Round-based executor. Rounds are barriers: everything produced in round t
/// (messages, artifacts, activation flags) becomes visible in round t+1.
/// Within a round, ready agents execute in lexicographic order, which makes
/// traces byte-deterministic for a fixed seed.
class Scheduler {
public:
  Scheduler(WorkflowGraph& graph, Store& store, Registry& registry, TraceLog& trace);

  /// Agents ready for the next round, lexicographic: every live forward
  /// predecessor has emitted at least one artifact and the agent has an
  /// undelivered inbound message or has never activated; or an undelivered
  /// revision request reached it over a reverse edge.
  std::vector<AgentId> ready_set() const;

  /// One round plus its barrier (reverse counter updates, prunes).
  /// Pre: ready_set() is non-empty.
  void execute_round();

  /// Run to a terminal status and append the workflow_done event.
  WorkflowResult run();

  int current_round() const { return round_; }
  const WorkflowResult& partial_result() const { return result_; }

private:
  struct PendingMessage {
    Message msg;
    bool revision = false;  // arrived over a reverse edge
  };

  void execute_agent(const AgentId& id, const std::set<AgentId>& activated_at_round_start,
                     std::vector<std::pair<AgentId, AgentId>>& reverse_sends);
  ReasoningRequest build_request(const AgentId& id, const ContextBundle& bundle, int attempt) const;
  bool validate_response(const AgentId& id, const ReasoningResponse& resp, std::string& problem)
      const;

  WorkflowGraph& graph_;
  Store& store_;
  Registry& registry_;
  TraceLog& trace_;
  int round_ = 0;  // rounds are 1-based; 0 = nothing executed yet
  std::map<AgentId, std::vector<PendingMessage>> undelivered_;
  WorkflowResult result_;
  bool done_ = false;
};

/// Convenience wrapper: build the scheduler, run to completion.
WorkflowResult run_workflow(WorkflowGraph& graph, Store& store, Registry& registry,
                            TraceLog& trace);

}  // namespace omnigraph
