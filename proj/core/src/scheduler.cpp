#include "omnigraph/scheduler.hpp"

#include <algorithm>
#include <utility>

#include "omnigraph/digest.hpp"
#include "omnigraph/errors.hpp"

namespace omnigraph {

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::round_limit_exceeded: return "round_limit_exceeded";
    case RunStatus::deadlock: return "deadlock";
  }
  return "completed";
}

int exit_code_for(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return 0;
    case RunStatus::round_limit_exceeded: return 2;
    case RunStatus::deadlock: return 3;
  }
  return 0;
}

Scheduler::Scheduler(WorkflowGraph& graph, Store& store, Registry& registry, TraceLog& trace)
    : graph_(graph), store_(store), registry_(registry), trace_(trace) {}

std::vector<AgentId> Scheduler::ready_set() const {
  const int next_round = round_ + 1;
  std::vector<AgentId> ready;
  for (const AgentId& id : graph_.agent_ids()) {
    auto it = undelivered_.find(id);
    const bool has_inbound = it != undelivered_.end() && !it->second.empty();
    bool has_revision = false;
    if (has_inbound) {
      for (const PendingMessage& p : it->second) {
        if (p.revision) {
          has_revision = true;
          break;
        }
      }
    }
    if (has_revision) {  // a revision request re-opens the agent unconditionally
      ready.push_back(id);
      continue;
    }
    bool prerequisites_met = true;
    for (const AgentId& pred : forward_predecessors(graph_, id)) {
      if (!store_.has_artifact_before(pred, next_round)) {
        prerequisites_met = false;
        break;
      }
    }
    if (prerequisites_met && (has_inbound || !store_.activated(id))) {
      ready.push_back(id);
    }
  }
  return ready;
}

void Scheduler::execute_round() {
  std::vector<AgentId> ready = ready_set();
  round_ += 1;
  const int t = round_;

  // Round-start snapshots: activation flags feed huddle recruitment; each
  // ready agent's inbox is drained so messages sent during this round are
  // delivered no earlier than round t+1.
  const std::set<AgentId> activated_at_round_start = store_.activated_set();
  for (const AgentId& id : ready) {
    undelivered_.erase(id);  // context itself is read from the store by round stamp
  }

  std::vector<std::pair<AgentId, AgentId>> reverse_sends;
  for (const AgentId& id : ready) {
    execute_agent(id, activated_at_round_start, reverse_sends);
  }

  // Barrier: count at most one traversal per reverse edge per round, then
  // retire edges whose budget is exhausted effective next round. Messages
  // already enqueued above survive the prune and are still delivered.
  std::sort(reverse_sends.begin(), reverse_sends.end());
  reverse_sends.erase(std::unique(reverse_sends.begin(), reverse_sends.end()),
                      reverse_sends.end());
  for (const auto& [source, target] : reverse_sends) {
    Edge* edge = graph_.find_edge(source, target);
    edge->counter += 1;
    trace_.append(t, source, TraceEventType::reverse_traverse,
                  {{"target", target}, {"counter", edge->counter}, {"budget", edge->budget}});
    if (edge->counter >= edge->budget) {
      edge->live = false;
      trace_.append(t + 1, source, TraceEventType::edge_pruned,
                    {{"target", target}, {"counter", edge->counter}});
      result_.prune_log.push_back({source, target, t + 1});
    }
  }
}

ReasoningRequest Scheduler::build_request(const AgentId& id, const ContextBundle& bundle,
                                          int attempt) const {
  ReasoningRequest req;
  req.agent = id;
  req.spec = &graph_.agent(id);
  req.context = &bundle;
  req.round = round_;
  req.attempt = attempt;
  for (const Edge& e : graph_.edges()) {  // edges sorted by (source, target)
    if (e.source != id) continue;
    if (e.kind == EdgeKind::forward) {
      if (e.live) req.live_forward_targets.push_back(e.target);
    } else {
      req.reverse_targets_all.push_back(e.target);
      if (e.live) req.live_reverse_targets.push_back(e.target);
    }
  }
  return req;
}

bool Scheduler::validate_response(const AgentId& id, const ReasoningResponse& resp,
                                  std::string& problem) const {
  for (const auto& [target, body] : resp.instructions) {
    (void)body;
    if (graph_.find_edge(id, target) == nullptr) {
      problem = "directive from '" + id + "' to non-successor '" + target + "'";
      return false;
    }
  }
  return true;
}

void Scheduler::execute_agent(const AgentId& id,
                              const std::set<AgentId>& activated_at_round_start,
                              std::vector<std::pair<AgentId, AgentId>>& reverse_sends) {
  const int t = round_;
  const int attempt =
      static_cast<int>(store_.has_agent(id) ? store_.memory(id).attempt_log.size() : 0) + 1;
  store_.ensure_agent(id);
  store_.set_activated(id);
  trace_.append(t, id, TraceEventType::activate, {{"attempt", attempt}});

  ContextBundle bundle = assemble_context(graph_, store_, id, t);
  std::shared_ptr<Reasoning> reasoning = registry_.resolve_reasoning(graph_.agent(id).reasoning_ref);

  ReasoningResponse resp;
  std::string problem;
  bool failed = false;
  try {
    resp = reasoning->invoke(build_request(id, bundle, attempt), registry_);
    if (resp.needs_huddle) {
      HuddleSelection selection =
          select_huddle_set(graph_, id, activated_at_round_start, graph_.config().d_max);
      if (!selection.convened.empty()) {
        RuntimeContributor contributor(graph_, registry_);
        HuddleSession session = run_huddle(graph_, store_, contributor, selection, t,
                                           graph_.config().turn_limit, trace_);
        bundle.enrichment = session.contributions;
        resp = reasoning->invoke(build_request(id, bundle, attempt), registry_);
      }
    }
    if (!validate_response(id, resp, problem)) throw ProtocolError(problem);
  } catch (const Error& e) {
    failed = true;
    problem = e.what();
  }

  if (failed) {  // the whole response is discarded; nothing was written yet
    store_.record_attempt(id, t, "failed");
    result_.log.push_back("round " + std::to_string(t) + ": attempt " + std::to_string(attempt) +
                          " by '" + id + "' failed: " + problem);
    return;
  }

  const Artifact& artifact = store_.append_artifact(id, t, resp.label, resp.artifact_payload);
  trace_.append(t, id, TraceEventType::emit_artifact,
                {{"label", to_string(artifact.label)},
                 {"version", artifact.version},
                 {"payload", artifact.payload}});
  store_.record_attempt(id, t, digest_hex(artifact.payload));

  for (const auto& [target, body] : resp.instructions) {
    const Edge* edge = graph_.find_edge(id, target);
    if (!edge->live) {  // retired edge: drop this directive alone, keep the rest
      result_.log.push_back("round " + std::to_string(t) + ": dropped directive '" + id +
                            "' -> '" + target + "' over retired edge");
      continue;
    }
    const MessageKind kind = edge->kind == EdgeKind::forward ? MessageKind::instruction
                                                             : MessageKind::revision_request;
    store_.ensure_agent(target);
    Message msg = store_.append_dialog(id, target, t, body, kind);
    trace_.append(t, id, TraceEventType::send_instruction,
                  {{"to", target},
                   {"kind", to_string(kind)},
                   {"body", msg.body},
                   {"channel_seq", msg.seq}});
    undelivered_[target].push_back({msg, edge->kind == EdgeKind::reverse});
    if (edge->kind == EdgeKind::reverse) reverse_sends.emplace_back(id, target);
  }
}

WorkflowResult Scheduler::run() {
  if (done_) return result_;
  for (const AgentSpec& spec : graph_.agents()) {  // startup check, before round 1
    if (!registry_.has_reasoning(spec.reasoning_ref)) {
      throw LookupError("unresolvable reasoning_ref '" + spec.reasoning_ref + "' for agent '" +
                        spec.id + "'");
    }
  }
  const int max_rounds = graph_.config().max_rounds;
  RunStatus status = RunStatus::completed;
  while (true) {
    std::vector<AgentId> ready = ready_set();
    if (ready.empty()) {
      bool pending = false;
      for (const auto& [agent, messages] : undelivered_) {
        (void)agent;
        if (!messages.empty()) {
          pending = true;
          break;
        }
      }
      status = pending ? RunStatus::deadlock : RunStatus::completed;
      break;
    }
    if (round_ >= max_rounds) {
      status = RunStatus::round_limit_exceeded;
      break;
    }
    execute_round();
  }

  result_.status = status;
  result_.rounds_executed = round_;
  for (const AgentId& id : graph_.agent_ids()) {
    bool has_forward_out = false;
    for (const Edge& e : graph_.edges()) {
      if (e.source == id && e.kind == EdgeKind::forward) {
        has_forward_out = true;
        break;
      }
    }
    if (has_forward_out) continue;
    if (const Artifact* latest = store_.latest_artifact(id)) {
      result_.terminal_artifacts.push_back(*latest);
    }
  }
  trace_.append(round_, "", TraceEventType::workflow_done,
                {{"status", to_string(status)}, {"rounds", round_}});
  done_ = true;
  return result_;
}

WorkflowResult run_workflow(WorkflowGraph& graph, Store& store, Registry& registry,
                            TraceLog& trace) {
  Scheduler scheduler(graph, store, registry, trace);
  return scheduler.run();
}

}  // namespace omnigraph
