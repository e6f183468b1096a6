#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "omnigraph/graph.hpp"
#include "omnigraph/store.hpp"

namespace omnigraph {

/// Everything an agent's reasoning sees for one execution: inbound dialog,
/// the latest artifact of each live predecessor, and any huddle enrichment
/// gathered on its behalf. Enrichment never leaks into other agents' bundles.
struct ContextBundle {
  AgentId owner;
  std::vector<Message> conversational;  // inbound messages, append order
  std::vector<Artifact> artifacts;      // latest per predecessor, lexicographic
  std::vector<std::pair<AgentId, std::string>> enrichment;  // attributed snippets

  /// Stable content digest (mock reasoning keys its output off this).
  std::string digest() const;
};

/// Bundle for `agent` as of the start of `round`: conversational memory and
/// artifact context only; enrichment starts empty.
ContextBundle assemble_context(const WorkflowGraph& g, const Store& store, const AgentId& agent,
                               int round);

/// Breadth-first huddle recruitment around a requester. Level 0 is the
/// requester's live predecessors; level d unions the predecessors and the
/// activated successors of level d-1, minus everything already taken and
/// always minus the requester.
struct HuddleSelection {
  AgentId requester;
  std::vector<std::vector<AgentId>> levels;  // each sorted; levels[0] may be empty
  std::vector<AgentId> convened;             // union of levels, sorted
  int depth_used = 0;
};

/// Select huddle participants. Expansion stops at d_max, on an empty level, or
/// as soon as the requester's declared needs (required_context stage tags) are
/// covered by the convened agents' stages (only when the list is non-empty).
HuddleSelection select_huddle_set(const WorkflowGraph& g, const AgentId& requester,
                                  const std::set<AgentId>& activated, int d_max);

/// Contribution returned by a participant's reasoning for one huddle turn.
struct HuddleContribution {
  std::string text;
  bool sufficiency = false;  // true: the group has enough context, close early
};

/// Callback seam the runtime implements so huddles can ask each participant's
/// reasoning function for a turn without this module depending on the runtime.
class HuddleContributor {
public:
  virtual ~HuddleContributor() = default;
  /// May throw; a throwing participant is skipped for that cycle.
  virtual HuddleContribution contribute(const AgentId& speaker, const AgentId& requester,
                                        int cycle, int round,
                                        const std::vector<std::pair<AgentId, std::string>>&
                                            transcript_so_far) = 0;
};

/// Result of a huddle session.
struct HuddleSession {
  AgentId requester;
  std::vector<AgentId> participants;  // requester + convened, sorted
  std::vector<Message> transcript;    // persisted huddle_turn messages, in order
  std::vector<std::pair<AgentId, std::string>> contributions;  // enrichment snippets
  int turns = 0;
  bool closed_by_sufficiency = false;
};

/// Run a multi-turn huddle: participants speak in lexicographic round-robin
/// order for at most turn_limit cycles; a sufficiency signal closes the
/// session after the signaling turn. Each turn persists as a huddle_turn
/// message and a trace event. Pre: selection.convened is non-empty.
HuddleSession run_huddle(const WorkflowGraph& g, Store& store, HuddleContributor& contributor,
                         const HuddleSelection& selection, int round, int turn_limit,
                         TraceLog& trace);

}  // namespace omnigraph
