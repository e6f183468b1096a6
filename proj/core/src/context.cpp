#include "omnigraph/context.hpp"

#include <algorithm>

#include "omnigraph/digest.hpp"

namespace omnigraph {

std::string ContextBundle::digest() const {
  std::uint64_t h = fnv1a64(owner);
  for (const Message& m : conversational) {
    h = fnv1a64(m.from, h);
    h = fnv1a64(m.to, h);
    h = fnv1a64(std::to_string(m.round), h);
    h = fnv1a64(std::to_string(m.seq), h);
    h = fnv1a64(to_string(m.kind), h);
    h = fnv1a64(m.body, h);
  }
  for (const Artifact& a : artifacts) {
    h = fnv1a64(a.producer, h);
    h = fnv1a64(to_string(a.label), h);
    h = fnv1a64(std::to_string(a.version), h);
    h = fnv1a64(std::to_string(a.round), h);
    h = fnv1a64(a.payload, h);
  }
  for (const auto& [speaker, text] : enrichment) {
    h = fnv1a64(speaker, h);
    h = fnv1a64(text, h);
  }
  return digest_hex(h);
}

ContextBundle assemble_context(const WorkflowGraph& g, const Store& store, const AgentId& agent,
                               int round) {
  ContextBundle bundle;
  bundle.owner = agent;
  ContextInputs inputs = store.context_inputs(g, agent, round);
  bundle.conversational = std::move(inputs.inbound);
  bundle.artifacts = std::move(inputs.artifacts);
  return bundle;
}

HuddleSelection select_huddle_set(const WorkflowGraph& g, const AgentId& requester,
                                  const std::set<AgentId>& activated, int d_max) {
  if (!g.has_agent(requester)) {
    throw LookupError("unknown huddle requester '" + requester + "'");
  }
  const std::vector<std::string>& needs = g.agent(requester).required_context;

  HuddleSelection sel;
  sel.requester = requester;

  std::set<AgentId> taken;  // union of emitted levels
  std::set<std::string> covered_stages;

  auto needs_met = [&]() {
    if (needs.empty()) return false;  // no declared needs: no structural early stop
    for (const std::string& tag : needs) {
      if (!covered_stages.count(tag)) return false;
    }
    return true;
  };

  std::vector<AgentId> level0 = predecessors(g, requester);
  level0.erase(std::remove(level0.begin(), level0.end(), requester), level0.end());
  for (const AgentId& id : level0) {
    taken.insert(id);
    covered_stages.insert(g.agent(id).stage);
  }
  sel.levels.push_back(level0);
  sel.depth_used = 0;

  while (static_cast<int>(sel.levels.size()) - 1 < d_max) {
    if (sel.levels.back().empty() || needs_met()) break;
    std::set<AgentId> next;
    for (const AgentId& j : sel.levels.back()) {
      for (const AgentId& p : predecessors(g, j)) next.insert(p);
      for (const AgentId& s : active_successors(g, j, activated)) next.insert(s);
    }
    next.erase(requester);
    for (const AgentId& id : taken) next.erase(id);
    if (next.empty()) break;
    std::vector<AgentId> level(next.begin(), next.end());
    for (const AgentId& id : level) {
      taken.insert(id);
      covered_stages.insert(g.agent(id).stage);
    }
    sel.levels.push_back(std::move(level));
    sel.depth_used = static_cast<int>(sel.levels.size()) - 1;
  }

  sel.convened.assign(taken.begin(), taken.end());
  return sel;
}

HuddleSession run_huddle(const WorkflowGraph& g, Store& store, HuddleContributor& contributor,
                         const HuddleSelection& selection, int round, int turn_limit,
                         TraceLog& trace) {
  (void)g;
  if (selection.convened.empty()) {
    throw Error("run_huddle requires a non-empty convened set");
  }
  HuddleSession session;
  session.requester = selection.requester;
  session.participants = selection.convened;
  session.participants.push_back(selection.requester);
  std::sort(session.participants.begin(), session.participants.end());

  trace.append(round, selection.requester, TraceEventType::huddle_open,
               {{"convened", selection.convened},
                {"depth", selection.depth_used},
                {"turn_limit", turn_limit}});

  // The requester's own turns are addressed to the lexicographically first
  // other participant so every message has two distinct endpoints.
  AgentId requester_peer;
  for (const AgentId& p : session.participants) {
    if (p != selection.requester) {
      requester_peer = p;
      break;
    }
  }

  bool closed = false;
  for (int cycle = 1; cycle <= turn_limit && !closed; ++cycle) {
    for (const AgentId& speaker : session.participants) {
      HuddleContribution turn;
      try {
        turn = contributor.contribute(speaker, selection.requester, cycle, round,
                                      session.contributions);
      } catch (const Error&) {
        continue;  // participant skipped for this cycle; session still closes
      }
      const AgentId& to =
          speaker == selection.requester ? requester_peer : selection.requester;
      store.ensure_agent(speaker);
      store.ensure_agent(to);
      Message msg =
          store.append_dialog(speaker, to, round, turn.text, MessageKind::huddle_turn);
      session.transcript.push_back(msg);
      session.contributions.emplace_back(speaker, turn.text);
      session.turns += 1;
      trace.append(round, speaker, TraceEventType::huddle_turn,
                   {{"to", to},
                    {"kind", to_string(MessageKind::huddle_turn)},
                    {"body", msg.body},
                    {"channel_seq", msg.seq}});
      if (turn.sufficiency) {
        session.closed_by_sufficiency = true;
        closed = true;
        break;
      }
    }
  }

  trace.append(round, selection.requester, TraceEventType::huddle_close,
               {{"turns", session.turns},
                {"sufficiency", session.closed_by_sufficiency}});
  return session;
}

}  // namespace omnigraph
