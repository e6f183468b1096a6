#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "omnigraph/errors.hpp"
#include "omnigraph/ext/json.hpp"
#include "omnigraph/graph.hpp"

namespace omnigraph {

enum class MessageKind { instruction, huddle_turn, revision_request };

const char* to_string(MessageKind k);
MessageKind message_kind_from_string(const std::string& s);

/// One dialog message. `seq` is strictly increasing per (from, to) channel,
/// starting at 1.
struct Message {
  AgentId from;
  AgentId to;
  int round = 0;
  std::uint64_t seq = 0;
  std::string body;
  MessageKind kind = MessageKind::instruction;

  nlohmann::json to_json() const;
};

enum class ArtifactLabel { script, storyboard, clip, audio, cut, other };

const char* to_string(ArtifactLabel l);
ArtifactLabel artifact_label_from_string(const std::string& s);

/// Versioned output of one agent execution. Versions start at 1 and increment
/// per (producer, label); prior versions are retained.
struct Artifact {
  AgentId producer;
  int round = 0;
  ArtifactLabel label = ArtifactLabel::other;
  std::string payload;
  int version = 1;

  /// Normative dump filename: <producer>.<label>.v<version>
  std::string dump_name() const;
  nlohmann::json to_json() const;
};

/// One execution attempt: the round it ran in and a 16-hex content digest of
/// the produced artifact payload, or "failed".
struct AttemptRecord {
  int round = 0;
  std::string outcome;
};

/// Private per-agent memory: every message the agent sent or received (in
/// append order), the set of counterparties, and the attempt log.
struct AgentMemory {
  AgentId owner;
  std::vector<Message> dialogs;
  std::set<AgentId> contact_set;
  std::vector<AttemptRecord> attempt_log;
};

/// Raw material for a context bundle: inbound messages and the latest artifact
/// of each live predecessor, both restricted to rounds before `round`.
struct ContextInputs {
  std::vector<Message> inbound;     // messages addressed to the agent, append order
  std::vector<Artifact> artifacts;  // latest per producer, lexicographic by producer
};

/// Blackboard state shared by the scheduler and the agents. Appends are
/// serialized by an internal mutex so concurrently executing agents within a
/// round cannot interleave partial writes.
class Store {
public:
  Store() = default;
  Store(const Store& other);
  Store(Store&& other) noexcept;
  Store& operator=(const Store& other);
  Store& operator=(Store&& other) noexcept;

  void ensure_agent(const AgentId& id);
  bool has_agent(const AgentId& id) const;
  const AgentMemory& memory(const AgentId& id) const;

  /// Append a message to both endpoints' memories and stamp its channel seq.
  Message append_dialog(const AgentId& from, const AgentId& to, int round, std::string body,
                        MessageKind kind);

  /// Store a new artifact version for (producer, label).
  const Artifact& append_artifact(const AgentId& producer, int round, ArtifactLabel label,
                                  std::string payload);

  void record_attempt(const AgentId& id, int round, std::string outcome);
  void set_activated(const AgentId& id);
  bool activated(const AgentId& id) const;
  std::set<AgentId> activated_set() const;

  const std::vector<Artifact>& artifacts() const { return artifacts_; }
  std::vector<Artifact> artifact_history(const AgentId& producer) const;
  const Artifact* latest_artifact(const AgentId& producer, int before_round = -1) const;
  bool has_artifact_before(const AgentId& producer, int round) const;

  /// Inbound dialog + latest predecessor artifacts visible to `agent` at the
  /// start of `round` (i.e. everything stamped with an earlier round).
  ContextInputs context_inputs(const WorkflowGraph& g, const AgentId& agent, int round) const;

  /// Deterministic full dump used for replay equality checks.
  nlohmann::json canonical_json() const;

private:
  mutable std::mutex mu_;
  std::map<AgentId, AgentMemory> memories_;
  std::vector<Artifact> artifacts_;
  std::map<std::pair<AgentId, std::string>, int> version_counters_;
  std::map<std::pair<AgentId, AgentId>, std::uint64_t> channel_seq_;
  std::set<AgentId> activated_;
};

// ---------------------------------------------------------------------------
// Trace log
// ---------------------------------------------------------------------------

enum class TraceEventType {
  activate,
  emit_artifact,
  send_instruction,
  huddle_open,
  huddle_turn,
  huddle_close,
  reverse_traverse,
  edge_pruned,
  workflow_done,
};

const char* to_string(TraceEventType t);
TraceEventType trace_event_from_string(const std::string& s);

/// One trace record. Serialized with exactly the fields
/// {seq, round, agent, event, payload}; seq is global and gapless from 1.
struct TraceEvent {
  std::uint64_t seq = 0;
  int round = 0;
  AgentId agent;  // empty for workflow_done
  TraceEventType event = TraceEventType::workflow_done;
  nlohmann::json payload;
};

/// Append-only trace with JSONL persistence. Appends are serialized so seq
/// gaplessness holds even with concurrent writers.
class TraceLog {
public:
  TraceLog() = default;
  TraceLog(const TraceLog& other);
  TraceLog(TraceLog&& other) noexcept;
  TraceLog& operator=(const TraceLog& other);
  TraceLog& operator=(TraceLog&& other) noexcept;

  std::uint64_t append(int round, const AgentId& agent, TraceEventType event,
                       nlohmann::json payload);
  const std::vector<TraceEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }

  void write_jsonl(std::ostream& out) const;
  std::string to_jsonl() const;

  /// Parse and verify a trace. Throws TraceCorruption naming the offending
  /// seq on gaps, duplicates, or malformed records.
  static TraceLog load_jsonl(std::istream& in);
  static TraceLog load_jsonl_text(const std::string& text);

private:
  mutable std::mutex mu_;
  std::vector<TraceEvent> events_;
};

/// Rebuild the final store state from a trace. Every mutation a run performs
/// is derivable from the event stream; the result compares structurally equal
/// (canonical_json) to the live store the run produced.
Store replay_trace(const TraceLog& trace);

}  // namespace omnigraph
