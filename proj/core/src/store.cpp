#include "omnigraph/store.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "omnigraph/digest.hpp"

namespace omnigraph {

const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::instruction: return "instruction";
    case MessageKind::huddle_turn: return "huddle_turn";
    case MessageKind::revision_request: return "revision_request";
  }
  return "instruction";
}

MessageKind message_kind_from_string(const std::string& s) {
  if (s == "instruction") return MessageKind::instruction;
  if (s == "huddle_turn") return MessageKind::huddle_turn;
  if (s == "revision_request") return MessageKind::revision_request;
  throw LookupError("unknown message kind '" + s + "'");
}

const char* to_string(ArtifactLabel l) {
  switch (l) {
    case ArtifactLabel::script: return "script";
    case ArtifactLabel::storyboard: return "storyboard";
    case ArtifactLabel::clip: return "clip";
    case ArtifactLabel::audio: return "audio";
    case ArtifactLabel::cut: return "cut";
    case ArtifactLabel::other: return "other";
  }
  return "other";
}

ArtifactLabel artifact_label_from_string(const std::string& s) {
  if (s == "script") return ArtifactLabel::script;
  if (s == "storyboard") return ArtifactLabel::storyboard;
  if (s == "clip") return ArtifactLabel::clip;
  if (s == "audio") return ArtifactLabel::audio;
  if (s == "cut") return ArtifactLabel::cut;
  if (s == "other") return ArtifactLabel::other;
  throw LookupError("unknown artifact label '" + s + "'");
}

nlohmann::json Message::to_json() const {
  return {{"from", from}, {"to", to},     {"round", round},
          {"seq", seq},   {"body", body}, {"kind", to_string(kind)}};
}

std::string Artifact::dump_name() const {
  return producer + "." + to_string(label) + ".v" + std::to_string(version);
}

nlohmann::json Artifact::to_json() const {
  return {{"producer", producer},
          {"round", round},
          {"label", to_string(label)},
          {"payload", payload},
          {"version", version}};
}

Store::Store(const Store& other) {
  std::lock_guard<std::mutex> lock(other.mu_);
  memories_ = other.memories_;
  artifacts_ = other.artifacts_;
  version_counters_ = other.version_counters_;
  channel_seq_ = other.channel_seq_;
  activated_ = other.activated_;
}

Store::Store(Store&& other) noexcept {
  std::lock_guard<std::mutex> lock(other.mu_);
  memories_ = std::move(other.memories_);
  artifacts_ = std::move(other.artifacts_);
  version_counters_ = std::move(other.version_counters_);
  channel_seq_ = std::move(other.channel_seq_);
  activated_ = std::move(other.activated_);
}

Store& Store::operator=(const Store& other) {
  if (this != &other) *this = Store(other);
  return *this;
}

Store& Store::operator=(Store&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mu_, other.mu_);
    memories_ = std::move(other.memories_);
    artifacts_ = std::move(other.artifacts_);
    version_counters_ = std::move(other.version_counters_);
    channel_seq_ = std::move(other.channel_seq_);
    activated_ = std::move(other.activated_);
  }
  return *this;
}

void Store::ensure_agent(const AgentId& id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = memories_.try_emplace(id);
  if (inserted) it->second.owner = id;
}

bool Store::has_agent(const AgentId& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return memories_.count(id) != 0;
}

const AgentMemory& Store::memory(const AgentId& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = memories_.find(id);
  if (it == memories_.end()) {
    throw LookupError("no memory for agent '" + id + "'");
  }
  return it->second;
}

Message Store::append_dialog(const AgentId& from, const AgentId& to, int round, std::string body,
                             MessageKind kind) {
  std::lock_guard<std::mutex> lock(mu_);
  auto from_it = memories_.find(from);
  auto to_it = memories_.find(to);
  if (from_it == memories_.end() || to_it == memories_.end()) {
    throw LookupError("append_dialog endpoints must exist: '" + from + "' -> '" + to + "'");
  }
  Message msg;
  msg.from = from;
  msg.to = to;
  msg.round = round;
  msg.seq = ++channel_seq_[{from, to}];
  msg.body = std::move(body);
  msg.kind = kind;
  from_it->second.dialogs.push_back(msg);
  from_it->second.contact_set.insert(to);
  to_it->second.dialogs.push_back(msg);
  to_it->second.contact_set.insert(from);
  return msg;
}

const Artifact& Store::append_artifact(const AgentId& producer, int round, ArtifactLabel label,
                                       std::string payload) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!memories_.count(producer)) {
    throw LookupError("unknown producer '" + producer + "'");
  }
  Artifact a;
  a.producer = producer;
  a.round = round;
  a.label = label;
  a.payload = std::move(payload);
  a.version = ++version_counters_[{producer, to_string(label)}];
  artifacts_.push_back(std::move(a));
  return artifacts_.back();
}

void Store::record_attempt(const AgentId& id, int round, std::string outcome) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = memories_.find(id);
  if (it == memories_.end()) {
    throw LookupError("unknown agent '" + id + "'");
  }
  it->second.attempt_log.push_back({round, std::move(outcome)});
}

void Store::set_activated(const AgentId& id) {
  std::lock_guard<std::mutex> lock(mu_);
  activated_.insert(id);
}

bool Store::activated(const AgentId& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return activated_.count(id) != 0;
}

std::set<AgentId> Store::activated_set() const {
  std::lock_guard<std::mutex> lock(mu_);
  return activated_;
}

std::vector<Artifact> Store::artifact_history(const AgentId& producer) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<Artifact> out;
  for (const Artifact& a : artifacts_) {
    if (a.producer == producer) out.push_back(a);
  }
  return out;
}

const Artifact* Store::latest_artifact(const AgentId& producer, int before_round) const {
  std::lock_guard<std::mutex> lock(mu_);
  const Artifact* found = nullptr;
  for (const Artifact& a : artifacts_) {
    if (a.producer != producer) continue;
    if (before_round >= 0 && a.round >= before_round) continue;
    found = &a;  // append order: the last hit is the latest
  }
  return found;
}

bool Store::has_artifact_before(const AgentId& producer, int round) const {
  return latest_artifact(producer, round) != nullptr;
}

ContextInputs Store::context_inputs(const WorkflowGraph& g, const AgentId& agent,
                                    int round) const {
  ContextInputs out;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memories_.find(agent);
    if (it == memories_.end()) {
      throw LookupError("no memory for agent '" + agent + "'");
    }
    for (const Message& m : it->second.dialogs) {
      if (m.to == agent && m.round < round) out.inbound.push_back(m);
    }
  }
  for (const AgentId& pred : predecessors(g, agent)) {
    if (const Artifact* a = latest_artifact(pred, round)) {
      out.artifacts.push_back(*a);
    }
  }
  return out;
}

nlohmann::json Store::canonical_json() const {
  std::lock_guard<std::mutex> lock(mu_);
  nlohmann::json memories = nlohmann::json::object();
  for (const auto& [owner, mem] : memories_) {
    nlohmann::json dialogs = nlohmann::json::array();
    for (const Message& m : mem.dialogs) dialogs.push_back(m.to_json());
    nlohmann::json attempts = nlohmann::json::array();
    for (const AttemptRecord& a : mem.attempt_log) {
      attempts.push_back({{"round", a.round}, {"outcome", a.outcome}});
    }
    memories[owner] = {{"dialogs", dialogs},
                       {"contact_set", mem.contact_set},
                       {"attempt_log", attempts}};
  }
  nlohmann::json artifacts = nlohmann::json::array();
  for (const Artifact& a : artifacts_) artifacts.push_back(a.to_json());
  return {{"memories", memories}, {"artifacts", artifacts}, {"activated", activated_}};
}

// ---------------------------------------------------------------------------
// Trace log
// ---------------------------------------------------------------------------

const char* to_string(TraceEventType t) {
  switch (t) {
    case TraceEventType::activate: return "activate";
    case TraceEventType::emit_artifact: return "emit_artifact";
    case TraceEventType::send_instruction: return "send_instruction";
    case TraceEventType::huddle_open: return "huddle_open";
    case TraceEventType::huddle_turn: return "huddle_turn";
    case TraceEventType::huddle_close: return "huddle_close";
    case TraceEventType::reverse_traverse: return "reverse_traverse";
    case TraceEventType::edge_pruned: return "edge_pruned";
    case TraceEventType::workflow_done: return "workflow_done";
  }
  return "workflow_done";
}

TraceEventType trace_event_from_string(const std::string& s) {
  if (s == "activate") return TraceEventType::activate;
  if (s == "emit_artifact") return TraceEventType::emit_artifact;
  if (s == "send_instruction") return TraceEventType::send_instruction;
  if (s == "huddle_open") return TraceEventType::huddle_open;
  if (s == "huddle_turn") return TraceEventType::huddle_turn;
  if (s == "huddle_close") return TraceEventType::huddle_close;
  if (s == "reverse_traverse") return TraceEventType::reverse_traverse;
  if (s == "edge_pruned") return TraceEventType::edge_pruned;
  if (s == "workflow_done") return TraceEventType::workflow_done;
  throw LookupError("unknown trace event '" + s + "'");
}

TraceLog::TraceLog(const TraceLog& other) {
  std::lock_guard<std::mutex> lock(other.mu_);
  events_ = other.events_;
}

TraceLog::TraceLog(TraceLog&& other) noexcept {
  std::lock_guard<std::mutex> lock(other.mu_);
  events_ = std::move(other.events_);
}

TraceLog& TraceLog::operator=(const TraceLog& other) {
  if (this != &other) *this = TraceLog(other);
  return *this;
}

TraceLog& TraceLog::operator=(TraceLog&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mu_, other.mu_);
    events_ = std::move(other.events_);
  }
  return *this;
}

std::uint64_t TraceLog::append(int round, const AgentId& agent, TraceEventType event,
                               nlohmann::json payload) {
  std::lock_guard<std::mutex> lock(mu_);
  TraceEvent e;
  e.seq = events_.size() + 1;
  e.round = round;
  e.agent = agent;
  e.event = event;
  e.payload = std::move(payload);
  events_.push_back(std::move(e));
  return events_.back().seq;
}

void TraceLog::write_jsonl(std::ostream& out) const {
  std::lock_guard<std::mutex> lock(mu_);
  for (const TraceEvent& e : events_) {
    nlohmann::json j{{"seq", e.seq},
                     {"round", e.round},
                     {"agent", e.agent},
                     {"event", to_string(e.event)},
                     {"payload", e.payload}};
    out << j.dump() << "\n";
  }
}

std::string TraceLog::to_jsonl() const {
  std::ostringstream out;
  write_jsonl(out);
  return out.str();
}

TraceLog TraceLog::load_jsonl(std::istream& in) {
  TraceLog log;
  std::string line;
  std::uint64_t expected = 1;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw TraceCorruption(std::string("malformed trace line ") + std::to_string(line_no) + ": " +
                                e.what(),
                            expected);
    }
    if (!j.is_object() || !j.contains("seq") || !j.contains("round") || !j.contains("agent") ||
        !j.contains("event") || !j.contains("payload") || j.size() != 5) {
      throw TraceCorruption("trace record must have exactly {seq, round, agent, event, payload}",
                            expected);
    }
    TraceEvent e;
    if (!j["seq"].is_number_unsigned() && !j["seq"].is_number_integer()) {
      throw TraceCorruption("non-integer seq", expected);
    }
    e.seq = j["seq"].get<std::uint64_t>();
    if (e.seq != expected) {
      throw TraceCorruption(e.seq < expected ? "duplicate or out-of-order seq" : "gap in seq",
                            e.seq);
    }
    if (!j["round"].is_number_integer() && !j["round"].is_number_unsigned()) {
      throw TraceCorruption("non-integer round", e.seq);
    }
    e.round = j["round"].get<int>();
    if (!j["agent"].is_string()) throw TraceCorruption("non-string agent", e.seq);
    e.agent = j["agent"].get<std::string>();
    if (!j["event"].is_string()) throw TraceCorruption("non-string event", e.seq);
    try {
      e.event = trace_event_from_string(j["event"].get<std::string>());
    } catch (const LookupError& err) {
      throw TraceCorruption(err.what(), e.seq);
    }
    e.payload = j["payload"];
    log.events_.push_back(std::move(e));
    ++expected;
  }
  return log;
}

TraceLog TraceLog::load_jsonl_text(const std::string& text) {
  std::istringstream in(text);
  return load_jsonl(in);
}

Store replay_trace(const TraceLog& trace) {
  Store store;
  struct PendingAttempt {
    AgentId agent;
    int round;
  };
  std::vector<PendingAttempt> attempts;
  std::map<std::pair<AgentId, int>, std::string> outcome_digest;

  auto need = [](const nlohmann::json& payload, const char* key, std::uint64_t seq)
      -> const nlohmann::json& {
    auto it = payload.find(key);
    if (it == payload.end()) {
      throw TraceCorruption(std::string("payload missing '") + key + "'", seq);
    }
    return *it;
  };

  for (const TraceEvent& e : trace.events()) {
    switch (e.event) {
      case TraceEventType::activate: {
        store.ensure_agent(e.agent);
        store.set_activated(e.agent);
        attempts.push_back({e.agent, e.round});
        break;
      }
      case TraceEventType::emit_artifact: {
        store.ensure_agent(e.agent);
        ArtifactLabel label =
            artifact_label_from_string(need(e.payload, "label", e.seq).get<std::string>());
        std::string payload = need(e.payload, "payload", e.seq).get<std::string>();
        int version = need(e.payload, "version", e.seq).get<int>();
        const Artifact& stored = store.append_artifact(e.agent, e.round, label, payload);
        if (stored.version != version) {
          throw TraceCorruption("artifact version mismatch during replay", e.seq);
        }
        outcome_digest[{e.agent, e.round}] = digest_hex(stored.payload);
        break;
      }
      case TraceEventType::send_instruction:
      case TraceEventType::huddle_turn: {
        AgentId to = need(e.payload, "to", e.seq).get<std::string>();
        store.ensure_agent(e.agent);
        store.ensure_agent(to);
        MessageKind kind =
            message_kind_from_string(need(e.payload, "kind", e.seq).get<std::string>());
        Message m = store.append_dialog(e.agent, to, e.round,
                                        need(e.payload, "body", e.seq).get<std::string>(), kind);
        std::uint64_t seq = need(e.payload, "channel_seq", e.seq).get<std::uint64_t>();
        if (m.seq != seq) {
          throw TraceCorruption("channel seq mismatch during replay", e.seq);
        }
        break;
      }
      case TraceEventType::huddle_open:
      case TraceEventType::huddle_close:
      case TraceEventType::reverse_traverse:
      case TraceEventType::edge_pruned:
      case TraceEventType::workflow_done:
        break;  // no store-visible state
    }
  }
  for (const PendingAttempt& a : attempts) {
    auto it = outcome_digest.find({a.agent, a.round});
    store.record_attempt(a.agent, a.round, it == outcome_digest.end() ? "failed" : it->second);
  }
  return store;
}

}  // namespace omnigraph
