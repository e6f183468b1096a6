#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "omnigraph/digest.hpp"
#include "omnigraph/store.hpp"

using namespace omnigraph;
using namespace testutil;
using nlohmann::json;

TEST_CASE("digest: fnv1a64 chains and renders as 16 lowercase hex digits") {
  CHECK(digest_hex("").size() == 16);
  CHECK(digest_hex("") == "cbf29ce484222325");  // offset basis, nothing folded in
  CHECK(digest_hex("a") != digest_hex("b"));
  // Chaining two pieces equals hashing the concatenation.
  CHECK(fnv1a64("xy", fnv1a64("ab")) == fnv1a64("abxy"));
}

TEST_CASE("store: ensure_agent is idempotent and memory() is guarded") {
  Store store;
  CHECK_FALSE(store.has_agent("a"));
  CHECK_THROWS_AS(store.memory("a"), LookupError);
  store.ensure_agent("a");
  store.ensure_agent("a");
  CHECK(store.has_agent("a"));
  CHECK(store.memory("a").owner == "a");
  CHECK(store.memory("a").dialogs.empty());
}

TEST_CASE("store: append_dialog writes both memories and stamps channel seq") {
  Store store;
  store.ensure_agent("a");
  store.ensure_agent("b");
  store.ensure_agent("c");

  Message m1 = store.append_dialog("a", "b", 1, "first", MessageKind::instruction);
  Message m2 = store.append_dialog("a", "b", 2, "second", MessageKind::instruction);
  Message m3 = store.append_dialog("b", "a", 2, "reply", MessageKind::revision_request);
  Message m4 = store.append_dialog("a", "c", 2, "aside", MessageKind::huddle_turn);

  // Per-channel sequence restarts per (from, to) ordered pair.
  CHECK(m1.seq == 1);
  CHECK(m2.seq == 2);
  CHECK(m3.seq == 1);
  CHECK(m4.seq == 1);

  CHECK(store.memory("a").dialogs.size() == 4);  // sent three, received one
  CHECK(store.memory("b").dialogs.size() == 3);
  CHECK(store.memory("c").dialogs.size() == 1);
  CHECK(store.memory("a").contact_set == std::set<AgentId>{"b", "c"});
  CHECK(store.memory("c").contact_set == std::set<AgentId>{"a"});

  // Messages are private to their endpoints: c never sees a<->b traffic.
  for (const Message& m : store.memory("c").dialogs) {
    CHECK((m.from == "c" || m.to == "c"));
  }

  CHECK_THROWS_AS(store.append_dialog("a", "ghost", 3, "x", MessageKind::instruction),
                  LookupError);
  CHECK_THROWS_AS(store.append_dialog("ghost", "a", 3, "x", MessageKind::instruction),
                  LookupError);
}

TEST_CASE("store: artifact versions count per (producer, label)") {
  Store store;
  store.ensure_agent("w");
  // Copies: the returned reference is only stable until the next append.
  const Artifact v1 = store.append_artifact("w", 1, ArtifactLabel::script, "draft one");
  const Artifact v2 = store.append_artifact("w", 3, ArtifactLabel::script, "draft two");
  const Artifact other = store.append_artifact("w", 3, ArtifactLabel::storyboard, "frames");

  CHECK(v1.version == 1);
  CHECK(v2.version == 2);
  CHECK(other.version == 1);
  CHECK(v2.dump_name() == "w.script.v2");
  CHECK(other.dump_name() == "w.storyboard.v1");

  CHECK(store.artifact_history("w").size() == 3);
  REQUIRE(store.latest_artifact("w") != nullptr);
  CHECK(store.latest_artifact("w")->payload == "frames");

  // before_round filters on the artifact's round stamp.
  REQUIRE(store.latest_artifact("w", 3) != nullptr);
  CHECK(store.latest_artifact("w", 3)->payload == "draft one");
  CHECK(store.latest_artifact("w", 1) == nullptr);
  CHECK(store.has_artifact_before("w", 2));
  CHECK_FALSE(store.has_artifact_before("w", 1));
}

TEST_CASE("store: context_inputs returns earlier-round inbound and predecessor artifacts") {
  json doc = workflow_json({agent_json("a"), agent_json("b"), agent_json("c")},
                           {edge_json("a", "c"), edge_json("b", "c")});
  WorkflowGraph g = graph_from(doc);

  Store store;
  for (const char* id : {"a", "b", "c"}) store.ensure_agent(id);
  store.append_artifact("a", 1, ArtifactLabel::other, "a r1");
  store.append_artifact("a", 2, ArtifactLabel::other, "a r2");
  store.append_artifact("b", 2, ArtifactLabel::other, "b r2");
  store.append_dialog("a", "c", 1, "early", MessageKind::instruction);
  store.append_dialog("b", "c", 2, "late", MessageKind::instruction);
  store.append_dialog("a", "b", 1, "not for c", MessageKind::instruction);

  ContextInputs at2 = store.context_inputs(g, "c", 2);
  REQUIRE(at2.inbound.size() == 1);
  CHECK(at2.inbound[0].body == "early");
  REQUIRE(at2.artifacts.size() == 1);  // only a produced before round 2
  CHECK(at2.artifacts[0].payload == "a r1");

  ContextInputs at3 = store.context_inputs(g, "c", 3);
  CHECK(at3.inbound.size() == 2);
  REQUIRE(at3.artifacts.size() == 2);
  CHECK(at3.artifacts[0].producer == "a");  // lexicographic by producer
  CHECK(at3.artifacts[0].payload == "a r2");  // latest version before the round
  CHECK(at3.artifacts[1].producer == "b");
}

TEST_CASE("store: attempt log and activation flags") {
  Store store;
  store.ensure_agent("a");
  CHECK_FALSE(store.activated("a"));
  store.set_activated("a");
  CHECK(store.activated("a"));
  CHECK(store.activated_set() == std::set<AgentId>{"a"});

  store.record_attempt("a", 1, "failed");
  store.record_attempt("a", 4, digest_hex("payload"));
  REQUIRE(store.memory("a").attempt_log.size() == 2);
  CHECK(store.memory("a").attempt_log[0].outcome == "failed");
  CHECK(store.memory("a").attempt_log[1].round == 4);
}

TEST_CASE("trace: events serialize with exactly the five normative fields") {
  TraceLog trace;
  trace.append(1, "a", TraceEventType::activate, {{"attempt", 1}});
  trace.append(1, "a", TraceEventType::emit_artifact,
               {{"label", "script"}, {"version", 1}, {"payload", "x"}});

  std::string text = trace.to_jsonl();
  std::istringstream lines(text);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    json row = json::parse(line);
    CHECK(row.size() == 5);
    CHECK(row.contains("seq"));
    CHECK(row.contains("round"));
    CHECK(row.contains("agent"));
    CHECK(row.contains("event"));
    CHECK(row.contains("payload"));
    ++count;
  }
  CHECK(count == 2);
  CHECK(trace.events()[0].seq == 1);
  CHECK(trace.events()[1].seq == 2);
}

TEST_CASE("trace: load_jsonl round-trips and rejects corruption by seq") {
  TraceLog trace;
  trace.append(1, "a", TraceEventType::activate, {{"attempt", 1}});
  trace.append(2, "b", TraceEventType::activate, {{"attempt", 1}});
  trace.append(2, "", TraceEventType::workflow_done, {{"status", "completed"}, {"rounds", 2}});
  const std::string text = trace.to_jsonl();

  TraceLog loaded = TraceLog::load_jsonl_text(text);
  CHECK(loaded.to_jsonl() == text);
  CHECK(loaded.size() == 3);

  SUBCASE("seq gap") {
    std::string broken = text;
    std::size_t pos = broken.find("\"seq\":2");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, 7, "\"seq\":9");
    CHECK_THROWS_AS(TraceLog::load_jsonl_text(broken), TraceCorruption);
  }
  SUBCASE("unknown event name") {
    std::string broken = text;
    std::size_t pos = broken.find("activate");
    broken.replace(pos, 8, "detonate");
    CHECK_THROWS_AS(TraceLog::load_jsonl_text(broken), TraceCorruption);
  }
  SUBCASE("extra field") {
    std::string broken = text;
    std::size_t pos = broken.find("{\"agent\"");
    broken.insert(pos + 1, "\"bonus\":1,");
    CHECK_THROWS_AS(TraceLog::load_jsonl_text(broken), TraceCorruption);
  }
  SUBCASE("garbage line") {
    CHECK_THROWS_AS(TraceLog::load_jsonl_text(text + "not json\n"), TraceCorruption);
  }
  SUBCASE("blank lines are tolerated") {
    CHECK_NOTHROW(TraceLog::load_jsonl_text("\n" + text + "\n\n"));
  }
}

TEST_CASE("trace: corruption errors carry the offending seq") {
  try {
    TraceLog::load_jsonl_text("{\"agent\":\"\",\"event\":\"activate\",\"payload\":{},"
                              "\"round\":1,\"seq\":5}\n");
    FAIL("expected TraceCorruption");
  } catch (const TraceCorruption& e) {
    CHECK(e.seq() == 5);
    CHECK(std::string(e.what()).find("seq") != std::string::npos);
  }
}

TEST_CASE("replay_trace rebuilds dialog, artifacts and attempts from events") {
  TraceLog trace;
  trace.append(1, "a", TraceEventType::activate, {{"attempt", 1}});
  trace.append(1, "a", TraceEventType::emit_artifact,
               {{"label", "script"}, {"version", 1}, {"payload", "draft"}});
  trace.append(1, "a", TraceEventType::send_instruction,
               {{"to", "b"}, {"kind", "instruction"}, {"body", "go"}, {"channel_seq", 1}});
  trace.append(2, "b", TraceEventType::activate, {{"attempt", 1}});
  trace.append(2, "b", TraceEventType::emit_artifact,
               {{"label", "other"}, {"version", 1}, {"payload", "done"}});
  trace.append(2, "", TraceEventType::workflow_done, {{"status", "completed"}, {"rounds", 2}});

  Store replayed = replay_trace(trace);
  CHECK(replayed.has_agent("a"));
  CHECK(replayed.has_agent("b"));
  CHECK(replayed.artifacts().size() == 2);
  CHECK(replayed.memory("a").dialogs.size() == 1);
  CHECK(replayed.memory("b").dialogs.size() == 1);
  REQUIRE(replayed.memory("a").attempt_log.size() == 1);
  CHECK(replayed.memory("a").attempt_log[0].outcome == digest_hex("draft"));

  SUBCASE("an activation without a same-round artifact records a failed attempt") {
    TraceLog failing;
    failing.append(1, "a", TraceEventType::activate, {{"attempt", 1}});
    failing.append(1, "", TraceEventType::workflow_done,
                   {{"status", "completed"}, {"rounds", 1}});
    Store s = replay_trace(failing);
    REQUIRE(s.memory("a").attempt_log.size() == 1);
    CHECK(s.memory("a").attempt_log[0].outcome == "failed");
  }

  SUBCASE("version mismatches are corruption") {
    TraceLog bad;
    bad.append(1, "a", TraceEventType::activate, {{"attempt", 1}});
    bad.append(1, "a", TraceEventType::emit_artifact,
               {{"label", "script"}, {"version", 3}, {"payload", "draft"}});
    CHECK_THROWS_AS(replay_trace(bad), TraceCorruption);
  }

  SUBCASE("channel_seq mismatches are corruption") {
    TraceLog bad;
    bad.append(1, "a", TraceEventType::activate, {{"attempt", 1}});
    bad.append(1, "a", TraceEventType::emit_artifact,
               {{"label", "script"}, {"version", 1}, {"payload", "draft"}});
    bad.append(1, "a", TraceEventType::send_instruction,
               {{"to", "b"}, {"kind", "instruction"}, {"body", "go"}, {"channel_seq", 2}});
    CHECK_THROWS_AS(replay_trace(bad), TraceCorruption);
  }
}

TEST_CASE("store and trace copies detach from their source") {
  Store store;
  store.ensure_agent("a");
  Store copy = store;
  copy.ensure_agent("b");
  CHECK_FALSE(store.has_agent("b"));
  CHECK(copy.has_agent("a"));

  TraceLog trace;
  trace.append(1, "a", TraceEventType::activate, {{"attempt", 1}});
  TraceLog tcopy = trace;
  tcopy.append(1, "b", TraceEventType::activate, {{"attempt", 1}});
  CHECK(trace.size() == 1);
  CHECK(tcopy.size() == 2);
}
