#include "omnigraph/runtime.hpp"

#include <algorithm>
#include <cstdlib>

#include "httplib.h"
#include "omnigraph/digest.hpp"

namespace omnigraph {

const char* to_string(Modality m) {
  switch (m) {
    case Modality::text: return "text";
    case Modality::image: return "image";
    case Modality::video: return "video";
    case Modality::audio: return "audio";
    case Modality::video_understanding: return "video_understanding";
  }
  return "text";
}

Modality modality_from_string(const std::string& s) {
  if (s == "text") return Modality::text;
  if (s == "image") return Modality::image;
  if (s == "video") return Modality::video;
  if (s == "audio") return Modality::audio;
  if (s == "video_understanding") return Modality::video_understanding;
  throw LookupError("unknown modality '" + s + "'");
}

nlohmann::json AdapterRequest::to_json() const {
  return {{"modality", to_string(modality)}, {"prompt", prompt}, {"params", params},
          {"seed", seed}};
}

namespace {

std::string frame(const std::string& json_text) {
  return std::to_string(json_text.size()) + "\n" + json_text;
}

std::string unframe(const std::string& body) {
  auto nl = body.find('\n');
  if (nl == std::string::npos) {
    throw TransportError(TransportError::Kind::protocol, "response missing length prefix");
  }
  std::size_t declared = 0;
  try {
    declared = std::stoull(body.substr(0, nl));
  } catch (const std::exception&) {
    throw TransportError(TransportError::Kind::protocol, "non-numeric length prefix");
  }
  std::string json_text = body.substr(nl + 1);
  if (json_text.size() != declared) {
    throw TransportError(TransportError::Kind::protocol,
                         "length prefix mismatch: declared " + std::to_string(declared) +
                             ", got " + std::to_string(json_text.size()));
  }
  return json_text;
}

}  // namespace

std::string backend_adapter_call(const std::string& url, const AdapterRequest& request,
                                 int timeout_ms) {
  // Split "<scheme>://<host>[:port]</path...>" into client base and path.
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw TransportError(TransportError::Kind::protocol, "backend url must include a scheme");
  }
  auto path_start = url.find('/', scheme_end + 3);
  std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(base);
  client.set_connection_timeout(0, timeout_ms * 1000);
  client.set_read_timeout(0, timeout_ms * 1000);
  client.set_write_timeout(0, timeout_ms * 1000);

  httplib::Result res = client.Post(path, frame(request.to_json().dump()), "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write) {
      throw TransportError(TransportError::Kind::timeout,
                           "backend timeout: " + httplib::to_string(err));
    }
    throw TransportError(TransportError::Kind::unreachable,
                         "backend unreachable: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError(TransportError::Kind::http_status,
                         "backend returned status " + std::to_string(res->status));
  }
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(unframe(res->body));
  } catch (const nlohmann::json::parse_error& e) {
    throw TransportError(TransportError::Kind::protocol,
                         std::string("backend reply is not JSON: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("payload") || !reply["payload"].is_string()) {
    throw TransportError(TransportError::Kind::protocol,
                         "backend reply missing string 'payload'");
  }
  return reply["payload"].get<std::string>();
}

std::string mock_tool_payload(const AdapterRequest& request) {
  return std::string("mock:") + to_string(request.modality) + ":" +
         digest_hex(request.to_json().dump());
}

HuddleContribution Reasoning::contribute(const HuddleInvite& invite, Registry& registry) {
  std::uint64_t h = fnv1a64(invite.speaker);
  h = fnv1a64(invite.requester, h);
  h = fnv1a64(std::to_string(invite.cycle), h);
  h = fnv1a64(std::to_string(invite.round), h);
  h = fnv1a64(std::to_string(registry.seed()), h);
  if (invite.transcript) {
    for (const auto& [speaker, text] : *invite.transcript) {
      h = fnv1a64(speaker, h);
      h = fnv1a64(text, h);
    }
  }
  HuddleContribution out;
  out.text = invite.speaker + " notes for " + invite.requester + " c" +
             std::to_string(invite.cycle) + " " + digest_hex(h).substr(0, 12);
  return out;
}

void Registry::register_tool(ToolDescriptor tool) {
  if (tools_.count(tool.name)) {
    throw LookupError("tool '" + tool.name + "' already registered");
  }
  tools_.emplace(tool.name, std::move(tool));
}

const ToolDescriptor& Registry::resolve_tool(const std::string& name) const {
  auto it = tools_.find(name);
  if (it == tools_.end()) {
    throw LookupError("unknown tool '" + name + "'");
  }
  return it->second;
}

bool Registry::has_tool(const std::string& name) const { return tools_.count(name) != 0; }

void Registry::register_reasoning(const std::string& name, std::shared_ptr<Reasoning> fn) {
  if (reasonings_.count(name)) {
    throw LookupError("reasoning '" + name + "' already registered");
  }
  reasonings_.emplace(name, std::move(fn));
}

std::shared_ptr<Reasoning> Registry::resolve_reasoning(const std::string& name) const {
  auto it = reasonings_.find(name);
  if (it == reasonings_.end()) {
    throw LookupError("unknown reasoning '" + name + "'");
  }
  return it->second;
}

bool Registry::has_reasoning(const std::string& name) const {
  return reasonings_.count(name) != 0;
}

RegistryView Registry::view() const {
  RegistryView v;
  for (const auto& [name, _] : tools_) v.tool_names.insert(name);
  for (const auto& [name, _] : reasonings_) v.reasoning_names.insert(name);
  return v;
}

ToolResult Registry::call_tool(const AgentSpec& caller, const std::string& tool,
                               const std::string& prompt, nlohmann::json params) {
  const ToolDescriptor& descriptor = resolve_tool(tool);
  if (std::find(caller.tools.begin(), caller.tools.end(), tool) == caller.tools.end()) {
    throw AuthorizationError("agent '" + caller.id + "' is not authorized for tool '" + tool +
                             "'");
  }
  AdapterRequest request;
  request.modality = descriptor.modality;
  request.prompt = prompt;
  request.params = std::move(params);
  request.seed = seed_;
  if (backend_url_) {
    return {backend_adapter_call(*backend_url_, request)};
  }
  return {mock_tool_payload(request)};
}

HuddleContribution RuntimeContributor::contribute(
    const AgentId& speaker, const AgentId& requester, int cycle, int round,
    const std::vector<std::pair<AgentId, std::string>>& transcript_so_far) {
  HuddleInvite invite;
  invite.speaker = speaker;
  invite.requester = requester;
  invite.cycle = cycle;
  invite.round = round;
  invite.transcript = &transcript_so_far;
  return registry_.resolve_reasoning(graph_.agent(speaker).reasoning_ref)
      ->contribute(invite, registry_);
}

// --- mock fleet ----------------------------------------------------------------

ArtifactLabel label_for_stage(const std::string& stage) {
  if (stage == "scriptwriting") return ArtifactLabel::script;
  if (stage == "storyboarding") return ArtifactLabel::storyboard;
  if (stage == "visual_asset_generation") return ArtifactLabel::clip;
  if (stage == "video_composition") return ArtifactLabel::cut;
  if (stage == "post_production") return ArtifactLabel::cut;
  if (stage == "audio_design") return ArtifactLabel::audio;
  return ArtifactLabel::other;
}

ReasoningResponse StageEchoReasoning::invoke(const ReasoningRequest& request,
                                             Registry& registry) {
  const AgentSpec& spec = *request.spec;
  ReasoningResponse resp;
  resp.label = label_for_stage(spec.stage);

  std::string payload = "[" + spec.role_label + "] " + spec.stage + " r" +
                        std::to_string(request.round) + " a" + std::to_string(request.attempt) +
                        " seed" + std::to_string(registry.seed()) + " ctx:" +
                        request.context->digest().substr(0, 12);
  for (const std::string& tool : spec.tools) {
    ToolResult result = registry.call_tool(
        spec, tool, spec.stage,
        {{"round", request.round}, {"attempt", request.attempt}, {"agent", spec.id}});
    payload += " " + tool + ":" + digest_hex(result.payload).substr(0, 8);
  }
  resp.artifact_payload = std::move(payload);

  for (const AgentId& target : request.live_forward_targets) {
    resp.instructions.emplace_back(target, "handoff from " + spec.id + " r" +
                                               std::to_string(request.round) + " a" +
                                               std::to_string(request.attempt));
  }
  resp.needs_huddle = !spec.required_context.empty() && request.attempt == 1 &&
                      request.context->enrichment.empty();
  return resp;
}

ReasoningResponse ScriptedReviewReasoning::invoke(const ReasoningRequest& request,
                                                  Registry& registry) {
  const AgentSpec& spec = *request.spec;
  std::size_t idx = std::min<std::size_t>(request.attempt - 1, script_.size() - 1);
  const bool reject = script_.at(idx) == 'r';

  ReasoningResponse resp;
  resp.label = ArtifactLabel::other;
  std::string payload = "[" + spec.role_label + "] review r" + std::to_string(request.round) +
                        " a" + std::to_string(request.attempt) + " seed" +
                        std::to_string(registry.seed()) + " ctx:" +
                        request.context->digest().substr(0, 12) +
                        (reject ? " verdict:REJECT" : " verdict:APPROVE");
  for (const std::string& tool : spec.tools) {
    ToolResult result = registry.call_tool(
        spec, tool, spec.stage,
        {{"round", request.round}, {"attempt", request.attempt}, {"agent", spec.id}});
    payload += " " + tool + ":" + digest_hex(result.payload).substr(0, 8);
  }
  resp.artifact_payload = std::move(payload);

  if (reject) {
    for (const AgentId& target : request.reverse_targets_all) {
      resp.instructions.emplace_back(target, "revise: continuity break r" +
                                                 std::to_string(request.round) + " a" +
                                                 std::to_string(request.attempt));
    }
  } else {
    for (const AgentId& target : request.live_forward_targets) {
      resp.instructions.emplace_back(target, "approved handoff r" +
                                                 std::to_string(request.round));
    }
  }
  return resp;
}

Registry make_mock_registry() {
  Registry reg;
  reg.register_tool({"script-llm", Modality::text, ""});
  reg.register_tool({"storyboard-image", Modality::image, ""});
  reg.register_tool({"shot-video", Modality::video, ""});
  reg.register_tool({"foley-audio", Modality::audio, ""});
  reg.register_tool({"continuity-vlm", Modality::video_understanding, ""});
  reg.register_reasoning("stage_echo", std::make_shared<StageEchoReasoning>());
  reg.register_reasoning("supervisor_review", std::make_shared<ScriptedReviewReasoning>("ra"));
  if (const char* url = std::getenv("OMNIGRAPH_BACKEND_URL")) {
    if (*url) reg.set_backend_url(std::string(url));
  }
  return reg;
}

nlohmann::json film_pipeline_template() {
  nlohmann::json agents = nlohmann::json::array();
  auto agent = [](const char* id, const char* role, const char* stage,
                  std::vector<std::string> tools, const char* reasoning) {
    return nlohmann::json{{"id", id},
                          {"role_label", role},
                          {"stage", stage},
                          {"tools", tools},
                          {"reasoning_ref", reasoning}};
  };
  agents.push_back(agent("concept", "Concept Developer", "concept_development", {"script-llm"},
                         "stage_echo"));
  agents.push_back(
      agent("writer", "Scriptwriter", "scriptwriting", {"script-llm"}, "stage_echo"));
  agents.push_back(agent("storyboard", "Storyboard Artist", "storyboarding",
                         {"storyboard-image"}, "stage_echo"));
  agents.push_back(agent("assets", "Visual Asset Generator", "visual_asset_generation",
                         {"storyboard-image", "shot-video"}, "stage_echo"));
  nlohmann::json composition = agent("composition", "Video Composer", "video_composition",
                                     {"shot-video", "foley-audio"}, "stage_echo");
  composition["required_context"] = {"scriptwriting", "storyboarding"};
  agents.push_back(std::move(composition));
  agents.push_back(agent("supervisor", "Script Supervisor", "script_supervising",
                         {"continuity-vlm"}, "supervisor_review"));
  agents.push_back(agent("post", "Post-Production Editor", "post_production",
                         {"foley-audio", "shot-video"}, "stage_echo"));

  nlohmann::json edges = nlohmann::json::array();
  auto fwd = [](const char* s, const char* t) {
    return nlohmann::json{{"source", s}, {"target", t}};
  };
  edges.push_back(fwd("concept", "writer"));
  edges.push_back(fwd("writer", "storyboard"));
  edges.push_back(fwd("storyboard", "assets"));
  edges.push_back(fwd("assets", "composition"));
  edges.push_back(fwd("composition", "supervisor"));
  edges.push_back(fwd("supervisor", "post"));
  edges.push_back({{"source", "supervisor"}, {"target", "writer"}, {"retry_budget", 3}});

  return {{"agents", agents}, {"edges", edges}, {"d_max", 2}, {"turn_limit", 1}};
}

}  // namespace omnigraph
