#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "omnigraph/context.hpp"
#include "omnigraph/graph.hpp"
#include "omnigraph/store.hpp"

namespace omnigraph {

enum class Modality { text, image, video, audio, video_understanding };

const char* to_string(Modality m);
Modality modality_from_string(const std::string& s);

/// A generation capability an agent may invoke. An empty endpoint routes to
/// the in-process mock; otherwise requests go through the backend adapter.
struct ToolDescriptor {
  std::string name;
  Modality modality = Modality::text;
  std::string endpoint;  // "" => mock
};

struct ToolResult {
  std::string payload;
};

/// Wire request for one backend generation call (and the mock's input).
struct AdapterRequest {
  Modality modality = Modality::text;
  std::string prompt;
  nlohmann::json params;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// POST the request to `url` framed as "<byte-length>\n<json>"; the response
/// body uses the same framing and must contain a "payload" string. Throws
/// TransportError with a distinguishable kind on connect failure, timeout,
/// non-2xx status, or bad framing.
std::string backend_adapter_call(const std::string& url, const AdapterRequest& request,
                                 int timeout_ms = 5000);

/// Deterministic in-process stand-in: a placeholder payload tagged with the
/// digest of the canonical request, pure in (request, seed).
std::string mock_tool_payload(const AdapterRequest& request);

/// Input to one reasoning invocation. Routing lists are provided so mock
/// reasoning stays a pure function of the request: live targets may receive
/// directives; `reverse_targets_all` also lists pruned reverse edges so a
/// stubborn reviewer can attempt a send that the scheduler will drop.
struct ReasoningRequest {
  AgentId agent;
  const AgentSpec* spec = nullptr;
  const ContextBundle* context = nullptr;
  int round = 0;
  int attempt = 1;  // attempt_log length + 1 at execution start
  std::vector<AgentId> live_forward_targets;
  std::vector<AgentId> live_reverse_targets;
  std::vector<AgentId> reverse_targets_all;
};

/// Output of one reasoning invocation. The scheduler validates it before any
/// state mutation: the artifact is attributed to the invoking agent and every
/// directive target must be an out-neighbor.
struct ReasoningResponse {
  ArtifactLabel label = ArtifactLabel::other;
  std::string artifact_payload;
  std::vector<std::pair<AgentId, std::string>> instructions;  // target -> body
  bool needs_huddle = false;
  bool sufficiency_signal = false;
};

struct HuddleInvite {
  AgentId speaker;
  AgentId requester;
  int cycle = 1;
  int round = 0;
  const std::vector<std::pair<AgentId, std::string>>* transcript = nullptr;
};

class Registry;

/// A reasoning function: the pluggable "brain" behind an agent. Mock
/// implementations must be pure with respect to (request, registry seed).
class Reasoning {
public:
  virtual ~Reasoning() = default;
  virtual ReasoningResponse invoke(const ReasoningRequest& request, Registry& registry) = 0;
  /// Huddle contribution; default: deterministic attributed echo.
  virtual HuddleContribution contribute(const HuddleInvite& invite, Registry& registry);
};

/// Name-indexed tool and reasoning registry plus the run seed and optional
/// backend routing. Duplicate registrations and unknown lookups throw.
class Registry {
public:
  void register_tool(ToolDescriptor tool);
  const ToolDescriptor& resolve_tool(const std::string& name) const;
  bool has_tool(const std::string& name) const;

  void register_reasoning(const std::string& name, std::shared_ptr<Reasoning> fn);
  std::shared_ptr<Reasoning> resolve_reasoning(const std::string& name) const;
  bool has_reasoning(const std::string& name) const;

  /// Known names, for workflow validation.
  RegistryView view() const;

  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  /// Live backend base URL; unset routes every tool call to the mock.
  const std::optional<std::string>& backend_url() const { return backend_url_; }
  void set_backend_url(std::optional<std::string> url) { backend_url_ = std::move(url); }

  /// Invoke a tool on behalf of `caller`. Throws AuthorizationError when the
  /// tool is outside the caller's authorized set, LookupError when unknown,
  /// TransportError on backend failure.
  ToolResult call_tool(const AgentSpec& caller, const std::string& tool, const std::string& prompt,
                       nlohmann::json params);

private:
  std::map<std::string, ToolDescriptor> tools_;
  std::map<std::string, std::shared_ptr<Reasoning>> reasonings_;
  std::uint64_t seed_ = 0;
  std::optional<std::string> backend_url_;
};

/// Bridges huddle turns to the speakers' registered reasoning functions.
class RuntimeContributor : public HuddleContributor {
public:
  RuntimeContributor(const WorkflowGraph& graph, Registry& registry)
      : graph_(graph), registry_(registry) {}
  HuddleContribution contribute(const AgentId& speaker, const AgentId& requester, int cycle,
                                int round,
                                const std::vector<std::pair<AgentId, std::string>>&
                                    transcript_so_far) override;

private:
  const WorkflowGraph& graph_;
  Registry& registry_;
};

// --- standard mock fleet ------------------------------------------------------

/// Pipeline stage worker: emits a stage-labeled artifact derived from its
/// context digest and tool outputs, hands off to every live forward successor,
/// and requests one huddle on its first attempt when it declares context needs
/// that are not yet enriched.
class StageEchoReasoning : public Reasoning {
public:
  ReasoningResponse invoke(const ReasoningRequest& request, Registry& registry) override;
};

/// Reviewer scripted per attempt: 'r' rejects (revision_request to every
/// reverse target, pruned or not — the scheduler drops dead-edge sends),
/// 'a' accepts (handoff to live forward successors). The last action repeats
/// when attempts outrun the script.
class ScriptedReviewReasoning : public Reasoning {
public:
  explicit ScriptedReviewReasoning(std::string script) : script_(std::move(script)) {}
  ReasoningResponse invoke(const ReasoningRequest& request, Registry& registry) override;

private:
  std::string script_;
};

/// Registry preloaded with the mock tool fleet (one per modality) and the
/// standard mock reasonings: "stage_echo" and "supervisor_review" (one
/// rejection, then approval).
Registry make_mock_registry();

/// Artifact label convention for pipeline stages.
ArtifactLabel label_for_stage(const std::string& stage);

/// The bundled six-stage film pipeline plus a script supervisor: a forward
/// chain concept -> writer -> storyboard -> assets -> composition ->
/// supervisor -> post and one declared feedback edge supervisor -> writer
/// (budget 3). Returned in the normative workflow JSON shape.
nlohmann::json film_pipeline_template();

}  // namespace omnigraph
