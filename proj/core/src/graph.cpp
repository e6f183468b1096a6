#include "omnigraph/graph.hpp"

#include <algorithm>
#include <queue>
#include <sstream>

namespace omnigraph {

namespace {

std::string json_type_name(const nlohmann::json& v) { return v.type_name(); }

const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                    nlohmann::json::value_t type, const std::string& locus) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(std::string("missing required field '") + key + "'", locus);
  }
  if (it->type() != type) {
    // Integers may arrive as unsigned; accept either integral flavor.
    bool integral_ok = type == nlohmann::json::value_t::number_integer && it->is_number_integer();
    if (!integral_ok) {
      throw ParseError(std::string("field '") + key + "' has type " + json_type_name(*it),
                       locus + "." + key);
    }
  }
  return *it;
}

void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> known,
                         const std::string& locus) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ParseError("unknown field '" + it.key() + "'", locus + "." + it.key());
    }
  }
}

std::vector<std::string> string_array(const nlohmann::json& arr, const std::string& locus) {
  if (!arr.is_array()) {
    throw ParseError("expected an array of strings", locus);
  }
  std::vector<std::string> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) {
      throw ParseError("expected a string", locus + "[" + std::to_string(i) + "]");
    }
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

}  // namespace

const AgentSpec& WorkflowGraph::agent(const AgentId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw LookupError("unknown agent '" + id + "'");
  }
  return agents_[it->second];
}

const Edge* WorkflowGraph::find_edge(const AgentId& source, const AgentId& target) const {
  for (const Edge& e : edges_) {
    if (e.source == source && e.target == target) return &e;
  }
  return nullptr;
}

Edge* WorkflowGraph::find_edge(const AgentId& source, const AgentId& target) {
  return const_cast<Edge*>(static_cast<const WorkflowGraph*>(this)->find_edge(source, target));
}

int WorkflowGraph::topo_rank(const AgentId& id) const {
  auto it = rank_.find(id);
  if (it == rank_.end()) {
    throw LookupError("unknown agent '" + id + "'");
  }
  return it->second;
}

nlohmann::json WorkflowGraph::canonical_json(bool include_state) const {
  nlohmann::json agents = nlohmann::json::array();
  for (const AgentSpec& a : agents_) {
    agents.push_back({{"id", a.id},
                      {"role_label", a.role_label},
                      {"stage", a.stage},
                      {"tools", a.tools},
                      {"reasoning_ref", a.reasoning_ref},
                      {"required_context", a.required_context}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : edges_) {
    nlohmann::json j{{"source", e.source},
                     {"target", e.target},
                     {"kind", to_string(e.kind)}};
    if (e.kind == EdgeKind::reverse) {
      j["budget"] = e.budget;
      if (include_state) {
        j["counter"] = e.counter;
        j["live"] = e.live;
      }
    }
    edges.push_back(std::move(j));
  }
  return {{"agents", agents}, {"edges", edges}, {"topo_order", topo_}};
}

WorkflowDoc parse_workflow(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), "byte " + std::to_string(e.byte));
  }
  return parse_workflow(doc);
}

WorkflowDoc parse_workflow(const nlohmann::json& doc) {
  if (!doc.is_object()) {
    throw ParseError("workflow document must be a JSON object", "$");
  }
  reject_unknown_keys(doc,
                      {"agents", "edges", "max_rounds", "seed", "retry_budget_default", "d_max",
                       "turn_limit"},
                      "$");

  WorkflowDoc out;
  const nlohmann::json& agents = require_field(doc, "agents", nlohmann::json::value_t::array, "$");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string locus = "agents[" + std::to_string(i) + "]";
    const nlohmann::json& a = agents[i];
    if (!a.is_object()) {
      throw ParseError("agent entry must be an object", locus);
    }
    reject_unknown_keys(a, {"id", "role_label", "stage", "tools", "reasoning_ref", "required_context"},
                        locus);
    AgentSpec spec;
    spec.id = require_field(a, "id", nlohmann::json::value_t::string, locus).get<std::string>();
    spec.role_label =
        require_field(a, "role_label", nlohmann::json::value_t::string, locus).get<std::string>();
    spec.stage = require_field(a, "stage", nlohmann::json::value_t::string, locus).get<std::string>();
    spec.tools = string_array(require_field(a, "tools", nlohmann::json::value_t::array, locus),
                              locus + ".tools");
    spec.reasoning_ref =
        require_field(a, "reasoning_ref", nlohmann::json::value_t::string, locus).get<std::string>();
    if (a.contains("required_context")) {
      spec.required_context = string_array(a["required_context"], locus + ".required_context");
    }
    out.agents.push_back(std::move(spec));
  }

  const nlohmann::json& edges = require_field(doc, "edges", nlohmann::json::value_t::array, "$");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string locus = "edges[" + std::to_string(i) + "]";
    const nlohmann::json& e = edges[i];
    if (!e.is_object()) {
      throw ParseError("edge entry must be an object", locus);
    }
    reject_unknown_keys(e, {"source", "target", "retry_budget"}, locus);
    EdgeSpec spec;
    spec.source =
        require_field(e, "source", nlohmann::json::value_t::string, locus).get<std::string>();
    spec.target =
        require_field(e, "target", nlohmann::json::value_t::string, locus).get<std::string>();
    if (e.contains("retry_budget")) {
      spec.feedback_declared = true;
      const nlohmann::json& b = e["retry_budget"];
      if (b.is_null()) {
        spec.retry_budget.reset();  // default budget applies
      } else if (b.is_number_integer()) {
        long long v = b.get<long long>();
        if (v < 0) {
          throw ParseError("retry_budget must be >= 0", locus + ".retry_budget");
        }
        spec.retry_budget = static_cast<int>(v);
      } else {
        throw ParseError("retry_budget must be an integer or null", locus + ".retry_budget");
      }
    }
    out.edges.push_back(std::move(spec));
  }

  auto read_int = [&](const char* key, int min_v, int& slot) {
    if (!doc.contains(key)) return;
    const nlohmann::json& v = doc[key];
    if (!v.is_number_integer()) {
      throw ParseError(std::string("'") + key + "' must be an integer", std::string("$.") + key);
    }
    long long n = v.get<long long>();
    if (n < min_v) {
      throw ParseError(std::string("'") + key + "' must be >= " + std::to_string(min_v),
                       std::string("$.") + key);
    }
    slot = static_cast<int>(n);
  };
  read_int("max_rounds", 1, out.config.max_rounds);
  read_int("retry_budget_default", 0, out.config.retry_budget_default);
  read_int("d_max", 0, out.config.d_max);
  read_int("turn_limit", 1, out.config.turn_limit);
  if (doc.contains("seed")) {
    const nlohmann::json& v = doc["seed"];
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
      throw ParseError("'seed' must be a non-negative integer", "$.seed");
    }
    if (v.is_number_integer() && v.get<long long>() < 0) {
      throw ParseError("'seed' must be a non-negative integer", "$.seed");
    }
    out.config.seed = v.get<std::uint64_t>();
  }
  return out;
}

nlohmann::json workflow_to_json(const WorkflowDoc& doc) {
  nlohmann::json agents = nlohmann::json::array();
  for (const AgentSpec& a : doc.agents) {
    nlohmann::json j{{"id", a.id},
                     {"role_label", a.role_label},
                     {"stage", a.stage},
                     {"tools", a.tools},
                     {"reasoning_ref", a.reasoning_ref}};
    if (!a.required_context.empty()) j["required_context"] = a.required_context;
    agents.push_back(std::move(j));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const EdgeSpec& e : doc.edges) {
    nlohmann::json j{{"source", e.source}, {"target", e.target}};
    if (e.feedback_declared) {
      if (e.retry_budget) {
        j["retry_budget"] = *e.retry_budget;
      } else {
        j["retry_budget"] = nullptr;
      }
    }
    edges.push_back(std::move(j));
  }
  return {{"agents", agents},
          {"edges", edges},
          {"max_rounds", doc.config.max_rounds},
          {"seed", doc.config.seed},
          {"retry_budget_default", doc.config.retry_budget_default},
          {"d_max", doc.config.d_max},
          {"turn_limit", doc.config.turn_limit}};
}

std::vector<Violation> validate_spec(const WorkflowDoc& doc, const RegistryView& known) {
  std::vector<Violation> out;
  std::set<AgentId> seen;
  std::set<AgentId> all_ids;
  for (const AgentSpec& a : doc.agents) all_ids.insert(a.id);

  for (std::size_t i = 0; i < doc.agents.size(); ++i) {
    const AgentSpec& a = doc.agents[i];
    const std::string locus = "agents[" + std::to_string(i) + "]";
    if (a.id.empty()) {
      out.push_back({"empty_agent_id", locus + ".id", "agent id must be non-empty"});
    }
    if (!seen.insert(a.id).second) {
      out.push_back({"duplicate_agent_id", locus + ".id", "duplicate agent id '" + a.id + "'"});
    }
    if (!known.reasoning_names.count(a.reasoning_ref)) {
      out.push_back({"unresolvable_reasoning_ref", locus + ".reasoning_ref",
                     "agent '" + a.id + "' references unknown reasoning '" + a.reasoning_ref + "'"});
    }
    for (std::size_t t = 0; t < a.tools.size(); ++t) {
      if (!known.tool_names.count(a.tools[t])) {
        out.push_back({"unknown_tool", locus + ".tools[" + std::to_string(t) + "]",
                       "agent '" + a.id + "' lists unregistered tool '" + a.tools[t] + "'"});
      }
    }
  }

  std::set<std::pair<AgentId, AgentId>> edge_seen;
  for (std::size_t i = 0; i < doc.edges.size(); ++i) {
    const EdgeSpec& e = doc.edges[i];
    const std::string locus = "edges[" + std::to_string(i) + "]";
    if (!all_ids.count(e.source)) {
      out.push_back({"dangling_edge_source", locus + ".source",
                     "edge source '" + e.source + "' is not a declared agent"});
    }
    if (!all_ids.count(e.target)) {
      out.push_back({"dangling_edge_target", locus + ".target",
                     "edge target '" + e.target + "' is not a declared agent"});
    }
    if (e.source == e.target) {
      out.push_back({"self_loop", locus, "self-loop on '" + e.source + "' is not allowed"});
    }
    if (!edge_seen.insert({e.source, e.target}).second) {
      out.push_back({"duplicate_edge", locus,
                     "duplicate edge '" + e.source + "' -> '" + e.target + "'"});
    }
  }
  return out;
}

WorkflowGraph build_graph(const WorkflowDoc& doc) {
  WorkflowGraph g;
  g.config_ = doc.config;
  g.agents_ = doc.agents;
  std::sort(g.agents_.begin(), g.agents_.end(),
            [](const AgentSpec& a, const AgentSpec& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < g.agents_.size(); ++i) {
    const AgentId& id = g.agents_[i].id;
    if (!g.index_.emplace(id, i).second) {
      throw BuildError("duplicate agent id '" + id + "' (document not validated)");
    }
    g.ids_.push_back(id);
  }
  for (const EdgeSpec& e : doc.edges) {
    if (!g.index_.count(e.source) || !g.index_.count(e.target) || e.source == e.target) {
      throw BuildError("edge '" + e.source + "' -> '" + e.target +
                       "' is invalid (document not validated)");
    }
  }

  // Kahn's algorithm over the primary flow (edges not declared as feedback),
  // lexicographic tie-break via an ordered ready set.
  std::map<AgentId, std::set<AgentId>> fwd_out;
  std::map<AgentId, int> in_degree;
  for (const AgentId& id : g.ids_) in_degree[id] = 0;
  for (const EdgeSpec& e : doc.edges) {
    if (e.feedback_declared) continue;
    if (fwd_out[e.source].insert(e.target).second) {
      in_degree[e.target] += 1;
    }
  }
  std::set<AgentId> ready;
  for (const AgentId& id : g.ids_) {
    if (in_degree[id] == 0) ready.insert(id);
  }
  while (!ready.empty()) {
    AgentId id = *ready.begin();
    ready.erase(ready.begin());
    g.rank_[id] = static_cast<int>(g.topo_.size());
    g.topo_.push_back(id);
    for (const AgentId& t : fwd_out[id]) {
      if (--in_degree[t] == 0) ready.insert(t);
    }
  }
  if (g.topo_.size() != g.ids_.size()) {
    // Walk predecessor links among the leftover nodes to name an actual cycle.
    std::set<AgentId> leftover;
    for (const AgentId& id : g.ids_) {
      if (!g.rank_.count(id)) leftover.insert(id);
    }
    std::map<AgentId, AgentId> pred_in_leftover;
    for (const EdgeSpec& e : doc.edges) {
      if (e.feedback_declared) continue;
      if (leftover.count(e.source) && leftover.count(e.target)) {
        pred_in_leftover[e.target] = e.source;  // any one predecessor suffices
      }
    }
    AgentId cur = *leftover.begin();
    std::vector<AgentId> walk;
    std::set<AgentId> on_walk;
    while (!on_walk.count(cur)) {
      walk.push_back(cur);
      on_walk.insert(cur);
      cur = pred_in_leftover.at(cur);
    }
    std::vector<AgentId> cycle;
    for (auto it = std::find(walk.begin(), walk.end(), cur); it != walk.end(); ++it) {
      cycle.push_back(*it);
    }
    std::sort(cycle.begin(), cycle.end());
    std::ostringstream msg;
    msg << "forward cycle: ";
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      if (i) msg << " -> ";
      msg << cycle[i];
    }
    throw BuildError(msg.str());
  }

  for (const EdgeSpec& e : doc.edges) {
    Edge edge;
    edge.source = e.source;
    edge.target = e.target;
    if (g.rank_.at(e.target) < g.rank_.at(e.source)) {
      edge.kind = EdgeKind::reverse;
      edge.budget = e.retry_budget.value_or(doc.config.retry_budget_default);
      edge.counter = 0;
      edge.live = edge.budget > 0;  // budget 0: never traversable
    } else {
      edge.kind = EdgeKind::forward;  // declared budgets on order-consistent edges are dropped
      edge.budget = 0;
      edge.live = true;
    }
    g.edges_.push_back(std::move(edge));
  }
  std::sort(g.edges_.begin(), g.edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.source, a.target) < std::tie(b.source, b.target);
  });
  return g;
}

std::vector<AgentId> predecessors(const WorkflowGraph& g, const AgentId& agent) {
  std::vector<AgentId> out;
  for (const Edge& e : g.edges()) {
    if (e.live && e.target == agent) out.push_back(e.source);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<AgentId> successors(const WorkflowGraph& g, const AgentId& agent) {
  std::vector<AgentId> out;
  for (const Edge& e : g.edges()) {
    if (e.live && e.source == agent) out.push_back(e.target);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<AgentId> forward_predecessors(const WorkflowGraph& g, const AgentId& agent) {
  std::vector<AgentId> out;
  for (const Edge& e : g.edges()) {
    if (e.live && e.kind == EdgeKind::forward && e.target == agent) out.push_back(e.source);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<AgentId> active_successors(const WorkflowGraph& g, const AgentId& agent,
                                       const std::set<AgentId>& activated) {
  std::vector<AgentId> out;
  for (const Edge& e : g.edges()) {
    if (e.live && e.source == agent && activated.count(e.target)) out.push_back(e.target);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace omnigraph
