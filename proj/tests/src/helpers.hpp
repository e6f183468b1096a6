#pragma once

// Shared builders and process helpers for the test suites.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <tuple>
#include <utility>
#include <vector>

#include "omnigraph/ext/json.hpp"
#include "omnigraph/graph.hpp"

namespace testutil {

inline nlohmann::json agent_json(const std::string& id, const std::string& stage = "stage",
                                 const std::string& reasoning = "stage_echo",
                                 std::vector<std::string> tools = {},
                                 std::vector<std::string> required_context = {}) {
  nlohmann::json j{{"id", id},
                   {"role_label", id},
                   {"stage", stage},
                   {"tools", tools},
                   {"reasoning_ref", reasoning}};
  if (!required_context.empty()) j["required_context"] = required_context;
  return j;
}

inline nlohmann::json edge_json(const std::string& source, const std::string& target) {
  return {{"source", source}, {"target", target}};
}

inline nlohmann::json feedback_edge_json(const std::string& source, const std::string& target,
                                         nlohmann::json budget) {
  return {{"source", source}, {"target", target}, {"retry_budget", std::move(budget)}};
}

inline nlohmann::json workflow_json(std::vector<nlohmann::json> agents,
                                    std::vector<nlohmann::json> edges,
                                    nlohmann::json overrides = nlohmann::json::object()) {
  nlohmann::json doc{{"agents", agents}, {"edges", edges}};
  for (auto it = overrides.begin(); it != overrides.end(); ++it) doc[it.key()] = it.value();
  return doc;
}

inline omnigraph::WorkflowGraph graph_from(const nlohmann::json& doc) {
  return omnigraph::build_graph(omnigraph::parse_workflow(doc));
}

// --- random workflows ----------------------------------------------------------

/// Zero-padded node name so lexicographic order equals index order.
inline std::string node_name(int i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "n%02d", i);
  return buf;
}

struct RandomWorkflow {
  nlohmann::json doc;
  int nodes = 0;
  std::vector<std::pair<int, int>> forward_edges;            // (i, j), i < j
  std::vector<std::tuple<int, int, int>> reverse_edges;      // (j, i, budget), j > i
};

/// Random layered workflow: forward edges run from lower to higher index
/// (always acyclic), declared feedback edges from higher to lower. Reviewer
/// agents (feedback sources) get `reviewer_reasoning`; everyone else
/// `stage_echo`. Stages are distinct per node ("stage<i>").
inline RandomWorkflow random_workflow(std::mt19937_64& rng, int max_nodes, int max_reverse,
                                      int min_budget, int max_budget,
                                      const std::string& reviewer_reasoning = "stage_echo") {
  RandomWorkflow out;
  std::uniform_int_distribution<int> node_count(2, max_nodes);
  out.nodes = node_count(rng);
  const int n = out.nodes;

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1;
      if (adjacent || coin(rng) < 0.25) out.forward_edges.emplace_back(i, j);
    }
  }

  std::uniform_int_distribution<int> reverse_count(0, max_reverse);
  std::uniform_int_distribution<int> budget_dist(min_budget, max_budget);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::set<std::pair<int, int>> used;
  for (const auto& [i, j] : out.forward_edges) used.insert({i, j});
  int want = reverse_count(rng);
  for (int tries = 0; tries < 50 && want > 0; ++tries) {
    int a = pick(rng), b = pick(rng);
    if (a <= b) continue;  // reverse edges go from higher to lower index
    if (!used.insert({a, b}).second) continue;
    out.reverse_edges.emplace_back(a, b, budget_dist(rng));
    --want;
  }

  std::set<int> reviewers;
  for (const auto& [j, i, budget] : out.reverse_edges) {
    (void)i;
    (void)budget;
    reviewers.insert(j);
  }

  std::vector<nlohmann::json> agents;
  for (int i = 0; i < n; ++i) {
    const bool reviewer = reviewers.count(i) != 0;
    agents.push_back(agent_json(node_name(i), "stage" + std::to_string(i),
                                reviewer ? reviewer_reasoning : "stage_echo"));
  }
  std::vector<nlohmann::json> edges;
  for (const auto& [i, j] : out.forward_edges) {
    edges.push_back(edge_json(node_name(i), node_name(j)));
  }
  for (const auto& [j, i, budget] : out.reverse_edges) {
    edges.push_back(feedback_edge_json(node_name(j), node_name(i), budget));
  }
  // Provably sufficient round allowance: every retry wave can re-run the
  // whole forward chain once per unit of budget.
  out.doc = workflow_json(std::move(agents), std::move(edges), {{"max_rounds", 512}});
  return out;
}

// --- subprocess ------------------------------------------------------------------

struct ProcResult {
  int exit_code = -1;
  std::string out;
};

/// Run a shell command, capture stdout, return the exit code. The caller adds
/// any stderr redirection it wants inside `command`.
inline ProcResult run_process(const std::string& command) {
  ProcResult result;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (!pipe) return result;
  char buffer[4096];
  std::size_t got;
  while ((got = std::fread(buffer, 1, sizeof(buffer), pipe)) > 0) {
    result.out.append(buffer, got);
  }
  const int status = ::pclose(pipe);
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

/// Parse JSON-lines output into a vector of objects.
inline std::vector<nlohmann::json> parse_jsonl(const std::string& text) {
  std::vector<nlohmann::json> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(nlohmann::json::parse(line));
  }
  return rows;
}

/// Self-deleting temporary directory.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / "omnigraph_test_XXXXXX").string();
    char* made = ::mkdtemp(tmpl.data());
    path = made ? std::filesystem::path(made) : std::filesystem::path(tmpl);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace testutil
