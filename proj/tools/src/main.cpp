#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "omnigraph/digest.hpp"
#include "omnigraph/errors.hpp"
#include "omnigraph/graph.hpp"
#include "omnigraph/report.hpp"
#include "omnigraph/runtime.hpp"
#include "omnigraph/scheduler.hpp"
#include "omnigraph/stats.hpp"
#include "omnigraph/store.hpp"
#include "omnigraph/topology.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace omnigraph;

constexpr int kExitUsage = 1;
constexpr int kExitData = 4;

void print_json(const json& j, bool pretty) {
  std::cout << (pretty ? j.dump(2) : j.dump()) << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file '" + path.string() + "'");
  out << content;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string current;
  for (char c : csv) {
    if (c == ',') {
      if (!current.empty()) out.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

// --- run ---------------------------------------------------------------------

struct RunParams {
  std::string workflow;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int max_rounds = 0;
  bool max_rounds_set = false;
  bool pretty = false;
};

int cmd_run(const RunParams& params) {
  WorkflowDoc doc = params.workflow == "builtin:film"
                        ? parse_workflow(film_pipeline_template())
                        : parse_workflow(read_file(params.workflow));
  if (params.max_rounds_set) doc.config.max_rounds = params.max_rounds;
  if (params.seed_set) doc.config.seed = params.seed;

  Registry registry = make_mock_registry();
  registry.set_seed(doc.config.seed);

  const std::vector<Violation> violations = validate_spec(doc, registry.view());
  if (!violations.empty()) {
    json list = json::array();
    for (const Violation& v : violations) {
      list.push_back({{"code", v.code}, {"locus", v.locus}, {"message", v.message}});
    }
    print_json({{"error", "validation"}, {"violations", list}}, params.pretty);
    return kExitData;
  }

  WorkflowGraph graph = build_graph(doc);
  Store store;
  TraceLog trace;
  const WorkflowResult result = run_workflow(graph, store, registry, trace);

  const fs::path out_dir(params.out);
  fs::create_directories(out_dir / "artifacts");
  const std::string trace_text = trace.to_jsonl();
  write_file(out_dir / "trace.jsonl", trace_text);
  for (const Artifact& artifact : store.artifacts()) {
    write_file(out_dir / "artifacts" / artifact.dump_name(), artifact.payload);
  }

  json prunes = json::array();
  for (const PruneRecord& p : result.prune_log) {
    prunes.push_back({{"source", p.source}, {"target", p.target}, {"round", p.round}});
  }
  json terminal = json::array();
  for (const Artifact& artifact : result.terminal_artifacts) {
    terminal.push_back(artifact.dump_name());
  }
  print_json({{"status", to_string(result.status)},
              {"rounds", result.rounds_executed},
              {"prune_log", prunes},
              {"terminal_artifacts", terminal},
              {"artifact_count", store.artifacts().size()},
              {"trace_digest", digest_hex(trace_text)},
              {"warnings", result.log}},
             params.pretty);
  return exit_code_for(result.status);
}

// --- trace -------------------------------------------------------------------

struct TraceParams {
  std::string in;
  std::vector<std::string> asserts;
  std::string against;
  bool pretty = false;
};

/// Violation report for one failed assertion, or nullopt when it holds.
std::optional<json> check_counters(const TraceLog& trace) {
  struct EdgeState {
    int counter = 0;
    int budget = -1;
    bool exhausted = false;
    bool pruned = false;
    std::uint64_t last_seq = 0;
  };
  std::map<std::pair<std::string, std::string>, EdgeState> edges;
  for (const TraceEvent& e : trace.events()) {
    try {
      if (e.event == TraceEventType::reverse_traverse) {
        const std::string target = e.payload.at("target").get<std::string>();
        const int counter = e.payload.at("counter").get<int>();
        const int budget = e.payload.at("budget").get<int>();
        EdgeState& state = edges[{e.agent, target}];
        if (state.exhausted || state.pruned) {
          return json{{"seq", e.seq}, {"message", "traversal after budget exhaustion"}};
        }
        if (counter != state.counter + 1) {
          return json{{"seq", e.seq},
                      {"message", "counter must increase by exactly 1 (got " +
                                      std::to_string(counter) + " after " +
                                      std::to_string(state.counter) + ")"}};
        }
        if (state.budget >= 0 && budget != state.budget) {
          return json{{"seq", e.seq}, {"message", "budget changed mid-run"}};
        }
        if (counter > budget) {
          return json{{"seq", e.seq}, {"message", "counter exceeds budget"}};
        }
        state.counter = counter;
        state.budget = budget;
        state.last_seq = e.seq;
        if (counter == budget) state.exhausted = true;
      } else if (e.event == TraceEventType::edge_pruned) {
        const std::string target = e.payload.at("target").get<std::string>();
        auto it = edges.find({e.agent, target});
        if (it == edges.end() || !it->second.exhausted) {
          return json{{"seq", e.seq}, {"message", "prune without an exhausted counter"}};
        }
        if (it->second.pruned) {
          return json{{"seq", e.seq}, {"message", "edge pruned twice"}};
        }
        if (e.payload.at("counter").get<int>() != it->second.counter) {
          return json{{"seq", e.seq}, {"message", "prune counter disagrees with traversals"}};
        }
        it->second.pruned = true;
      }
    } catch (const json::exception&) {
      return json{{"seq", e.seq}, {"message", "malformed counter payload"}};
    }
  }
  for (const auto& [key, state] : edges) {
    if (state.exhausted && !state.pruned) {
      return json{{"seq", state.last_seq},
                  {"message", "edge " + key.first + " -> " + key.second +
                                  " exhausted its budget but was never pruned"}};
    }
  }
  return std::nullopt;
}

std::optional<json> check_dag_recovered(const TraceLog& trace) {
  std::map<std::string, int> first_activation;
  std::vector<std::tuple<std::string, std::string, std::uint64_t>> derived_edges;
  for (const TraceEvent& e : trace.events()) {
    try {
      if (e.event == TraceEventType::reverse_traverse || e.event == TraceEventType::edge_pruned) {
        return json{{"seq", e.seq}, {"message", "reverse-edge traffic present"}};
      }
      if (e.event == TraceEventType::activate) {
        if (first_activation.find(e.agent) == first_activation.end()) {
          first_activation[e.agent] = e.round;
        }
      }
      if (e.event == TraceEventType::send_instruction) {
        const std::string kind = e.payload.at("kind").get<std::string>();
        if (kind == "revision_request") {
          return json{{"seq", e.seq}, {"message", "revision_request present"}};
        }
        if (kind == "instruction") {
          derived_edges.emplace_back(e.agent, e.payload.at("to").get<std::string>(), e.seq);
        }
      }
    } catch (const json::exception&) {
      return json{{"seq", e.seq}, {"message", "malformed payload"}};
    }
  }
  for (const auto& [from, to, seq] : derived_edges) {
    auto a = first_activation.find(from);
    auto b = first_activation.find(to);
    if (a == first_activation.end()) {
      return json{{"seq", seq}, {"message", "sender '" + from + "' never activated"}};
    }
    if (b == first_activation.end()) continue;  // recipient legitimately never ran
    if (a->second >= b->second) {
      return json{{"seq", seq},
                  {"message", "activation order violates forward flow: '" + from +
                                  "' (round " + std::to_string(a->second) + ") !< '" + to +
                                  "' (round " + std::to_string(b->second) + ")"}};
    }
  }
  return std::nullopt;
}

int cmd_trace(const TraceParams& params) {
  const std::string text = read_file(params.in);
  const TraceLog trace = TraceLog::load_jsonl_text(text);
  const Store replayed = replay_trace(trace);  // deep structural validation
  (void)replayed;

  json summary{{"events", trace.size()}, {"trace_digest", digest_hex(text)}};
  if (!trace.events().empty()) {
    const TraceEvent& last = trace.events().back();
    summary["rounds"] = last.round;
    if (last.event == TraceEventType::workflow_done) {
      summary["status"] = last.payload.value("status", "");
    }
  }

  json checks = json::object();
  for (const std::string& name : params.asserts) {
    std::optional<json> violation;
    if (name == "counters") {
      violation = check_counters(trace);
    } else if (name == "dag-recovered") {
      violation = check_dag_recovered(trace);
    } else if (name == "determinism") {
      if (params.against.empty()) {
        std::cerr << "trace: --assert determinism requires --against FILE\n";
        return kExitUsage;
      }
      const std::string other = read_file(params.against);
      if (digest_hex(text) != digest_hex(other) || text != other) {
        violation = json{{"digest_a", digest_hex(text)},
                         {"digest_b", digest_hex(other)},
                         {"message", "traces differ"}};
      }
    } else {
      std::cerr << "trace: unknown assertion '" << name
                << "' (expected dag-recovered, counters or determinism)\n";
      return kExitUsage;
    }
    if (violation) {
      json failure = *violation;
      failure["assert"] = name;
      failure["ok"] = false;
      print_json(failure, params.pretty);
      return kExitData;
    }
    checks[name] = "ok";
  }
  summary["asserts"] = checks;
  print_json(summary, params.pretty);
  return 0;
}

// --- metrics -----------------------------------------------------------------

struct MetricsParams {
  std::string workflow;
  bool forward_only = false;
  bool pretty = false;
};

int cmd_metrics(const MetricsParams& params) {
  WorkflowDoc doc = params.workflow == "builtin:film"
                        ? parse_workflow(film_pipeline_template())
                        : parse_workflow(read_file(params.workflow));
  Registry registry = make_mock_registry();
  const std::vector<Violation> violations = validate_spec(doc, registry.view());
  if (!violations.empty()) {
    json list = json::array();
    for (const Violation& v : violations) {
      list.push_back({{"code", v.code}, {"locus", v.locus}, {"message", v.message}});
    }
    print_json({{"error", "validation"}, {"violations", list}}, params.pretty);
    return kExitData;
  }
  const WorkflowGraph graph = build_graph(doc);
  print_json(topology_report(graph, params.forward_only).to_json(), params.pretty);
  return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalParams {
  std::string ratings;
  std::string tests = "friedman,wilcoxon,bvo";
  std::string group_by = "prompt";
  std::string zeros = "drop";
  std::string baselines = "aipai,video_ocean";
  std::string ours = "setting1_flat,setting2_hier_no_ctx,setting3_full";
  bool pretty = false;
};

int cmd_eval(const EvalParams& params) {
  EvalOptions options;
  options.tests = split_list(params.tests);
  for (const std::string& t : options.tests) {
    if (t != "friedman" && t != "wilcoxon" && t != "bvo") {
      std::cerr << "eval: unknown test '" << t << "' (expected friedman, wilcoxon or bvo)\n";
      return kExitUsage;
    }
  }
  options.group_by = params.group_by;
  options.zeros = params.zeros == "pratt" ? ZeroPolicy::pratt : ZeroPolicy::drop;
  options.baselines = split_list(params.baselines);
  options.ours = split_list(params.ours);

  std::ifstream in(params.ratings, std::ios::binary);
  if (!in) throw DataError("cannot read file '" + params.ratings + "'");
  const std::vector<RatingRecord> records = load_ratings_csv(in);
  const std::vector<json> rows = eval_report(records, options);
  if (params.pretty) {
    print_json(json(rows), true);
  } else {
    for (const json& row : rows) std::cout << row.dump() << "\n";
  }
  return 0;
}

// --- design ------------------------------------------------------------------

struct DesignParams {
  int k = 0;
  std::string type = "latin";
  bool pretty = false;
};

int cmd_design(const DesignParams& params) {
  const DesignResult design = counterbalance_design(params.k, params.type);
  json j = design.to_json();
  j["k"] = params.k;
  j["type"] = params.type;
  print_json(j, params.pretty);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"omnigraph: hierarchical multi-agent workflow engine and evaluation toolkit"};
  app.require_subcommand(1);

  RunParams run_params;
  CLI::App* run = app.add_subcommand("run", "Execute a workflow with the mock (or live) backend");
  run->add_option("--workflow", run_params.workflow,
                  "Workflow JSON file, or 'builtin:film' for the bundled template")
      ->required();
  run->add_option("--out", run_params.out, "Output directory for trace.jsonl and artifacts/")
      ->required();
  CLI::Option* seed_opt = run->add_option("--seed", run_params.seed, "Override the config seed");
  CLI::Option* rounds_opt =
      run->add_option("--max-rounds", run_params.max_rounds, "Override the round limit")
          ->check(CLI::PositiveNumber);
  run->add_flag("--pretty", run_params.pretty, "Pretty-print the summary");

  TraceParams trace_params;
  CLI::App* trace = app.add_subcommand("trace", "Validate a trace file and run assertions");
  trace->add_option("--in", trace_params.in, "Trace JSONL file")->required();
  trace->add_option("--assert", trace_params.asserts,
                    "Assertion(s): dag-recovered, counters, determinism");
  trace->add_option("--against", trace_params.against,
                    "Second trace file for the determinism assertion");
  trace->add_flag("--pretty", trace_params.pretty, "Pretty-print the summary");

  MetricsParams metrics_params;
  CLI::App* metrics = app.add_subcommand("metrics", "Topology metrics of a workflow graph");
  metrics->add_option("--workflow", metrics_params.workflow,
                      "Workflow JSON file, or 'builtin:film'")
      ->required();
  metrics->add_flag("--forward-only", metrics_params.forward_only,
                    "Restrict to the forward subgraph");
  metrics->add_flag("--pretty", metrics_params.pretty, "Pretty-print the report");

  EvalParams eval_params;
  CLI::App* eval = app.add_subcommand("eval", "Analyze a ratings CSV");
  eval->add_option("--ratings", eval_params.ratings, "Ratings CSV file")->required();
  eval->add_option("--tests", eval_params.tests,
                   "Comma list from {friedman,wilcoxon,bvo}; empty for aggregation only");
  eval->add_option("--group-by", eval_params.group_by, "prompt: per-prompt; pooled: rater×prompt")
      ->check(CLI::IsMember({"prompt", "pooled"}));
  eval->add_option("--zeros", eval_params.zeros, "Zero-difference policy for signed-rank tests")
      ->check(CLI::IsMember({"drop", "pratt"}));
  eval->add_option("--baselines", eval_params.baselines, "Comma list of baseline models");
  eval->add_option("--ours", eval_params.ours, "Comma list of our models");
  eval->add_flag("--pretty", eval_params.pretty, "Pretty-print the report");

  DesignParams design_params;
  CLI::App* design = app.add_subcommand("design", "Generate a counterbalancing design");
  design->add_option("--k", design_params.k, "Number of treatments")
      ->required()
      ->check(CLI::PositiveNumber);
  design->add_option("--type", design_params.type, "Design family")
      ->check(CLI::IsMember({"latin", "williams"}));
  design->add_flag("--pretty", design_params.pretty, "Pretty-print the design");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  run_params.seed_set = seed_opt->count() > 0;
  run_params.max_rounds_set = rounds_opt->count() > 0;

  try {
    if (app.got_subcommand(run)) return cmd_run(run_params);
    if (app.got_subcommand(trace)) return cmd_trace(trace_params);
    if (app.got_subcommand(metrics)) return cmd_metrics(metrics_params);
    if (app.got_subcommand(eval)) return cmd_eval(eval_params);
    if (app.got_subcommand(design)) return cmd_design(design_params);
  } catch (const Error& e) {
    print_json({{"error", "data"}, {"message", e.what()}}, false);
    return kExitData;
  } catch (const std::exception& e) {
    print_json({{"error", "internal"}, {"message", e.what()}}, false);
    return kExitData;
  }
  return kExitUsage;
}
