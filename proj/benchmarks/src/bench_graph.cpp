#include <benchmark/benchmark.h>

#include <set>
#include <string>

#include "fixtures.hpp"
#include "omnigraph/context.hpp"
#include "omnigraph/graph.hpp"
#include "omnigraph/topology.hpp"

namespace {

using namespace omnigraph;

void BM_ParseAndBuildGraph(benchmark::State& state) {
  const nlohmann::json doc = benchfix::layered_doc(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    WorkflowGraph g = build_graph(parse_workflow(doc));
    benchmark::DoNotOptimize(g.edges().size());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ParseAndBuildGraph)->Arg(8)->Arg(32)->Arg(128)->Complexity();

void BM_HuddleSelection(benchmark::State& state) {
  const int nodes = static_cast<int>(state.range(0));
  const WorkflowGraph g = build_graph(parse_workflow(benchfix::layered_doc(nodes)));
  std::set<AgentId> activated;
  for (int i = 0; i < nodes; i += 2) activated.insert(benchfix::node_name(i));
  const AgentId requester = benchfix::node_name(nodes - 1);
  for (auto _ : state) {
    HuddleSelection sel = select_huddle_set(g, requester, activated, 3);
    benchmark::DoNotOptimize(sel.convened.size());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HuddleSelection)->Arg(16)->Arg(64)->Arg(256)->Complexity();

void BM_TopologyReport(benchmark::State& state) {
  const WorkflowGraph g =
      build_graph(parse_workflow(benchfix::layered_doc(static_cast<int>(state.range(0)))));
  for (auto _ : state) {
    TopologyReport report = topology_report(g, false);
    benchmark::DoNotOptimize(report.hierarchy);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TopologyReport)->Arg(16)->Arg(64)->Arg(256)->Complexity();

}  // namespace
