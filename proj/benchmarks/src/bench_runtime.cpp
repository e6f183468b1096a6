#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "omnigraph/graph.hpp"
#include "omnigraph/runtime.hpp"
#include "omnigraph/scheduler.hpp"
#include "omnigraph/store.hpp"

namespace {

using namespace omnigraph;

void BM_FilmPipelineRun(benchmark::State& state) {
  const nlohmann::json doc_json = film_pipeline_template();
  for (auto _ : state) {
    WorkflowDoc doc = parse_workflow(doc_json);
    doc.config.seed = 7;
    WorkflowGraph g = build_graph(doc);
    Store store;
    TraceLog trace;
    Registry registry = make_mock_registry();
    registry.set_seed(doc.config.seed);
    WorkflowResult result = run_workflow(g, store, registry, trace);
    benchmark::DoNotOptimize(result.rounds_executed);
  }
}
BENCHMARK(BM_FilmPipelineRun);

void BM_LayeredWorkflowRun(benchmark::State& state) {
  const nlohmann::json doc_json = benchfix::layered_doc(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    WorkflowDoc doc = parse_workflow(doc_json);
    WorkflowGraph g = build_graph(doc);
    Store store;
    TraceLog trace;
    Registry registry = make_mock_registry();
    WorkflowResult result = run_workflow(g, store, registry, trace);
    benchmark::DoNotOptimize(result.rounds_executed);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LayeredWorkflowRun)->Arg(8)->Arg(32)->Arg(64)->Complexity();

void BM_TraceReplay(benchmark::State& state) {
  WorkflowDoc doc = parse_workflow(film_pipeline_template());
  doc.config.seed = 7;
  WorkflowGraph g = build_graph(doc);
  Store store;
  TraceLog trace;
  Registry registry = make_mock_registry();
  registry.set_seed(doc.config.seed);
  run_workflow(g, store, registry, trace);
  for (auto _ : state) {
    Store replayed = replay_trace(trace);
    benchmark::DoNotOptimize(replayed.canonical_json().size());
  }
}
BENCHMARK(BM_TraceReplay);

}  // namespace
