#include <benchmark/benchmark.h>

// Entry point generated in-tree: the prebuilt benchmark_main archive on some
// toolchains carries LTO bytecode tied to one compiler patch level, so we
// expand the macro ourselves and only link the shared library.
BENCHMARK_MAIN();
