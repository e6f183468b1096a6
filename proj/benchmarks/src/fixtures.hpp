#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"

namespace benchfix {

inline std::string node_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "n%03d", i);
  return buf;
}

/// Deterministic layered workflow document: a spine chain plus skip edges
/// every third node and a feedback edge from each quarter mark back to the
/// start of its quarter. Size scales linearly with `nodes`.
inline nlohmann::json layered_doc(int nodes) {
  nlohmann::json agents = nlohmann::json::array();
  for (int i = 0; i < nodes; ++i) {
    agents.push_back({{"id", node_name(i)},
                      {"role_label", node_name(i)},
                      {"stage", "stage" + std::to_string(i)},
                      {"tools", nlohmann::json::array()},
                      {"reasoning_ref", "stage_echo"}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (int i = 0; i + 1 < nodes; ++i) {
    edges.push_back({{"source", node_name(i)}, {"target", node_name(i + 1)}});
  }
  for (int i = 0; i + 3 < nodes; i += 3) {
    edges.push_back({{"source", node_name(i)}, {"target", node_name(i + 3)}});
  }
  const int quarter = nodes / 4;
  if (quarter >= 2) {
    for (int q = 1; q <= 3; ++q) {
      const int source = q * quarter;
      const int target = (q - 1) * quarter;
      if (source < nodes && source > target) {
        edges.push_back(
            {{"source", node_name(source)}, {"target", node_name(target)}, {"retry_budget", 2}});
      }
    }
  }
  return {{"agents", agents}, {"edges", edges}, {"max_rounds", 4 * nodes + 16}};
}

}  // namespace benchfix
