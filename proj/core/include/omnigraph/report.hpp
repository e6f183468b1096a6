#pragma once

#include <string>
#include <vector>

#include "omnigraph/ext/json.hpp"
#include "omnigraph/stats.hpp"

namespace omnigraph {

/// Configuration for one evaluation report.
struct EvalOptions {
  std::vector<std::string> tests;   // subset of {"friedman", "wilcoxon", "bvo"}
  std::string group_by = "prompt";  // "prompt": per-prompt rows; "pooled": blocks = rater×prompt
  ZeroPolicy zeros = ZeroPolicy::drop;
  std::vector<std::string> baselines = {"aipai", "video_ocean"};
  std::vector<std::string> ours = {"setting1_flat", "setting2_hier_no_ctx", "setting3_full"};
};

/// Build the full evaluation report as flat JSON rows, each tagged with a
/// "table" field. Always emitted: "subject_averages" (per-rater per-model
/// dimension means across prompts), "means" (per cohort × model × dimension
/// over raters), "pooled_means" (cohorts pooled with group-size weighting).
/// Per requested test: "friedman" rows per cohort × group × dimension,
/// "wilcoxon" pairwise model rows with Holm-adjusted p within each
/// cohort × group × dimension family, and "bvo" baseline-vs-ours rows.
/// Exclusions (incomplete blocks) land in deduplicated "exclusions" rows at
/// the end. Row order is deterministic.
std::vector<nlohmann::json> eval_report(const std::vector<RatingRecord>& records,
                                        const EvalOptions& options);

}  // namespace omnigraph
