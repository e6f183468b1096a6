#include "omnigraph/report.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace omnigraph {

namespace {

std::vector<std::string> sorted_cohorts(const std::vector<RatingRecord>& records) {
  std::set<std::string> cohorts;
  for (const RatingRecord& r : records) cohorts.insert(r.cohort);
  return {cohorts.begin(), cohorts.end()};
}

std::vector<std::string> sorted_prompts(const std::vector<RatingRecord>& records) {
  std::set<std::string> prompts;
  for (const RatingRecord& r : records) prompts.insert(r.prompt);
  return {prompts.begin(), prompts.end()};
}

std::vector<RatingRecord> filter(const std::vector<RatingRecord>& records,
                                 const std::string& cohort, const std::string& prompt) {
  std::vector<RatingRecord> out;
  for (const RatingRecord& r : records) {
    if (!cohort.empty() && r.cohort != cohort) continue;
    if (!prompt.empty() && r.prompt != prompt) continue;
    out.push_back(r);
  }
  return out;
}

bool wants(const EvalOptions& options, const std::string& test) {
  return std::find(options.tests.begin(), options.tests.end(), test) != options.tests.end();
}

}  // namespace

std::vector<nlohmann::json> eval_report(const std::vector<RatingRecord>& records,
                                        const EvalOptions& options) {
  std::vector<nlohmann::json> rows;
  std::set<std::pair<std::string, std::string>> exclusions;  // (context, detail)

  const std::vector<std::string> cohorts = sorted_cohorts(records);
  const std::vector<std::string> prompts = sorted_prompts(records);
  // Analysis groups: one per prompt, or a single prompt-pooled group whose
  // blocks are (rater, prompt) pairs.
  std::vector<std::string> groups;
  if (options.group_by == "pooled") {
    groups = {"pooled"};
  } else {
    groups = prompts;
  }

  // --- aggregation (always emitted) ---------------------------------------
  std::vector<std::string> subject_exclusions;
  const std::vector<SubjectAverage> averages =
      subject_prompt_averages(records, subject_exclusions);
  for (const std::string& note : subject_exclusions) {
    exclusions.insert({"subject_average", note});
  }
  for (const SubjectAverage& avg : averages) {
    for (const std::string& dim : dimension_names()) {
      rows.push_back({{"table", "subject_averages"},
                      {"cohort", avg.cohort},
                      {"rater_id", avg.rater_id},
                      {"model", avg.model},
                      {"dimension", dim},
                      {"value", avg.dims.at(dim)}});
    }
  }

  // Per-cohort per-model descriptive stats over the subject averages, kept
  // for the cohort-pooled table below.
  std::map<std::pair<std::string, std::string>, std::map<std::string, SampleStats>> cohort_stats;
  {
    std::set<std::string> models;
    for (const SubjectAverage& avg : averages) models.insert(avg.model);
    for (const std::string& cohort : cohorts) {
      for (const std::string& model : models) {
        for (const std::string& dim : dimension_names()) {
          std::vector<double> values;
          for (const SubjectAverage& avg : averages) {
            if (avg.cohort == cohort && avg.model == model) values.push_back(avg.dims.at(dim));
          }
          if (values.empty()) continue;
          const SampleStats stats = sample_stats(values);
          cohort_stats[{model, dim}][cohort] = stats;
          nlohmann::json row{{"table", "means"},    {"cohort", cohort},
                             {"model", model},      {"dimension", dim},
                             {"n", stats.n},        {"mean", stats.mean}};
          if (stats.n >= 2) {
            row["sd"] = stats.sd();
          } else {
            row["sd"] = nullptr;
          }
          rows.push_back(std::move(row));
        }
      }
    }
    for (const auto& [key, by_cohort] : cohort_stats) {
      bool first = true;
      SampleStats pooled;
      for (const auto& [cohort, stats] : by_cohort) {
        (void)cohort;
        pooled = first ? stats : pool_cohorts(pooled, stats);
        first = false;
      }
      nlohmann::json row{{"table", "pooled_means"},
                         {"model", key.first},
                         {"dimension", key.second},
                         {"n", pooled.n},
                         {"mean", pooled.mean}};
      if (pooled.n >= 2) {
        row["sd"] = pooled.sd();
      } else {
        row["sd"] = nullptr;
      }
      rows.push_back(std::move(row));
    }
  }

  // --- friedman ------------------------------------------------------------
  if (wants(options, "friedman")) {
    for (const std::string& cohort : cohorts) {
      for (const std::string& group : groups) {
        const std::vector<RatingRecord> scoped =
            filter(records, cohort, group == "pooled" ? "" : group);
        for (const std::string& dim : dimension_names()) {
          const BlockMatrix matrix = build_blocks(scoped, dim);
          if (dim == dimension_names().front()) {  // completeness is dimension-independent
            for (const std::string& block : matrix.excluded) {
              exclusions.insert({"blocks", "cohort " + cohort + " group " + group + ": block " +
                                               block + " incomplete"});
            }
          }
          if (matrix.blocks.size() < 2 || matrix.treatments.size() < 2) {
            exclusions.insert({"friedman", "cohort " + cohort + " group " + group + " dimension " +
                                               dim + ": fewer than 2 complete blocks"});
            continue;
          }
          const TestResult result = friedman_test(matrix.values);
          rows.push_back({{"table", "friedman"},
                          {"cohort", cohort},
                          {"prompt", group},
                          {"dimension", dim},
                          {"chi2", result.statistic},
                          {"df", result.df},
                          {"p", result.p},
                          {"effect", result.effect},
                          {"n", result.n},
                          {"k", static_cast<int>(matrix.treatments.size())},
                          {"method", result.method}});
        }
      }
    }
  }

  // --- pairwise wilcoxon with Holm family per cohort × group × dimension ---
  if (wants(options, "wilcoxon")) {
    for (const std::string& cohort : cohorts) {
      for (const std::string& group : groups) {
        const std::vector<RatingRecord> scoped =
            filter(records, cohort, group == "pooled" ? "" : group);
        for (const std::string& dim : dimension_names()) {
          const BlockMatrix matrix = build_blocks(scoped, dim);
          const std::size_t k = matrix.treatments.size();
          if (matrix.blocks.empty() || k < 2) {
            exclusions.insert({"wilcoxon", "cohort " + cohort + " group " + group +
                                               " dimension " + dim + ": no complete blocks"});
            continue;
          }
          std::vector<nlohmann::json> pair_rows;
          std::vector<double> pvalues;
          for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = a + 1; b < k; ++b) {
              std::vector<double> x;
              std::vector<double> y;
              for (const auto& row : matrix.values) {
                x.push_back(row[a]);
                y.push_back(row[b]);
              }
              const TestResult result = wilcoxon_signed_rank(x, y, options.zeros);
              pair_rows.push_back({{"table", "wilcoxon"},
                                   {"cohort", cohort},
                                   {"prompt", group},
                                   {"dimension", dim},
                                   {"model_a", matrix.treatments[a]},
                                   {"model_b", matrix.treatments[b]},
                                   {"statistic", result.statistic},
                                   {"p", result.p},
                                   {"n", result.n},
                                   {"method", result.method}});
              pvalues.push_back(result.p);
            }
          }
          const std::vector<double> adjusted = holm_adjust(pvalues);
          for (std::size_t i = 0; i < pair_rows.size(); ++i) {
            pair_rows[i]["p_holm"] = adjusted[i];
            rows.push_back(std::move(pair_rows[i]));
          }
        }
      }
    }
  }

  // --- baselines vs ours ----------------------------------------------------
  if (wants(options, "bvo")) {
    for (const std::string& cohort : cohorts) {
      for (const std::string& group : groups) {
        const std::vector<RatingRecord> scoped =
            filter(records, cohort, group == "pooled" ? "" : group);
        for (const std::string& dim : dimension_names()) {
          const ComparisonResult result =
              baseline_vs_ours(scoped, options.baselines, options.ours, dim, options.zeros);
          if (dim == dimension_names().front()) {
            for (const std::string& block : result.excluded) {
              exclusions.insert({"bvo", "cohort " + cohort + " group " + group + ": block " +
                                            block + " incomplete"});
            }
          }
          if (result.n == 0) {
            exclusions.insert({"bvo", "cohort " + cohort + " group " + group + " dimension " +
                                          dim + ": no complete blocks"});
            continue;
          }
          rows.push_back({{"table", "bvo"},
                          {"cohort", cohort},
                          {"prompt", group},
                          {"dimension", dim},
                          {"ours_mean", result.ours_mean},
                          {"base_mean", result.base_mean},
                          {"delta", result.delta},
                          {"p", result.p},
                          {"n", result.n}});
        }
      }
    }
  }

  for (const auto& [context, detail] : exclusions) {
    rows.push_back({{"table", "exclusions"}, {"context", context}, {"detail", detail}});
  }
  return rows;
}

}  // namespace omnigraph
