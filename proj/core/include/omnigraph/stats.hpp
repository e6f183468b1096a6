#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "omnigraph/errors.hpp"
#include "omnigraph/ext/json.hpp"

namespace omnigraph {

// ---------------------------------------------------------------------------
// Ratings ingestion and dimension reduction
// ---------------------------------------------------------------------------

/// The twelve rating items, in CSV column order.
const std::vector<std::string>& rating_item_names();

/// The six reporting dimensions, in canonical table order.
const std::vector<std::string>& dimension_names();

/// Exact required CSV header line.
const char* ratings_csv_header();

/// One questionnaire response: a rater scoring one model's output for one
/// prompt on all twelve items (integers in [1,5]).
struct RatingRecord {
  std::string rater_id;
  std::string cohort;  // "audience" | "expert"
  std::string prompt;
  std::string model;
  std::map<std::string, int> items;
};

/// Strict CSV ingestion: the header must match ratings_csv_header() exactly,
/// every row must have 16 fields, items must be integers in [1,5], cohort
/// must be audience|expert. Any defect aborts with DataError carrying the
/// 1-based row number (header is row 1).
std::vector<RatingRecord> load_ratings_csv(std::istream& in);
std::vector<RatingRecord> parse_ratings_csv(const std::string& text);

/// Reduce one record to its six dimension scores: NS = mean(SF, NC),
/// AT = mean(VQ, CC, PLC, VAQ), AE = mean(CT, AVR), RF = mean(NP, VAC),
/// EE = CD, OE = OQ.
std::map<std::string, double> dimension_scores(const RatingRecord& r);
double dimension_score(const RatingRecord& r, const std::string& dimension);

/// Per-rater, per-model dimension means across prompts (the subject-level
/// prompt average). A rater missing any prompt for a model is excluded for
/// that model, with a note appended to `exclusions`.
struct SubjectAverage {
  std::string rater_id;
  std::string cohort;
  std::string model;
  std::map<std::string, double> dims;
};
std::vector<SubjectAverage> subject_prompt_averages(const std::vector<RatingRecord>& records,
                                                    std::vector<std::string>& exclusions);

/// Complete-block matrix for rank tests: one row per (rater, prompt) block
/// that covers every model seen in `records`, one column per model
/// (lexicographic). Duplicate cells average; incomplete blocks are dropped
/// and listed in `excluded`. Restrict `records` beforehand to select a
/// cohort or a single prompt.
struct BlockMatrix {
  std::vector<std::string> treatments;        // sorted model names
  std::vector<std::string> blocks;            // "rater|prompt", sorted
  std::vector<std::vector<double>> values;    // blocks.size() × treatments.size()
  std::vector<std::string> excluded;          // dropped block keys
};
BlockMatrix build_blocks(const std::vector<RatingRecord>& records, const std::string& dimension);

// ---------------------------------------------------------------------------
// Descriptive statistics and cohort pooling
// ---------------------------------------------------------------------------

struct SampleStats {
  int n = 0;
  double mean = 0.0;
  double var = 0.0;  // unbiased (n−1); 0 when n < 2
  double sd() const;
};

SampleStats sample_stats(const std::vector<double>& xs);

/// Group-size-weighted pooling of two cohorts' summary statistics:
/// mean = (n_a·m_a + n_e·m_e)/(n_a+n_e) and variance combines within-group
/// sums of squares with between-group mean offsets over n_a+n_e−1 degrees of
/// freedom (exactly the flat sample variance of the concatenated data).
SampleStats pool_cohorts(const SampleStats& a, const SampleStats& b);

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

/// Upper tail of the chi-squared distribution with `df` degrees of freedom,
/// via the regularized incomplete gamma function (series / continued
/// fraction).
double chi2_sf(double x, int df);

/// Upper tail of the standard normal distribution.
double normal_sf(double z);

// ---------------------------------------------------------------------------
// Hypothesis tests
// ---------------------------------------------------------------------------

/// Uniform result shape for the rank tests.
struct TestResult {
  double statistic = 0.0;  // Friedman: tie-corrected χ²;  Wilcoxon: W+ rank sum
  int df = 0;
  double p = 1.0;
  double effect = 0.0;  // Friedman: Kendall's W = χ²/[n(k−1)];  Wilcoxon: rank-biserial
  int n = 0;            // blocks (Friedman) or pairs used (Wilcoxon)
  std::string method;
};

/// Friedman test over an n×k complete block matrix (n ≥ 2 blocks, k ≥ 2
/// treatments): within-block average ranks with shared ranks on ties,
/// tie-corrected χ² with df = k−1, p from chi2_sf. A fully tied matrix
/// degenerates to χ² = 0, p = 1.
TestResult friedman_test(const std::vector<std::vector<double>>& matrix);

/// Treatment of zero differences in the signed-rank test: drop them before
/// ranking (classical) or rank them and discard their rank contribution
/// (Pratt).
enum class ZeroPolicy { drop, pratt };

/// Paired Wilcoxon signed-rank test, two-sided. Ties share average ranks.
/// Exact p by full sign enumeration (dynamic program over doubled integer
/// ranks) for m ≤ 25 pairs; normal approximation with continuity correction
/// above. All-zero differences give the degenerate p = 1 result.
TestResult wilcoxon_signed_rank(const std::vector<double>& differences,
                                ZeroPolicy zeros = ZeroPolicy::drop);
TestResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y,
                                ZeroPolicy zeros = ZeroPolicy::drop);

/// Holm step-down adjustment; output in the input's order. Sorted ascending,
/// p_(i) becomes max over j ≤ i of min(1, (m−j+1)·p_(j)).
std::vector<double> holm_adjust(const std::vector<double>& pvalues);

// ---------------------------------------------------------------------------
// Baselines-vs-ours comparison
// ---------------------------------------------------------------------------

struct ComparisonResult {
  std::string dimension;
  double ours_mean = 0.0;
  double base_mean = 0.0;
  double delta = 0.0;  // ours_mean − base_mean
  double p = 1.0;
  int n = 0;                          // complete (rater, prompt) blocks
  std::vector<std::string> excluded;  // incomplete block keys
};

/// Per-block (rater, prompt) means over the `ours` models versus the
/// `baselines` models for one dimension, compared with a paired signed-rank
/// test. Within a block each model is averaged first, then the group of
/// models. Blocks missing any required model are excluded and listed.
ComparisonResult baseline_vs_ours(const std::vector<RatingRecord>& records,
                                  const std::vector<std::string>& baselines,
                                  const std::vector<std::string>& ours,
                                  const std::string& dimension,
                                  ZeroPolicy zeros = ZeroPolicy::drop);

// ---------------------------------------------------------------------------
// Counterbalancing designs
// ---------------------------------------------------------------------------

struct DesignResult {
  std::vector<std::vector<int>> rows;       // each a permutation of 0..k−1
  std::vector<std::vector<int>> carryover;  // [a][b] = times b follows a
  int imbalance = 0;                        // max − min over off-diagonal counts

  nlohmann::json to_json() const;
};

/// kind "latin": cyclic square, row i = (i, i+1, …) mod k. kind "williams":
/// row 0 interleaves 0, 1, k−1, 2, k−2, …; row i adds i mod k. Even k
/// balances every ordered adjacency exactly once; odd k cannot (the
/// imbalance field reports the spread).
DesignResult counterbalance_design(int k, const std::string& kind);

// ---------------------------------------------------------------------------
// Agreement
// ---------------------------------------------------------------------------

/// Cohen's κ between two equal-length categorical ratings.
double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace omnigraph
