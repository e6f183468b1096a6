#include "omnigraph/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>
#include <utility>

namespace omnigraph {

namespace {

const std::vector<std::string> kItems = {"SF", "NC",  "VQ", "CC",  "PLC", "VAQ",
                                         "CT", "AVR", "NP", "VAC", "CD",  "OQ"};
const std::vector<std::string> kDimensions = {"NS", "AT", "AE", "RF", "EE", "OE"};
const std::map<std::string, std::vector<std::string>> kComposition = {
    {"NS", {"SF", "NC"}},  {"AT", {"VQ", "CC", "PLC", "VAQ"}}, {"AE", {"CT", "AVR"}},
    {"RF", {"NP", "VAC"}}, {"EE", {"CD"}},                     {"OE", {"OQ"}},
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Average ranks (1-based, ties share the mean rank) of `values`.
std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t pos = i; pos <= j; ++pos) ranks[order[pos]] = shared;
    i = j + 1;
  }
  return ranks;
}

/// Doubled average ranks — always integers, so the exact enumeration in the
/// signed-rank test stays in integer arithmetic.
std::vector<long long> doubled_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<long long> ranks(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const long long shared = static_cast<long long>(i + 1) + static_cast<long long>(j + 1);
    for (std::size_t pos = i; pos <= j; ++pos) ranks[order[pos]] = shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

const std::vector<std::string>& rating_item_names() { return kItems; }
const std::vector<std::string>& dimension_names() { return kDimensions; }

const char* ratings_csv_header() {
  return "rater_id,cohort,prompt,model,SF,NC,VQ,CC,PLC,VAQ,CT,AVR,NP,VAC,CD,OQ";
}

std::vector<RatingRecord> load_ratings_csv(std::istream& in) {
  std::vector<RatingRecord> records;
  std::string line;
  std::size_t row = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    row += 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != ratings_csv_header()) {
        throw DataError("ratings header must be exactly '" + std::string(ratings_csv_header()) +
                            "', got '" + line + "'",
                        row);
      }
      header_seen = true;
      continue;
    }
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 16) {
      throw DataError("expected 16 fields, got " + std::to_string(fields.size()), row);
    }
    RatingRecord r;
    r.rater_id = fields[0];
    r.cohort = fields[1];
    r.prompt = fields[2];
    r.model = fields[3];
    if (r.rater_id.empty()) throw DataError("empty rater_id", row);
    if (r.cohort != "audience" && r.cohort != "expert") {
      throw DataError("cohort must be 'audience' or 'expert', got '" + r.cohort + "'", row);
    }
    if (r.prompt.empty()) throw DataError("empty prompt", row);
    if (r.model.empty()) throw DataError("empty model", row);
    for (std::size_t i = 0; i < kItems.size(); ++i) {
      const std::string& raw = fields[4 + i];
      if (raw.empty() || raw.find_first_not_of("0123456789") != std::string::npos) {
        throw DataError("item " + kItems[i] + " must be an integer, got '" + raw + "'", row);
      }
      const int value = std::stoi(raw);
      if (value < 1 || value > 5) {
        throw DataError("item " + kItems[i] + " out of range [1,5]: " + raw, row);
      }
      r.items[kItems[i]] = value;
    }
    records.push_back(std::move(r));
  }
  if (!header_seen) throw DataError("empty ratings file: missing header", 1);
  return records;
}

std::vector<RatingRecord> parse_ratings_csv(const std::string& text) {
  std::istringstream in(text);
  return load_ratings_csv(in);
}

std::map<std::string, double> dimension_scores(const RatingRecord& r) {
  std::map<std::string, double> out;
  for (const auto& [dim, items] : kComposition) {
    double sum = 0.0;
    for (const std::string& item : items) {
      auto it = r.items.find(item);
      if (it == r.items.end()) throw DataError("record missing item " + item);
      sum += it->second;
    }
    out[dim] = sum / static_cast<double>(items.size());
  }
  return out;
}

double dimension_score(const RatingRecord& r, const std::string& dimension) {
  auto it = kComposition.find(dimension);
  if (it == kComposition.end()) throw DataError("unknown dimension '" + dimension + "'");
  double sum = 0.0;
  for (const std::string& item : it->second) {
    auto found = r.items.find(item);
    if (found == r.items.end()) throw DataError("record missing item " + item);
    sum += found->second;
  }
  return sum / static_cast<double>(it->second.size());
}

std::vector<SubjectAverage> subject_prompt_averages(const std::vector<RatingRecord>& records,
                                                    std::vector<std::string>& exclusions) {
  std::set<std::string> prompt_universe;
  for (const RatingRecord& r : records) prompt_universe.insert(r.prompt);

  // (cohort, rater, model) -> prompt -> per-dimension scores of each record
  std::map<std::tuple<std::string, std::string, std::string>,
           std::map<std::string, std::vector<std::map<std::string, double>>>>
      groups;
  for (const RatingRecord& r : records) {
    groups[{r.cohort, r.rater_id, r.model}][r.prompt].push_back(dimension_scores(r));
  }

  std::vector<SubjectAverage> out;
  for (const auto& [key, by_prompt] : groups) {
    std::vector<std::string> missing;
    for (const std::string& prompt : prompt_universe) {
      if (by_prompt.find(prompt) == by_prompt.end()) missing.push_back(prompt);
    }
    if (!missing.empty()) {
      std::string joined;
      for (const std::string& m : missing) joined += (joined.empty() ? "" : ", ") + m;
      exclusions.push_back("rater '" + std::get<1>(key) + "' model '" + std::get<2>(key) +
                           "': missing prompt(s) " + joined);
      continue;
    }
    SubjectAverage avg;
    avg.cohort = std::get<0>(key);
    avg.rater_id = std::get<1>(key);
    avg.model = std::get<2>(key);
    for (const std::string& dim : kDimensions) {
      std::vector<double> per_prompt;
      for (const auto& [prompt, scores] : by_prompt) {
        (void)prompt;
        std::vector<double> vals;
        for (const auto& s : scores) vals.push_back(s.at(dim));
        per_prompt.push_back(mean_of(vals));
      }
      avg.dims[dim] = mean_of(per_prompt);
    }
    out.push_back(std::move(avg));
  }
  return out;
}

BlockMatrix build_blocks(const std::vector<RatingRecord>& records, const std::string& dimension) {
  BlockMatrix matrix;
  std::set<std::string> models;
  for (const RatingRecord& r : records) models.insert(r.model);
  matrix.treatments.assign(models.begin(), models.end());

  // "rater|prompt" -> model -> observed scores
  std::map<std::string, std::map<std::string, std::vector<double>>> blocks;
  for (const RatingRecord& r : records) {
    blocks[r.rater_id + "|" + r.prompt][r.model].push_back(dimension_score(r, dimension));
  }
  for (const auto& [key, by_model] : blocks) {
    std::vector<double> row;
    bool complete = true;
    for (const std::string& model : matrix.treatments) {
      auto it = by_model.find(model);
      if (it == by_model.end()) {
        complete = false;
        break;
      }
      row.push_back(mean_of(it->second));
    }
    if (complete) {
      matrix.blocks.push_back(key);
      matrix.values.push_back(std::move(row));
    } else {
      matrix.excluded.push_back(key);
    }
  }
  return matrix;
}

double SampleStats::sd() const { return std::sqrt(var); }

SampleStats sample_stats(const std::vector<double>& xs) {
  SampleStats s;
  s.n = static_cast<int>(xs.size());
  if (s.n == 0) return s;
  s.mean = mean_of(xs);
  if (s.n >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.var = ss / static_cast<double>(s.n - 1);
  }
  return s;
}

SampleStats pool_cohorts(const SampleStats& a, const SampleStats& b) {
  if (a.n < 1 || b.n < 1) throw DataError("cohort pooling requires n >= 1 in both groups");
  SampleStats pooled;
  pooled.n = a.n + b.n;
  pooled.mean = (a.n * a.mean + b.n * b.mean) / static_cast<double>(pooled.n);
  const double between_a = a.n * (a.mean - pooled.mean) * (a.mean - pooled.mean);
  const double between_b = b.n * (b.mean - pooled.mean) * (b.mean - pooled.mean);
  pooled.var = ((a.n - 1) * a.var + (b.n - 1) * b.var + between_a + between_b) /
               static_cast<double>(pooled.n - 1);
  return pooled;
}

namespace {

/// Regularized lower incomplete gamma P(a, x) by its power series; valid and
/// fast for x < a + 1.
double lower_gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/// Regularized upper incomplete gamma Q(a, x) by a modified-Lentz continued
/// fraction; valid and fast for x >= a + 1.
double upper_gamma_fraction(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double chi2_sf(double x, int df) {
  if (df < 1) throw DataError("chi-squared needs df >= 1, got " + std::to_string(df));
  if (!(x > 0.0)) return 1.0;
  if (std::isinf(x)) return 0.0;
  const double a = df / 2.0;
  const double s = x / 2.0;
  if (s < a + 1.0) return std::max(0.0, 1.0 - lower_gamma_series(a, s));
  return upper_gamma_fraction(a, s);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

TestResult friedman_test(const std::vector<std::vector<double>>& matrix) {
  const std::size_t n = matrix.size();
  if (n < 2) throw DataError("friedman test requires at least 2 blocks");
  const std::size_t k = matrix[0].size();
  if (k < 2) throw DataError("friedman test requires at least 2 treatments");
  for (const auto& row : matrix) {
    if (row.size() != k) throw DataError("friedman matrix is ragged");
  }

  std::vector<double> rank_sum(k, 0.0);
  double tie_sum = 0.0;  // Σ over tie groups of t³ − t
  for (const auto& row : matrix) {
    const std::vector<double> ranks = average_ranks(row);
    for (std::size_t j = 0; j < k; ++j) rank_sum[j] += ranks[j];
    std::vector<double> sorted(row);
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < k) {
      std::size_t j = i;
      while (j + 1 < k && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_sum += t * t * t - t;
      i = j + 1;
    }
  }

  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  double sum_sq = 0.0;
  for (double r : rank_sum) sum_sq += r * r;
  const double uncorrected = 12.0 / (nd * kd * (kd + 1.0)) * sum_sq - 3.0 * nd * (kd + 1.0);
  const double correction = 1.0 - tie_sum / (nd * kd * (kd * kd - 1.0));

  TestResult result;
  result.df = static_cast<int>(k) - 1;
  result.n = static_cast<int>(n);
  if (correction <= 0.0) {  // every block fully tied: no information
    result.statistic = 0.0;
    result.p = 1.0;
    result.effect = 0.0;
    result.method = "friedman_degenerate";
    return result;
  }
  result.statistic = uncorrected / correction;
  result.p = chi2_sf(result.statistic, result.df);
  result.effect = result.statistic / (nd * (kd - 1.0));
  result.method = "friedman";
  return result;
}

TestResult wilcoxon_signed_rank(const std::vector<double>& differences, ZeroPolicy zeros) {
  if (differences.empty()) throw DataError("signed-rank test requires at least 1 pair");
  std::vector<double> nonzero;
  for (double d : differences) {
    if (d != 0.0) nonzero.push_back(d);
  }
  const std::size_t m = nonzero.size();
  if (m == 0) {
    TestResult degenerate;
    degenerate.statistic = 0.0;
    degenerate.p = 1.0;
    degenerate.n = 0;
    degenerate.method = "wilcoxon_degenerate";
    return degenerate;
  }

  // Doubled average ranks of |d| stay integral even with ties, keeping the
  // exact enumeration in integer arithmetic. Under the Pratt policy zeros
  // participate in the ranking but contribute to neither rank sum.
  std::vector<long long> rd;  // aligned with `nonzero`
  if (zeros == ZeroPolicy::drop) {
    std::vector<double> magnitudes;
    for (double d : nonzero) magnitudes.push_back(std::fabs(d));
    rd = doubled_ranks(magnitudes);
  } else {
    std::vector<double> magnitudes;
    for (double d : differences) magnitudes.push_back(std::fabs(d));
    const std::vector<long long> all_ranks = doubled_ranks(magnitudes);
    for (std::size_t i = 0; i < differences.size(); ++i) {
      if (differences[i] != 0.0) rd.push_back(all_ranks[i]);
    }
  }

  long long wd_plus = 0;
  long long total_d = 0;
  for (std::size_t i = 0; i < m; ++i) {
    total_d += rd[i];
    if (nonzero[i] > 0.0) wd_plus += rd[i];
  }

  TestResult result;
  result.statistic = static_cast<double>(wd_plus) / 2.0;
  result.effect =
      static_cast<double>(2 * wd_plus - total_d) / static_cast<double>(total_d);  // rank-biserial
  result.n = static_cast<int>(m);

  if (m <= 25) {
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(total_d) + 1, 0);
    counts[0] = 1;
    for (std::size_t i = 0; i < m; ++i) {
      for (long long s = total_d; s >= rd[i]; --s) {
        counts[static_cast<std::size_t>(s)] += counts[static_cast<std::size_t>(s - rd[i])];
      }
    }
    const long long observed_distance = std::llabs(2 * wd_plus - total_d);
    std::uint64_t favorable = 0;
    std::uint64_t total = 0;
    for (long long s = 0; s <= total_d; ++s) {
      const std::uint64_t c = counts[static_cast<std::size_t>(s)];
      if (c == 0) continue;
      total += c;
      if (std::llabs(2 * s - total_d) >= observed_distance) favorable += c;
    }
    result.p = static_cast<double>(favorable) / static_cast<double>(total);
    result.method = "wilcoxon_exact";
  } else {
    const double w = static_cast<double>(wd_plus) / 2.0;
    const double mu = static_cast<double>(total_d) / 4.0;
    double variance = 0.0;
    for (long long r : rd) {
      const double single = static_cast<double>(r) / 2.0;
      variance += single * single;
    }
    variance /= 4.0;
    const double dev = w - mu;
    double z = 0.0;
    if (std::fabs(dev) > 0.5) {  // continuity correction shrinks toward the mean
      z = (dev - (dev > 0.0 ? 0.5 : -0.5)) / std::sqrt(variance);
    }
    result.p = std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
    result.method = "wilcoxon_normal";
  }
  return result;
}

TestResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y,
                                ZeroPolicy zeros) {
  if (x.size() != y.size()) throw DataError("paired samples must have equal length");
  std::vector<double> diffs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) diffs[i] = x[i] - y[i];
  return wilcoxon_signed_rank(diffs, zeros);
}

std::vector<double> holm_adjust(const std::vector<double>& pvalues) {
  const std::size_t m = pvalues.size();
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("p-value outside [0,1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
  std::vector<double> adjusted(m, 0.0);
  double running_max = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double scaled = std::min(1.0, static_cast<double>(m - j) * pvalues[order[j]]);
    running_max = std::max(running_max, scaled);
    adjusted[order[j]] = running_max;
  }
  return adjusted;
}

ComparisonResult baseline_vs_ours(const std::vector<RatingRecord>& records,
                                  const std::vector<std::string>& baselines,
                                  const std::vector<std::string>& ours,
                                  const std::string& dimension, ZeroPolicy zeros) {
  if (baselines.empty() || ours.empty()) {
    throw DataError("baseline-vs-ours needs a non-empty model list on both sides");
  }
  for (const std::string& model : baselines) {
    if (std::find(ours.begin(), ours.end(), model) != ours.end()) {
      throw DataError("model '" + model + "' appears in both groups");
    }
  }

  // "rater|prompt" -> model -> observed scores
  std::map<std::string, std::map<std::string, std::vector<double>>> blocks;
  for (const RatingRecord& r : records) {
    blocks[r.rater_id + "|" + r.prompt][r.model].push_back(dimension_score(r, dimension));
  }

  ComparisonResult result;
  result.dimension = dimension;
  std::vector<double> ours_values;
  std::vector<double> base_values;
  for (const auto& [key, by_model] : blocks) {
    bool complete = true;
    for (const std::string& model : baselines) complete &= by_model.count(model) != 0;
    for (const std::string& model : ours) complete &= by_model.count(model) != 0;
    if (!complete) {
      result.excluded.push_back(key);
      continue;
    }
    // Models pool before blocks: each model averages its own observations,
    // then the group averages its models.
    std::vector<double> per_model;
    for (const std::string& model : ours) per_model.push_back(mean_of(by_model.at(model)));
    ours_values.push_back(mean_of(per_model));
    per_model.clear();
    for (const std::string& model : baselines) per_model.push_back(mean_of(by_model.at(model)));
    base_values.push_back(mean_of(per_model));
  }

  result.n = static_cast<int>(ours_values.size());
  if (result.n == 0) return result;
  result.ours_mean = mean_of(ours_values);
  result.base_mean = mean_of(base_values);
  result.delta = result.ours_mean - result.base_mean;
  result.p = wilcoxon_signed_rank(ours_values, base_values, zeros).p;
  return result;
}

nlohmann::json DesignResult::to_json() const {
  return nlohmann::json{{"rows", rows}, {"carryover", carryover}, {"imbalance", imbalance}};
}

DesignResult counterbalance_design(int k, const std::string& kind) {
  if (k < 1) throw DataError("design size must be >= 1, got " + std::to_string(k));
  if (kind != "latin" && kind != "williams") {
    throw DataError("unknown design kind '" + kind + "' (expected latin or williams)");
  }
  DesignResult design;
  if (kind == "latin") {
    for (int i = 0; i < k; ++i) {
      std::vector<int> row(k);
      for (int j = 0; j < k; ++j) row[j] = (i + j) % k;
      design.rows.push_back(std::move(row));
    }
  } else {
    std::vector<int> base(k);
    for (int j = 0; j < k; ++j) {
      base[j] = (j % 2 == 1) ? (j + 1) / 2 : (j == 0 ? 0 : k - j / 2);
    }
    for (int i = 0; i < k; ++i) {
      std::vector<int> row(k);
      for (int j = 0; j < k; ++j) row[j] = (base[j] + i) % k;
      design.rows.push_back(std::move(row));
    }
  }

  design.carryover.assign(k, std::vector<int>(k, 0));
  for (const auto& row : design.rows) {
    for (int j = 0; j + 1 < k; ++j) design.carryover[row[j]][row[j + 1]] += 1;
  }
  int min_count = 0;
  int max_count = 0;
  bool first = true;
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      if (a == b) continue;
      const int c = design.carryover[a][b];
      if (first) {
        min_count = max_count = c;
        first = false;
      } else {
        min_count = std::min(min_count, c);
        max_count = std::max(max_count, c);
      }
    }
  }
  design.imbalance = first ? 0 : max_count - min_count;
  return design;
}

double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DataError("kappa requires equal-length ratings");
  if (a.empty()) throw DataError("kappa requires at least one rating");
  const double n = static_cast<double>(a.size());
  std::map<int, int> count_a;
  std::map<int, int> count_b;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    count_a[a[i]] += 1;
    count_b[b[i]] += 1;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double po = agree / n;
  double pe = 0.0;
  for (const auto& [category, ca] : count_a) {
    auto it = count_b.find(category);
    if (it != count_b.end()) pe += (ca / n) * (it->second / n);
  }
  if (1.0 - pe < 1e-15) return 1.0;  // both raters constant and identical
  return (po - pe) / (1.0 - pe);
}

}  // namespace omnigraph
