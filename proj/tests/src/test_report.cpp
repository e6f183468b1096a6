#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "omnigraph/report.hpp"
#include "omnigraph/stats.hpp"

using namespace omnigraph;
using nlohmann::json;

namespace {

const std::vector<std::string> kRatersAudience{"r1", "r2", "r3"};
const std::vector<std::string> kRatersExpert{"e1", "e2"};
const std::vector<std::string> kPrompts{"P1", "P2"};
const std::vector<std::string> kModels{"m1", "m2", "m3"};

RatingRecord synth_record(std::size_t rater_index, const std::string& rater,
                          const std::string& cohort, std::size_t prompt_index,
                          std::size_t model_index) {
  RatingRecord r;
  r.rater_id = rater;
  r.cohort = cohort;
  r.prompt = kPrompts[prompt_index];
  r.model = kModels[model_index];
  const int v = static_cast<int>((rater_index + 2 * prompt_index + model_index) % 5) + 1;
  const int w = static_cast<int>((rater_index + prompt_index + 2 * model_index) % 5) + 1;
  for (const std::string& item : rating_item_names()) r.items[item] = v;
  r.items["CD"] = w;  // decouple one dimension from the rest
  return r;
}

/// Complete 2-cohort, 2-prompt, 3-model grid. With `drop_gap`, rater r3 loses
/// its (P2, m2) response, producing every exclusion flavour downstream.
std::vector<RatingRecord> synth_records(bool drop_gap) {
  std::vector<RatingRecord> records;
  std::size_t rater_index = 0;
  auto add_cohort = [&](const std::vector<std::string>& raters, const std::string& cohort) {
    for (const std::string& rater : raters) {
      for (std::size_t p = 0; p < kPrompts.size(); ++p) {
        for (std::size_t m = 0; m < kModels.size(); ++m) {
          if (drop_gap && rater == "r3" && kPrompts[p] == "P2" && kModels[m] == "m2") continue;
          records.push_back(synth_record(rater_index, rater, cohort, p, m));
        }
      }
      ++rater_index;
    }
  };
  add_cohort(kRatersAudience, "audience");
  add_cohort(kRatersExpert, "expert");
  return records;
}

std::vector<RatingRecord> filter_records(const std::vector<RatingRecord>& records,
                                         const std::string& cohort, const std::string& prompt) {
  std::vector<RatingRecord> out;
  for (const RatingRecord& r : records) {
    if (!cohort.empty() && r.cohort != cohort) continue;
    if (!prompt.empty() && r.prompt != prompt) continue;
    out.push_back(r);
  }
  return out;
}

std::vector<json> rows_of(const std::vector<json>& rows, const std::string& table) {
  std::vector<json> out;
  for (const json& row : rows) {
    if (row.at("table") == table) out.push_back(row);
  }
  return out;
}

std::vector<json> match(const std::vector<json>& rows, const json& criteria) {
  std::vector<json> out;
  for (const json& row : rows) {
    bool ok = true;
    for (const auto& [key, value] : criteria.items()) {
      if (!row.contains(key) || row.at(key) != value) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(row);
  }
  return out;
}

std::set<std::string> keys_of(const json& row) {
  std::set<std::string> keys;
  for (const auto& [key, value] : row.items()) {
    (void)value;
    keys.insert(key);
  }
  return keys;
}

}  // namespace

TEST_CASE("default options run no tests: aggregation tables only") {
  const std::vector<RatingRecord> records = synth_records(false);
  EvalOptions options;
  CHECK(options.tests.empty());
  CHECK(options.group_by == "prompt");
  CHECK(options.baselines == std::vector<std::string>{"aipai", "video_ocean"});
  CHECK(options.ours ==
        std::vector<std::string>{"setting1_flat", "setting2_hier_no_ctx", "setting3_full"});

  const std::vector<json> rows = eval_report(records, options);
  std::set<std::string> tables;
  for (const json& row : rows) tables.insert(row.at("table").get<std::string>());
  CHECK(tables == std::set<std::string>{"subject_averages", "means", "pooled_means"});

  // 5 raters x 3 models x 6 dimensions.
  CHECK(rows_of(rows, "subject_averages").size() == 90);
  // 2 cohorts x 3 models x 6 dimensions.
  CHECK(rows_of(rows, "means").size() == 36);
  // 3 models x 6 dimensions.
  CHECK(rows_of(rows, "pooled_means").size() == 18);
}

TEST_CASE("table order is deterministic and repeat runs agree exactly") {
  const std::vector<RatingRecord> records = synth_records(true);
  EvalOptions options;
  options.tests = {"friedman", "wilcoxon", "bvo"};
  options.baselines = {"m1"};
  options.ours = {"m2", "m3"};

  const std::vector<json> first = eval_report(records, options);
  const std::vector<json> second = eval_report(records, options);
  CHECK(first == second);

  std::vector<std::string> appearance;
  for (const json& row : first) {
    const std::string table = row.at("table").get<std::string>();
    if (appearance.empty() || appearance.back() != table) appearance.push_back(table);
  }
  // Each table forms one contiguous run, in the documented order.
  const std::vector<std::string> expected{"subject_averages", "means", "pooled_means",
                                          "friedman",         "wilcoxon", "bvo",
                                          "exclusions"};
  CHECK(appearance == expected);
}

TEST_CASE("subject average rows carry per-dimension values in sorted order") {
  const std::vector<RatingRecord> records = synth_records(false);
  const std::vector<json> rows = eval_report(records, EvalOptions{});
  const std::vector<json> averages = rows_of(rows, "subject_averages");

  CHECK(averages.front().at("cohort") == "audience");
  CHECK(averages.front().at("rater_id") == "r1");
  CHECK(averages.front().at("model") == "m1");
  CHECK(averages.front().at("dimension") == "NS");
  CHECK(keys_of(averages.front()) ==
        std::set<std::string>{"table", "cohort", "rater_id", "model", "dimension", "value"});

  // Spot value: rater r1 (index 0), model m1 (index 0): NS score equals the
  // base item value v = (index sums mod 5) + 1 for each prompt, averaged.
  const std::vector<json> spot = match(
      averages, {{"rater_id", "r1"}, {"model", "m1"}, {"dimension", "NS"}});
  REQUIRE(spot.size() == 1);
  const double p1 = static_cast<double>((0 + 0 + 0) % 5 + 1);
  const double p2 = static_cast<double>((0 + 2 + 0) % 5 + 1);
  CHECK(spot[0].at("value") == (p1 + p2) / 2.0);

  // Independent recomputation of every row via the library aggregation.
  std::vector<std::string> exclusions;
  const std::vector<SubjectAverage> direct = subject_prompt_averages(records, exclusions);
  CHECK(exclusions.empty());
  CHECK(averages.size() == direct.size() * dimension_names().size());
  std::size_t row_index = 0;
  for (const SubjectAverage& avg : direct) {
    for (const std::string& dim : dimension_names()) {
      const json& row = averages[row_index++];
      CHECK(row.at("rater_id") == avg.rater_id);
      CHECK(row.at("dimension") == dim);
      CHECK(row.at("value").get<double>() == avg.dims.at(dim));
    }
  }
}

TEST_CASE("means and pooled means reproduce the library statistics") {
  const std::vector<RatingRecord> records = synth_records(false);
  const std::vector<json> rows = eval_report(records, EvalOptions{});

  std::vector<std::string> exclusions;
  const std::vector<SubjectAverage> averages = subject_prompt_averages(records, exclusions);

  for (const std::string& cohort : {"audience", "expert"}) {
    for (const std::string& model : kModels) {
      std::vector<double> values;
      for (const SubjectAverage& avg : averages) {
        if (avg.cohort == cohort && avg.model == model) values.push_back(avg.dims.at("EE"));
      }
      const SampleStats expected = sample_stats(values);
      const std::vector<json> found =
          match(rows_of(rows, "means"),
                {{"cohort", cohort}, {"model", model}, {"dimension", "EE"}});
      REQUIRE(found.size() == 1);
      CHECK(found[0].at("n") == expected.n);
      CHECK(found[0].at("mean").get<double>() == expected.mean);
      CHECK(found[0].at("sd").get<double>() == doctest::Approx(expected.sd()).epsilon(1e-12));
    }
  }

  // Pooled rows equal the flat statistics over both cohorts.
  for (const std::string& model : kModels) {
    std::vector<double> values;
    for (const SubjectAverage& avg : averages) {
      if (avg.model == model) values.push_back(avg.dims.at("AT"));
    }
    const SampleStats expected = sample_stats(values);
    const std::vector<json> found =
        match(rows_of(rows, "pooled_means"), {{"model", model}, {"dimension", "AT"}});
    REQUIRE(found.size() == 1);
    CHECK(found[0].at("n") == expected.n);
    CHECK(found[0].at("mean").get<double>() == doctest::Approx(expected.mean).epsilon(1e-12));
    CHECK(found[0].at("sd").get<double>() == doctest::Approx(expected.sd()).epsilon(1e-12));
    CHECK(keys_of(found[0]) ==
          std::set<std::string>{"table", "model", "dimension", "n", "mean", "sd"});
  }

  // A single-rater cohort would have a null sd; force one via a tiny corpus.
  std::vector<RatingRecord> tiny;
  RatingRecord a = synth_record(0, "solo", "expert", 0, 0);
  tiny.push_back(a);
  const std::vector<json> tiny_rows = eval_report(tiny, EvalOptions{});
  const std::vector<json> tiny_means = rows_of(tiny_rows, "means");
  REQUIRE(!tiny_means.empty());
  CHECK(tiny_means[0].at("n") == 1);
  CHECK(tiny_means[0].at("sd").is_null());
}

TEST_CASE("friedman rows match direct computation on the filtered blocks") {
  const std::vector<RatingRecord> records = synth_records(true);
  EvalOptions options;
  options.tests = {"friedman"};
  const std::vector<json> rows = eval_report(records, options);
  const std::vector<json> friedman_rows = rows_of(rows, "friedman");

  // 2 cohorts x 2 prompts x 6 dimensions.
  CHECK(friedman_rows.size() == 24);
  CHECK(keys_of(friedman_rows.front()) ==
        std::set<std::string>{"table", "cohort", "prompt", "dimension", "chi2", "df", "p",
                              "effect", "n", "k", "method"});

  for (const std::string& cohort : {"audience", "expert"}) {
    for (const std::string& prompt : kPrompts) {
      for (const std::string& dim : {"NS", "EE"}) {
        const BlockMatrix matrix =
            build_blocks(filter_records(records, cohort, prompt), dim);
        const TestResult expected = friedman_test(matrix.values);
        const std::vector<json> found =
            match(friedman_rows,
                  {{"cohort", cohort}, {"prompt", prompt}, {"dimension", dim}});
        REQUIRE(found.size() == 1);
        CHECK(found[0].at("chi2").get<double>() == expected.statistic);
        CHECK(found[0].at("p").get<double>() == expected.p);
        CHECK(found[0].at("effect").get<double>() == expected.effect);
        CHECK(found[0].at("n") == expected.n);
        CHECK(found[0].at("df") == expected.df);
        CHECK(found[0].at("k") == static_cast<int>(matrix.treatments.size()));
        CHECK(found[0].at("method") == expected.method);
      }
    }
  }

  // The dropped response costs audience/P2 a block.
  const std::vector<json> gapped =
      match(friedman_rows, {{"cohort", "audience"}, {"prompt", "P2"}, {"dimension", "NS"}});
  REQUIRE(gapped.size() == 1);
  CHECK(gapped[0].at("n") == 2);
  const std::vector<json> full =
      match(friedman_rows, {{"cohort", "audience"}, {"prompt", "P1"}, {"dimension", "NS"}});
  REQUIRE(full.size() == 1);
  CHECK(full[0].at("n") == 3);
}

TEST_CASE("wilcoxon rows form Holm families per cohort, group, and dimension") {
  const std::vector<RatingRecord> records = synth_records(false);
  EvalOptions options;
  options.tests = {"wilcoxon"};
  const std::vector<json> rows = eval_report(records, options);
  const std::vector<json> wilcoxon_rows = rows_of(rows, "wilcoxon");

  // 2 cohorts x 2 prompts x 6 dimensions x 3 model pairs.
  CHECK(wilcoxon_rows.size() == 72);
  CHECK(keys_of(wilcoxon_rows.front()) ==
        std::set<std::string>{"table", "cohort", "prompt", "dimension", "model_a", "model_b",
                              "statistic", "p", "n", "method", "p_holm"});

  for (const std::string& cohort : {"audience", "expert"}) {
    for (const std::string& prompt : kPrompts) {
      const std::vector<json> family = match(
          wilcoxon_rows, {{"cohort", cohort}, {"prompt", prompt}, {"dimension", "OE"}});
      REQUIRE(family.size() == 3);
      CHECK(family[0].at("model_a") == "m1");
      CHECK(family[0].at("model_b") == "m2");
      CHECK(family[1].at("model_a") == "m1");
      CHECK(family[1].at("model_b") == "m3");
      CHECK(family[2].at("model_a") == "m2");
      CHECK(family[2].at("model_b") == "m3");

      std::vector<double> pvalues;
      for (const json& row : family) pvalues.push_back(row.at("p").get<double>());
      const std::vector<double> adjusted = holm_adjust(pvalues);
      for (std::size_t i = 0; i < family.size(); ++i) {
        CHECK(family[i].at("p_holm").get<double>() == adjusted[i]);
      }

      // One pair recomputed end to end.
      const BlockMatrix matrix = build_blocks(filter_records(records, cohort, prompt), "OE");
      std::vector<double> x;
      std::vector<double> y;
      for (const auto& row : matrix.values) {
        x.push_back(row[0]);
        y.push_back(row[1]);
      }
      const TestResult expected = wilcoxon_signed_rank(x, y, options.zeros);
      CHECK(family[0].at("statistic").get<double>() == expected.statistic);
      CHECK(family[0].at("p").get<double>() == expected.p);
      CHECK(family[0].at("n") == expected.n);
      CHECK(family[0].at("method") == expected.method);
    }
  }
}

TEST_CASE("baseline-vs-ours rows and the pooled grouping mode") {
  const std::vector<RatingRecord> records = synth_records(true);
  EvalOptions options;
  options.tests = {"bvo"};
  options.baselines = {"m1"};
  options.ours = {"m2", "m3"};
  options.group_by = "pooled";

  const std::vector<json> rows = eval_report(records, options);
  const std::vector<json> bvo_rows = rows_of(rows, "bvo");

  // 2 cohorts x 1 pooled group x 6 dimensions.
  CHECK(bvo_rows.size() == 12);
  CHECK(keys_of(bvo_rows.front()) ==
        std::set<std::string>{"table", "cohort", "prompt", "dimension", "ours_mean",
                              "base_mean", "delta", "p", "n"});
  for (const json& row : bvo_rows) CHECK(row.at("prompt") == "pooled");

  const std::vector<json> audience_ee =
      match(bvo_rows, {{"cohort", "audience"}, {"dimension", "EE"}});
  REQUIRE(audience_ee.size() == 1);
  const ComparisonResult expected = baseline_vs_ours(
      filter_records(records, "audience", ""), options.baselines, options.ours, "EE",
      options.zeros);
  CHECK(audience_ee[0].at("ours_mean").get<double>() == expected.ours_mean);
  CHECK(audience_ee[0].at("base_mean").get<double>() == expected.base_mean);
  CHECK(audience_ee[0].at("delta").get<double>() == expected.delta);
  CHECK(audience_ee[0].at("p").get<double>() == expected.p);
  // Audience blocks: 3 raters x 2 prompts minus the one incomplete block.
  CHECK(audience_ee[0].at("n") == 5);
  CHECK(expected.excluded == std::vector<std::string>{"r3|P2"});
}

TEST_CASE("exclusion rows are deduplicated, explained, and sorted last") {
  const std::vector<RatingRecord> records = synth_records(true);
  EvalOptions options;
  options.tests = {"friedman", "bvo"};
  options.baselines = {"m1"};
  options.ours = {"m2"};

  const std::vector<json> rows = eval_report(records, options);
  const std::vector<json> exclusion_rows = rows_of(rows, "exclusions");
  REQUIRE(!exclusion_rows.empty());

  // All exclusion rows sit at the tail of the report.
  const std::size_t tail_start = rows.size() - exclusion_rows.size();
  for (std::size_t i = tail_start; i < rows.size(); ++i) {
    CHECK(rows[i].at("table") == "exclusions");
  }

  std::set<std::pair<std::string, std::string>> seen;
  for (const json& row : exclusion_rows) {
    CHECK(keys_of(row) == std::set<std::string>{"table", "context", "detail"});
    seen.insert({row.at("context").get<std::string>(), row.at("detail").get<std::string>()});
  }
  CHECK(seen.size() == exclusion_rows.size());  // deduplicated

  CHECK(seen.count({"subject_average", "rater 'r3' model 'm2': missing prompt(s) P2"}) == 1);
  CHECK(seen.count({"blocks", "cohort audience group P2: block r3|P2 incomplete"}) == 1);
  CHECK(seen.count({"bvo", "cohort audience group P2: block r3|P2 incomplete"}) == 1);
}

TEST_CASE("tests that cannot run degrade into exclusions instead of rows") {
  // A single rater leaves every Friedman family under the two-block minimum.
  std::vector<RatingRecord> tiny;
  for (std::size_t m = 0; m < kModels.size(); ++m) {
    tiny.push_back(synth_record(0, "solo", "audience", 0, m));
  }
  EvalOptions options;
  options.tests = {"friedman", "bvo"};
  options.baselines = {"no_such_model"};
  options.ours = {"m1"};

  const std::vector<json> rows = eval_report(tiny, options);
  CHECK(rows_of(rows, "friedman").empty());
  CHECK(rows_of(rows, "bvo").empty());

  bool friedman_note = false;
  bool bvo_note = false;
  for (const json& row : rows_of(rows, "exclusions")) {
    const std::string context = row.at("context").get<std::string>();
    const std::string detail = row.at("detail").get<std::string>();
    if (context == "friedman" && detail.find("fewer than 2 complete blocks") != std::string::npos)
      friedman_note = true;
    if (context == "bvo" && detail.find("no complete blocks") != std::string::npos)
      bvo_note = true;
  }
  CHECK(friedman_note);
  CHECK(bvo_note);
}
