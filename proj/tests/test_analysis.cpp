#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "elicit/analysis.hpp"
#include "support/tmp.hpp"

using namespace elicit;

namespace {

EpisodeTrace scored_trace(const std::string& domain, double score, int budget = 5) {
  EpisodeTrace t;
  t.instance_id = "t";
  t.domain = domain;
  t.budget = budget;
  t.judge_score = score;
  t.stop_reason = StopReason::budget_exhausted;
  t.draft = "d";
  t.meta.explicit_count = 4;
  t.meta.procedure_count = 3;
  t.meta.universe_size = 10;
  return t;
}

EpisodeTrace trace_citing(const std::set<int>& cited, int explicit_count, int procedure_count,
                          int universe) {
  EpisodeTrace t = scored_trace("d", 0.5);
  t.meta.explicit_count = explicit_count;
  t.meta.procedure_count = procedure_count;
  t.meta.universe_size = universe;
  Turn turn;
  turn.turn_index = 1;
  turn.question = "q?";
  turn.answer.answer_text = "a";
  turn.answer.cited_indices = cited;
  turn.reward = 1;
  t.turns.push_back(turn);
  return t;
}

}  // namespace

TEST_CASE("domain breakdown means scores per domain") {
  TraceStore store;
  store.traces.push_back(scored_trace("soc", 0.5));
  store.traces.push_back(scored_trace("soc", 0.7));
  auto rows = domain_breakdown(store);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].group_key == "soc");
  CHECK(rows[0].n_episodes == 2);
  CHECK(rows[0].mean_score == Catch::Approx(0.6));
}

TEST_CASE("domain breakdown on constructed per-domain constants is exact") {
  TraceStore store;
  const std::vector<std::pair<std::string, double>> spec = {
      {"humanities", 0.25}, {"social", 0.75}, {"tech", 0.5}};
  for (const auto& [domain, value] : spec)
    for (int i = 0; i < 10; ++i) store.traces.push_back(scored_trace(domain, value));
  auto rows = domain_breakdown(store);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    CHECK(rows[i].group_key == spec[i].first);
    CHECK(rows[i].mean_score == spec[i].second);
    CHECK(rows[i].stderr_score == 0.0);  // constant scores
    CHECK(rows[i].n_episodes == 10);
  }
}

TEST_CASE("unscored traces are skipped with a warning; empty groups omitted") {
  TraceStore store;
  store.traces.push_back(scored_trace("a", 0.5));
  auto unscored_a = scored_trace("a", 0.0);
  unscored_a.judge_score.reset();
  store.traces.push_back(unscored_a);
  auto unscored_b = scored_trace("b", 0.0);
  unscored_b.judge_score.reset();
  store.traces.push_back(unscored_b);

  std::vector<std::string> warnings;
  auto rows = domain_breakdown(store, &warnings);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].group_key == "a");
  CHECK(rows[0].n_episodes == 1);
  REQUIRE(warnings.size() == 2);
  CHECK(warnings[0].find("skipped") != std::string::npos);
  CHECK(warnings[1].find("omitted") != std::string::npos);
}

TEST_CASE("score_by_turn emits one row per budget, sorted") {
  TraceStore store;
  for (int budget : {5, 0, 3, 1}) {
    store.traces.push_back(scored_trace("d", 0.1 * budget, budget));
    store.traces.push_back(scored_trace("d", 0.1 * budget, budget));
  }
  auto rows = score_by_turn(store);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].group_key == "0");
  CHECK(rows[1].group_key == "1");
  CHECK(rows[2].group_key == "3");
  CHECK(rows[3].group_key == "5");
  CHECK(rows[3].mean_score == Catch::Approx(0.5));
}

TEST_CASE("position samples carry origin and the U=1 convention") {
  TraceStore store;
  store.traces.push_back(trace_citing({0, 4, 8}, 4, 3, 10));
  auto samples = collect_position_samples(store);
  REQUIRE(samples.size() == 3);
  CHECK(samples[0].normalized_position == 0.0);
  CHECK(samples[0].origin == PositionOrigin::explicit_region);
  CHECK(samples[1].normalized_position == Catch::Approx(4.0 / 9.0));
  CHECK(samples[1].origin == PositionOrigin::procedure);
  CHECK(samples[2].origin == PositionOrigin::output_spec);

  TraceStore degenerate;
  degenerate.traces.push_back(trace_citing({0}, 0, 1, 1));
  auto s = collect_position_samples(degenerate);
  REQUIRE(s.size() == 1);
  CHECK(s[0].normalized_position == 0.0);
}

TEST_CASE("all citations at index zero put full mass in the first bin") {
  TraceStore store;
  for (int i = 0; i < 5; ++i) store.traces.push_back(trace_citing({0}, 2, 1, 6));
  auto density = evidence_position_histogram(store, 10);
  CHECK(density[0] == 1.0);
  for (std::size_t b = 1; b < density.size(); ++b) CHECK(density[b] == 0.0);
}

TEST_CASE("density sums to one and position 1.0 lands in the last bin") {
  TraceStore store;
  store.traces.push_back(trace_citing({9}, 2, 1, 10));  // position exactly 1.0
  store.traces.push_back(trace_citing({3, 5}, 2, 1, 10));
  auto density = evidence_position_histogram(store, 20);
  double sum = 0.0;
  for (double d : density) {
    CHECK(d >= 0.0);
    sum += d;
  }
  CHECK(sum == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(density[19] > 0.0);
}

TEST_CASE("uniform synthetic citations give a flat density") {
  TraceStore store;
  const int universe = 101;
  for (int idx = 0; idx < universe; ++idx)
    store.traces.push_back(trace_citing({idx}, 50, 25, universe));
  auto density = evidence_position_histogram(store, 10);
  // 101 positions over 10 bins: every bin holds 10 or 11 samples
  for (double d : density) CHECK(d == Catch::Approx(0.1).margin(0.01));
}

TEST_CASE("histogram validates bin count") {
  TraceStore store;
  CHECK_THROWS_AS(evidence_position_histogram(store, 1), std::invalid_argument);
}

TEST_CASE("reports re-emit byte-identically and escape csv fields") {
  testsup::TmpDir tmp;
  TraceStore store;
  store.traces.push_back(scored_trace("weird,\"domain\"", 0.5));
  store.traces.push_back(scored_trace("plain", 0.25));

  const std::string p1 = tmp.file("r1.csv");
  const std::string p2 = tmp.file("r2.csv");
  write_report_csv(domain_breakdown(store), p1);
  write_report_csv(domain_breakdown(store), p2);
  const std::string c1 = testsup::slurp(p1);
  CHECK(c1 == testsup::slurp(p2));
  CHECK(c1.find("group_key,n_episodes,mean_score,stderr") == 0);
  CHECK(c1.find("\"weird,\"\"domain\"\"\"") != std::string::npos);

  const std::string d1 = tmp.file("d1.csv");
  write_density_csv(evidence_position_histogram(store, 4), d1);
  CHECK(testsup::slurp(d1).find("bin_index,bin_start,bin_end,density") == 0);
}

TEST_CASE("stderr is the sample standard error") {
  TraceStore store;
  store.traces.push_back(scored_trace("d", 0.0));
  store.traces.push_back(scored_trace("d", 1.0));
  auto rows = domain_breakdown(store);
  REQUIRE(rows.size() == 1);
  // sd = sqrt(0.5), stderr = sqrt(0.5)/sqrt(2) = 0.5
  CHECK(rows[0].stderr_score == Catch::Approx(0.5));
  CHECK(rows[0].mean_score == Catch::Approx(0.5));
}
