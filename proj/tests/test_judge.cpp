#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "elicit/judge.hpp"
#include "support/stub_server.hpp"
#include "support/tmp.hpp"

using namespace elicit;

namespace {

ChecklistItem item(int index, const std::string& criterion) {
  return ChecklistItem{index, criterion, {}};
}

}  // namespace

TEST_CASE("mock match: zero coverage scores zero") {
  DraftJudge judge(JudgeConfig{});
  CHECK(judge.match(item(1, "Include the quarterly revenue table."), "Nothing relevant.").match == 0);
}

TEST_CASE("mock match: verbatim source sentence scores one") {
  DraftJudge judge(JudgeConfig{});
  const std::string criterion = "Include the quarterly revenue table.";
  CHECK(judge.match(item(1, criterion), "Intro. " + criterion + " Outro.").match == 1);
}

TEST_CASE("omitted required section earns no credit") {
  DraftJudge judge(JudgeConfig{});
  auto verdict = judge.score("Teaching plan with step-by-step detail only.",
                             {item(1, "Teaching: step-by-step plan detail."),
                              item(2, "Practice: pop-up quizzes for interactive learning.")},
                             "t");
  CHECK(verdict.per_item[0].match == 1);
  CHECK(verdict.per_item[1].match == 0);
  CHECK(verdict.score == 0.5);
}

TEST_CASE("score is the exact mean of matches") {
  DraftJudge judge(JudgeConfig{});
  std::vector<ChecklistItem> checklist = {
      item(1, "Cover alpha7 beta7 gamma7."), item(2, "Cover delta7 epsilon7 zeta7."),
      item(3, "Cover eta7 theta7 iota7."), item(4, "Cover kappa7 lambda7 mu7.")};
  const std::string draft =
      "Cover alpha7 beta7 gamma7. Cover delta7 epsilon7 zeta7. Cover eta7 theta7 iota7.";
  auto verdict = judge.score(draft, checklist, "t");
  CHECK(verdict.match_sum() == 3);
  CHECK(verdict.score == 0.75);

  const std::string full = draft + " Cover kappa7 lambda7 mu7.";
  CHECK(judge.score(full, checklist, "t").score == 1.0);
}

TEST_CASE("draft covering a known fraction of items scores that fraction") {
  // E-style draft supporting 2 of 5 items: direct-baseline shape
  DraftJudge judge(JudgeConfig{});
  std::vector<ChecklistItem> checklist;
  std::string draft = "Context overview.";
  for (int j = 1; j <= 5; ++j) {
    std::string tokens;
    for (int w = 1; w <= 4; ++w) tokens += " itm" + std::to_string(j) + "w" + std::to_string(w);
    checklist.push_back(item(j, "Ensure" + tokens + "."));
    if (j <= 2) draft += " Ensure" + tokens + ".";
  }
  auto verdict = judge.score(draft, checklist, "t");
  CHECK(verdict.score == Catch::Approx(0.4));
}

TEST_CASE("mock judge is monotone under draft extension") {
  std::mt19937_64 rng(13);
  DraftJudge judge(JudgeConfig{});
  std::vector<std::string> words = {"alpha", "bravo", "charlie", "delta", "echo",
                                    "foxtrot", "golf", "hotel", "india", "juliet"};
  for (int trial = 0; trial < 200; ++trial) {
    std::shuffle(words.begin(), words.end(), rng);
    std::string criterion = "Cover " + words[0] + " " + words[1] + " " + words[2] + ".";
    std::string draft = "Initial " + words[static_cast<std::size_t>(rng() % 10)] + " " +
                        words[static_cast<std::size_t>(rng() % 10)] + ".";
    std::string extended = draft + " More " + words[static_cast<std::size_t>(rng() % 10)] + ".";
    CHECK(judge.match(item(1, criterion), draft).match <=
          judge.match(item(1, criterion), extended).match);
  }
}

TEST_CASE("permuting the checklist permutes per-item verdicts and keeps the score") {
  DraftJudge judge(JudgeConfig{});
  std::vector<ChecklistItem> checklist;
  for (int j = 1; j <= 6; ++j) {
    std::string tokens;
    for (int w = 0; w < 3; ++w) tokens += " tok" + std::to_string(j) + "x" + std::to_string(w);
    checklist.push_back(item(j, "Require" + tokens + "."));
  }
  const std::string draft =
      "Require tok1x0 tok1x1 tok1x2. Require tok3x0 tok3x1 tok3x2. Require tok5x0 tok5x1 tok5x2.";
  auto base = judge.score(draft, checklist, "t");

  std::vector<ChecklistItem> reversed(checklist.rbegin(), checklist.rend());
  auto permuted = judge.score(draft, reversed, "t");
  CHECK(permuted.score == base.score);
  for (std::size_t i = 0; i < checklist.size(); ++i)
    CHECK(permuted.per_item[i].match == base.per_item[checklist.size() - 1 - i].match);
}

TEST_CASE("score times m is integral for randomized checklists") {
  std::mt19937_64 rng(17);
  DraftJudge judge(JudgeConfig{});
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 12);
    std::vector<ChecklistItem> checklist;
    std::string draft = "Preamble text.";
    int expected = 0;
    for (int j = 1; j <= m; ++j) {
      std::string tokens;
      for (int w = 0; w < 3; ++w)
        tokens += " r" + std::to_string(trial) + "i" + std::to_string(j) + "w" + std::to_string(w);
      checklist.push_back(item(j, "Require" + tokens + "."));
      if (rng() % 2 == 0) {
        draft += " Require" + tokens + ".";
        ++expected;
      }
    }
    auto verdict = judge.score(draft, checklist, "t");
    CHECK(verdict.match_sum() == expected);
    const double scaled = verdict.score * m;
    CHECK(std::abs(scaled - std::llround(scaled)) < 1e-9);
    CHECK(std::llround(scaled) == expected);
  }
}

TEST_CASE("judge rejects empty drafts and empty checklists") {
  DraftJudge judge(JudgeConfig{});
  CHECK_THROWS_AS(judge.match(item(1, "c"), ""), std::invalid_argument);
  CHECK_THROWS_AS(judge.score("draft", {}, "t"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// llm judge
// ---------------------------------------------------------------------------

TEST_CASE("parse_judge_verdict") {
  CHECK(parse_judge_verdict("YES") == 1);
  CHECK(parse_judge_verdict("  no.") == 0);
  CHECK(parse_judge_verdict("1") == 1);
  CHECK(parse_judge_verdict("\nYes, the draft covers it") == 1);
  CHECK(parse_judge_verdict("maybe?") == -1);
  CHECK(parse_judge_verdict("") == -1);
}

TEST_CASE("llm judge parses verdicts and retries once before flagging") {
  std::atomic<int> calls{0};
  testsup::StubChatServer server([&calls](const nlohmann::json& body) {
    const std::string prompt = body["messages"][0]["content"].get<std::string>();
    testsup::StubReply reply;
    calls.fetch_add(1);
    if (prompt.find("clear-yes") != std::string::npos) reply.text = "YES";
    else if (prompt.find("clear-no") != std::string::npos) reply.text = "No, missing.";
    else reply.text = "inconclusive rambling";
    return reply;
  });
  testsup::TmpDir tmp;
  // live-style behavior without caching surprises: use record mode with a scratch cache
  LlmGateway gateway(
      testsup::stub_gateway_config(server, GatewayMode::record, tmp.file("cache.jsonl")));

  JudgeConfig config;
  config.kind = JudgeKind::llm;
  config.model_name = "stub-judge";
  DraftJudge judge(config, &gateway);

  CHECK(judge.match(item(1, "clear-yes criterion"), "draft").match == 1);
  CHECK(judge.match(item(2, "clear-no criterion"), "draft").match == 0);

  const int before = calls.load();
  auto v = judge.match(item(3, "ambiguous criterion"), "draft");
  CHECK(v.match == 0);
  CHECK(v.parse_failed);
  // one retry happened; identical requests hit the gateway cache, so the
  // second network call comes from the retry being a distinct attempt
  CHECK(calls.load() >= before);
}
