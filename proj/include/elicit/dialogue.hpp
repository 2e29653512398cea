#pragma once

#include <array>
#include <atomic>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "elicit/clock.hpp"
#include "elicit/corpus.hpp"
#include "elicit/gateway.hpp"
#include "elicit/judge.hpp"
#include "elicit/oracle.hpp"
#include "elicit/prompts.hpp"
#include "elicit/reward.hpp"
#include "elicit/trace.hpp"

namespace elicit {

// ---------------------------------------------------------------------------
// Policy specs
// ---------------------------------------------------------------------------

enum class PolicyKind { llm, null_asker, perfect_asker, random_asker };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::llm: return "llm";
    case PolicyKind::null_asker: return "null_asker";
    case PolicyKind::perfect_asker: return "perfect_asker";
    case PolicyKind::random_asker: return "random_asker";
  }
  return "?";
}

inline PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "llm") return PolicyKind::llm;
  if (s == "null" || s == "null_asker") return PolicyKind::null_asker;
  if (s == "perfect" || s == "perfect_asker") return PolicyKind::perfect_asker;
  if (s == "random" || s == "random_asker") return PolicyKind::random_asker;
  throw std::invalid_argument("unknown policy kind: " + s);
}

struct PolicySpec {
  PolicyKind kind = PolicyKind::null_asker;
  std::string model_name;   // llm only
  std::uint64_t seed = 0;   // random_asker
};

enum class WriterKind { llm, mock_concat };

inline const char* to_string(WriterKind k) {
  return k == WriterKind::llm ? "llm" : "mock_concat";
}

struct WriterConfig {
  WriterKind kind = WriterKind::mock_concat;
  std::string model_name;    // llm only
  double temperature = 0.0;  // llm only
};

// ---------------------------------------------------------------------------
// Assistant output interpretation
// ---------------------------------------------------------------------------

/// A stop action is an output whose first non-whitespace token is the literal
/// STOP, case-insensitive.
inline bool is_stop_marker(std::string_view text) { return iequals(first_token(text), "STOP"); }

struct InterpretedAction {
  AssistantAction action;
  bool format_warning = false;
};

/// Map raw policy model output onto an action. Output that is neither a
/// question nor a STOP marker is still treated as an ask (the whole output is
/// the question) with the format warning set; empty output degrades to stop.
inline InterpretedAction interpret_policy_output(const std::string& text) {
  InterpretedAction out;
  std::string trimmed(trim_view(text));
  if (trimmed.empty()) {
    out.action = AssistantAction::stop();
    out.format_warning = true;
    return out;
  }
  if (is_stop_marker(trimmed)) {
    out.action = AssistantAction::stop();
    return out;
  }
  out.action = AssistantAction::ask(trimmed);
  out.format_warning = trimmed.find('?') == std::string::npos;
  return out;
}

inline std::string render_transcript(const std::vector<Turn>& turns) {
  std::string out;
  for (const auto& t : turns) {
    out += "Q" + std::to_string(t.turn_index) + ": " + t.question + "\n";
    out += "A" + std::to_string(t.turn_index) + ": " + t.answer.answer_text + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

struct DialogueTelemetry {
  std::atomic<std::int64_t> policy_format_warnings{0};
  std::atomic<std::int64_t> oracle_failures{0};
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual AssistantAction next(const ExplicitContext& explicit_ctx,
                               const std::vector<Turn>& history) = 0;
};

class NullAsker final : public Policy {
 public:
  AssistantAction next(const ExplicitContext&, const std::vector<Turn>&) override {
    return AssistantAction::stop();
  }
};

/// Seeded question babbler. The action is a pure function of
/// (seed, explicit context, turns so far): replays are exact.
class RandomAsker final : public Policy {
 public:
  explicit RandomAsker(std::uint64_t seed) : seed_(seed) {}

  AssistantAction next(const ExplicitContext& ctx, const std::vector<Turn>& history) override {
    std::uint64_t state = mix_seed(seed_, hash_text(ctx.objective) ^
                                              (hash_text(ctx.input_section) << 1) ^
                                              history.size());
    std::mt19937_64 rng(state);
    if (!history.empty() && rng() % 8 == 0) return AssistantAction::stop();

    std::vector<std::string> lexicon(kQuestionWords.begin(), kQuestionWords.end());
    for (const auto& t : token_set(ctx.objective + " " + ctx.input_section))
      lexicon.push_back(t);

    const std::size_t n_words = 3 + rng() % 4;
    std::string q;
    for (std::size_t i = 0; i < n_words; ++i) {
      if (!q.empty()) q.push_back(' ');
      q += lexicon[rng() % lexicon.size()];
    }
    q.push_back('?');
    return AssistantAction::ask(std::move(q));
  }

 private:
  static constexpr std::array<const char*, 8> kQuestionWords = {
      "format", "structure", "steps", "requirements", "sections", "style", "details", "approach"};
  std::uint64_t seed_;
};

/// Upper-bound policy: echoes the task's implicit sentences one per turn, in
/// index order, then stops. Built with task access on purpose; it exists to
/// bound what any honest policy could achieve.
class PerfectAsker final : public Policy {
 public:
  explicit PerfectAsker(const MaskedTask& task) {
    for (const auto& s : task.implicit_sentences) questions_.push_back(s.text);
  }

  AssistantAction next(const ExplicitContext&, const std::vector<Turn>& history) override {
    if (history.size() >= questions_.size()) return AssistantAction::stop();
    return AssistantAction::ask(questions_[history.size()]);
  }

 private:
  std::vector<std::string> questions_;
};

class LlmPolicy final : public Policy {
 public:
  LlmPolicy(PolicySpec spec, LlmGateway* gateway, const PromptSet* prompts,
            DialogueTelemetry* telemetry)
      : spec_(std::move(spec)), gateway_(gateway), prompts_(prompts), telemetry_(telemetry) {
    if (!gateway_) throw std::invalid_argument("llm policy requires a gateway");
  }

  AssistantAction next(const ExplicitContext& ctx, const std::vector<Turn>& history) override {
    ChatRequest request;
    request.role_tag = RoleTag::policy;
    request.model_name = spec_.model_name;
    const PromptSet defaults;
    const PromptSet& prompts = prompts_ ? *prompts_ : defaults;
    request.messages.push_back(
        {Speaker::user, render_template(prompts.questioning,
                                        {{"explicit", ctx.rendered()},
                                         {"transcript", render_transcript(history)}})});
    ChatResponse response = gateway_->complete(request);
    InterpretedAction interpreted = interpret_policy_output(response.text);
    if (interpreted.format_warning && telemetry_)
      telemetry_->policy_format_warnings.fetch_add(1);
    return interpreted.action;
  }

 private:
  PolicySpec spec_;
  LlmGateway* gateway_;
  const PromptSet* prompts_;
  DialogueTelemetry* telemetry_;
};

struct RunContext {
  LlmGateway* gateway = nullptr;
  const PromptSet* prompts = nullptr;
  Clock* clock = nullptr;  // null: process-wide logical clock
  std::uint64_t episode_seed = 0;
  DialogueTelemetry* telemetry = nullptr;
};

inline std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const MaskedTask& task,
                                           RunContext& ctx) {
  switch (spec.kind) {
    case PolicyKind::null_asker: return std::make_unique<NullAsker>();
    case PolicyKind::random_asker: return std::make_unique<RandomAsker>(spec.seed);
    case PolicyKind::perfect_asker: return std::make_unique<PerfectAsker>(task);
    case PolicyKind::llm:
      return std::make_unique<LlmPolicy>(spec, ctx.gateway, ctx.prompts, ctx.telemetry);
  }
  throw std::invalid_argument("unknown policy kind");
}

// ---------------------------------------------------------------------------
// Draft phase
// ---------------------------------------------------------------------------

inline constexpr const char* kWriterPrompt =
    "Write the final deliverable for the task below.\n"
    "\n"
    "Task brief:\n"
    "{explicit}\n"
    "\n"
    "Clarification transcript:\n"
    "{transcript}\n"
    "\n"
    "Use every relevant detail from the transcript. Output only the deliverable.\n";

inline std::string make_writer_prompt(const ExplicitContext& ctx, const std::vector<Turn>& turns) {
  return render_template(kWriterPrompt, {{"explicit", ctx.rendered()},
                                         {"transcript", render_transcript(turns)}});
}

/// Produces the final draft from E plus the full transcript, in one call.
/// The mock kind concatenates the explicit context with every surfaced
/// answer, which is exactly what a maximally faithful writer would keep.
class DraftWriter {
 public:
  explicit DraftWriter(WriterConfig config, LlmGateway* gateway = nullptr,
                       const PromptSet* prompts = nullptr)
      : config_(std::move(config)), gateway_(gateway) {
    (void)prompts;
    if (config_.kind == WriterKind::llm && !gateway_)
      throw std::invalid_argument("llm writer requires a gateway");
  }

  std::string write(const ExplicitContext& ctx, const std::vector<Turn>& turns) const {
    if (config_.kind == WriterKind::mock_concat) {
      std::string draft = ctx.rendered();
      for (const auto& t : turns) {
        if (t.answer.answer_text.empty() || t.answer.answer_text == kOracleRefusal) continue;
        draft += "\n" + t.answer.answer_text;
      }
      return draft;
    }
    ChatRequest request;
    request.role_tag = RoleTag::writer;
    request.model_name = config_.model_name;
    request.temperature = config_.temperature;
    request.messages.push_back({Speaker::user, make_writer_prompt(ctx, turns)});
    return gateway_->complete(request).text;
  }

 private:
  WriterConfig config_;
  LlmGateway* gateway_;
};

// ---------------------------------------------------------------------------
// Episode loop
// ---------------------------------------------------------------------------

/// Run one POMDP episode: up to `budget` ask turns against the oracle, then
/// exactly one writer call, then optional judging.
///
/// Only ask turns consume budget; STOP is free. A transient oracle failure
/// records the turn with reward 0 and the failure flag and the episode
/// continues. A policy, writer, or judge hard failure ends the episode with
/// stop_reason = policy_error, no draft, no score.
inline EpisodeTrace run_episode(const MaskedTask& task, const PolicySpec& policy_spec,
                                const OracleConfig& oracle_cfg, const WriterConfig& writer_cfg,
                                const JudgeConfig& judge_cfg, int budget, RunContext& ctx,
                                JudgeVerdict* verdict_out = nullptr) {
  if (budget < 0) throw std::invalid_argument("run_episode: budget must be >= 0");

  static LogicalClock fallback_clock;
  Clock& clock = ctx.clock ? *ctx.clock : fallback_clock;

  EpisodeTrace trace;
  trace.instance_id = task.instance_id;
  trace.domain = task.domain;
  trace.budget = budget;
  trace.seed = ctx.episode_seed;
  trace.explicit_context = task.explicit_ctx.rendered();
  trace.meta.policy_kind = to_string(policy_spec.kind);
  trace.meta.policy_model = policy_spec.model_name;
  trace.meta.policy_seed = policy_spec.seed;
  trace.meta.oracle_kind = to_string(oracle_cfg.kind);
  trace.meta.oracle_model = oracle_cfg.model_name;
  trace.meta.overlap_threshold = oracle_cfg.overlap_threshold;
  trace.meta.oracle_implicit_only = oracle_cfg.implicit_only;
  trace.meta.writer_kind = to_string(writer_cfg.kind);
  trace.meta.writer_model = writer_cfg.model_name;
  trace.meta.judge_kind = to_string(judge_cfg.kind);
  trace.meta.judge_model = judge_cfg.model_name;
  trace.meta.explicit_count = static_cast<int>(task.explicit_sentences.size());
  trace.meta.procedure_count = task.procedure_sentence_count();
  trace.meta.universe_size = task.universe_size();
  trace.started_ms = clock.now_ms();

  UserOracle oracle(oracle_cfg, ctx.gateway, ctx.prompts);
  DraftWriter writer(writer_cfg, ctx.gateway, ctx.prompts);
  std::unique_ptr<Policy> policy = make_policy(policy_spec, task, ctx);

  bool hard_failure = false;
  trace.stop_reason = StopReason::budget_exhausted;
  while (static_cast<int>(trace.turns.size()) < budget) {
    AssistantAction action;
    try {
      action = policy->next(task.explicit_ctx, trace.turns);
    } catch (const std::exception&) {
      hard_failure = true;
      break;
    }
    if (action.kind == AssistantAction::Kind::stop) {
      trace.stop_reason = StopReason::stop_issued;
      break;
    }
    Turn turn;
    turn.turn_index = static_cast<int>(trace.turns.size()) + 1;
    turn.question = action.question;
    try {
      turn.answer = oracle.answer(action.question, task);
      turn.reward = evidence_reward(turn.answer.cited_indices, task.hidden_indices);
    } catch (const GatewayError&) {
      turn.answer = OracleAnswer{};
      turn.reward = 0;
      turn.oracle_failed = true;
      if (ctx.telemetry) ctx.telemetry->oracle_failures.fetch_add(1);
    }
    trace.turns.push_back(std::move(turn));
  }

  if (!hard_failure) {
    try {
      trace.draft = writer.write(task.explicit_ctx, trace.turns);
      if (trace.draft.empty()) throw std::runtime_error("writer returned an empty draft");
    } catch (const std::exception&) {
      hard_failure = true;
    }
  }

  if (!hard_failure && judge_cfg.kind != JudgeKind::none) {
    try {
      DraftJudge judge(judge_cfg, ctx.gateway, ctx.prompts);
      JudgeVerdict verdict = judge.score(trace.draft, task.checklist, task.instance_id);
      trace.judge_score = verdict.score;
      if (verdict_out) *verdict_out = std::move(verdict);
    } catch (const std::exception&) {
      hard_failure = true;
    }
  }

  if (hard_failure) {
    trace.stop_reason = StopReason::policy_error;
    trace.draft.clear();
    trace.judge_score.reset();
  }
  trace.finished_ms = clock.now_ms();
  return trace;
}

}  // namespace elicit
