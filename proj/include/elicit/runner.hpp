#pragma once

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "elicit/analysis.hpp"
#include "elicit/clock.hpp"
#include "elicit/corpus.hpp"
#include "elicit/dialogue.hpp"
#include "elicit/trace.hpp"

namespace elicit {

// ---------------------------------------------------------------------------
// Batch configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string corpus_path;
  PolicySpec policy;
  OracleConfig oracle;
  WriterConfig writer;
  JudgeConfig judge;
  int budget = 5;            // paper-default turn budget
  int episodes = 0;          // 0: one episode per selected task
  std::string task_filter;   // substring over id or domain; empty selects all
  std::uint64_t seed = 0;
  GatewayMode mode = GatewayMode::replay;
  int workers = 4;
  bool sweep_budgets = false;  // run budgets 0..budget over the same task set
  std::string out_store;
  std::string verdicts_out;      // optional judge-verdict sidecar
  std::string distiller_model;   // optional checklist distiller
  std::string prompts_dir;
  std::string config_path;  // echoed for provenance
  std::string cache_path;
};

/// The episode-semantics half of the config, echoed into store headers.
/// Transport concerns (gateway mode, output/cache/config paths) stay out:
/// replaying a recorded batch or re-running under a different store path
/// must reproduce the store byte-for-byte.
inline nlohmann::json run_config_to_json(const RunConfig& c) {
  return nlohmann::json{
      {"corpus", c.corpus_path},
      {"policy",
       {{"kind", to_string(c.policy.kind)}, {"model", c.policy.model_name}, {"seed", c.policy.seed}}},
      {"oracle",
       {{"kind", to_string(c.oracle.kind)},
        {"model", c.oracle.model_name},
        {"temperature", c.oracle.temperature},
        {"overlap_threshold", c.oracle.overlap_threshold},
        {"implicit_only", c.oracle.implicit_only}}},
      {"writer", {{"kind", to_string(c.writer.kind)}, {"model", c.writer.model_name}}},
      {"judge", {{"kind", to_string(c.judge.kind)}, {"model", c.judge.model_name}}},
      {"budget", c.budget},
      {"episodes", c.episodes},
      {"task_filter", c.task_filter},
      {"seed", c.seed},
      {"workers", c.workers},
      {"sweep_budgets", c.sweep_budgets},
      {"distiller_model", c.distiller_model},
      {"prompts_dir", c.prompts_dir}};
}

struct RunSummary {
  std::size_t episodes = 0;
  std::size_t failures = 0;  // stop_reason == policy_error
  std::size_t scored = 0;
  double mean_score = 0.0;
  double mean_return = 0.0;
  bool interrupted = false;
  std::string store_path;
  std::vector<std::string> errors;
};

inline bool uses_llm_roles(const RunConfig& c) {
  return c.policy.kind == PolicyKind::llm || c.oracle.kind == OracleKind::llm ||
         c.writer.kind == WriterKind::llm || c.judge.kind == JudgeKind::llm ||
         !c.distiller_model.empty();
}

// ---------------------------------------------------------------------------
// Batch runner
// ---------------------------------------------------------------------------

/// Run a batch of episodes over pre-masked tasks with a bounded worker pool.
///
/// Episode order, per-episode seeds, and policy seeds all derive from the one
/// top-level seed, and traces land in the store in job order regardless of
/// worker interleaving, so a rerun of the same config yields a byte-identical
/// store. All offline components keep a logical clock; wall time appears only
/// when some role runs live.
inline RunSummary run_batch(const RunConfig& config, const std::vector<MaskedTask>& tasks,
                            LlmGateway* gateway = nullptr,
                            const std::atomic<bool>* cancel = nullptr) {
  if (config.budget < 0) throw std::invalid_argument("run_batch: budget must be >= 0");
  if (config.out_store.empty()) throw std::invalid_argument("run_batch: out_store is required");
  if (tasks.empty()) throw std::invalid_argument("run_batch: no tasks selected");
  if (uses_llm_roles(config) && !gateway)
    throw std::invalid_argument("run_batch: configuration uses model-backed roles but no "
                                "gateway was provided");

  // Task order is part of the seeded randomness contract.
  std::vector<std::size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 order_rng(mix_seed(config.seed, 0x7a5c));
  std::shuffle(order.begin(), order.end(), order_rng);

  std::vector<int> budgets;
  if (config.sweep_budgets)
    for (int b = 0; b <= config.budget; ++b) budgets.push_back(b);
  else
    budgets.push_back(config.budget);

  struct Job {
    std::size_t index;
    std::size_t task_index;
    int budget;
    std::uint64_t episode_seed;
  };
  std::vector<Job> jobs;
  const std::size_t per_budget =
      config.episodes > 0 ? static_cast<std::size_t>(config.episodes) : tasks.size();
  for (int budget : budgets) {
    for (std::size_t i = 0; i < per_budget; ++i) {
      Job job;
      job.index = jobs.size();
      job.task_index = order[i % order.size()];
      job.budget = budget;
      job.episode_seed = mix_seed(config.seed, jobs.size() + 1);
      jobs.push_back(job);
    }
  }

  // Offline runs use per-episode logical clocks: timestamps count events
  // within their own episode, so parallel workers cannot perturb them and
  // reruns serialize byte-identically. Wall time appears only in live runs.
  const bool offline = !(config.mode == GatewayMode::live && uses_llm_roles(config));
  WallClock wall;

  PromptSet prompts =
      config.prompts_dir.empty() ? PromptSet{} : PromptSet::load_dir(config.prompts_dir);
  DialogueTelemetry telemetry;
  TraceStoreWriter store(config.out_store, run_config_to_json(config));
  std::unique_ptr<std::ofstream> verdict_out;
  if (!config.verdicts_out.empty()) {
    verdict_out = std::make_unique<std::ofstream>(config.verdicts_out, std::ios::trunc);
    if (!*verdict_out)
      throw std::runtime_error("cannot open verdict store for writing: " + config.verdicts_out);
  }

  RunSummary summary;
  summary.store_path = config.out_store;

  std::mutex emit_mu;
  std::map<std::size_t, std::pair<EpisodeTrace, nlohmann::json>> completed;  // job index -> result
  std::size_t next_emit = 0;

  auto emit_ready = [&] {
    // caller holds emit_mu
    while (true) {
      auto it = completed.begin();
      if (it == completed.end() || it->first != next_emit) break;
      const auto& [trace, verdict_json] = it->second;
      store.append(trace);
      if (verdict_out && !verdict_json.is_null()) *verdict_out << verdict_json.dump() << "\n";
      summary.episodes += 1;
      if (trace.stop_reason == StopReason::policy_error) summary.failures += 1;
      if (trace.judge_score) {
        summary.mean_score += *trace.judge_score;
        summary.scored += 1;
      }
      summary.mean_return += episode_return(trace);
      completed.erase(it);
      ++next_emit;
    }
  };

  std::atomic<std::size_t> next_job{0};
  auto worker = [&] {
    while (true) {
      if (cancel && cancel->load()) break;
      const std::size_t j = next_job.fetch_add(1);
      if (j >= jobs.size()) break;
      const Job& job = jobs[j];
      const MaskedTask& task = tasks[job.task_index];

      LogicalClock episode_clock;
      RunContext ctx;
      ctx.gateway = gateway;
      ctx.prompts = &prompts;
      ctx.clock = offline ? static_cast<Clock*>(&episode_clock) : static_cast<Clock*>(&wall);
      ctx.episode_seed = job.episode_seed;
      ctx.telemetry = &telemetry;

      PolicySpec policy = config.policy;
      if (policy.kind == PolicyKind::random_asker)
        policy.seed = mix_seed(config.seed ^ policy.seed, job.index + 0x51ed);

      nlohmann::json verdict_json;
      EpisodeTrace trace;
      try {
        JudgeVerdict verdict;
        trace = run_episode(task, policy, config.oracle, config.writer, config.judge, job.budget,
                            ctx, &verdict);
        if (trace.judge_score) verdict_json = verdict;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(emit_mu);
        summary.errors.push_back("episode " + std::to_string(j) + " (" + task.instance_id +
                                 "): " + e.what());
        continue;
      }
      std::lock_guard<std::mutex> lock(emit_mu);
      completed.emplace(j, std::make_pair(std::move(trace), std::move(verdict_json)));
      emit_ready();
    }
  };

  const int n_workers = std::max(1, config.workers);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  {
    // Drain stragglers: on cancel some job indices never complete, so flush
    // whatever finished, in order.
    std::lock_guard<std::mutex> lock(emit_mu);
    emit_ready();
    for (auto& [index, result] : completed) {
      store.append(result.first);
      if (verdict_out && !result.second.is_null()) *verdict_out << result.second.dump() << "\n";
      summary.episodes += 1;
      if (result.first.stop_reason == StopReason::policy_error) summary.failures += 1;
      if (result.first.judge_score) {
        summary.mean_score += *result.first.judge_score;
        summary.scored += 1;
      }
      summary.mean_return += episode_return(result.first);
    }
    completed.clear();
  }

  summary.interrupted = cancel && cancel->load();
  if (summary.scored > 0) summary.mean_score /= static_cast<double>(summary.scored);
  if (summary.episodes > 0) summary.mean_return /= static_cast<double>(summary.episodes);
  return summary;
}

/// Filter + mask + run: the CLI entry path.
inline RunSummary run_batch_from_corpus(const RunConfig& config, LlmGateway* gateway = nullptr,
                                        const std::atomic<bool>* cancel = nullptr,
                                        const PromptSet* prompts_for_distiller = nullptr) {
  std::vector<TaskInstance> instances = load_corpus(config.corpus_path);
  std::vector<MaskedTask> tasks;
  MaskingOptions mask_options;
  if (!config.distiller_model.empty()) {
    if (!gateway)
      throw std::invalid_argument("distiller configured but no gateway provided");
    const PromptSet defaults;
    const PromptSet& prompts = prompts_for_distiller ? *prompts_for_distiller : defaults;
    mask_options.distiller = [gateway, &prompts, &config](const std::string& output_spec) {
      ChatRequest request;
      request.role_tag = RoleTag::distiller;
      request.model_name = config.distiller_model;
      request.messages.push_back(
          {Speaker::user, render_template(prompts.distiller, {{"output_spec", output_spec}})});
      return gateway->complete(request).text;
    };
  }
  for (const auto& inst : instances) {
    if (!config.task_filter.empty() && inst.id.find(config.task_filter) == std::string::npos &&
        inst.domain.find(config.task_filter) == std::string::npos)
      continue;
    tasks.push_back(mask(inst, mask_options));
  }
  if (tasks.empty())
    throw std::runtime_error("no tasks match filter '" + config.task_filter + "'");
  return run_batch(config, tasks, gateway, cancel);
}

}  // namespace elicit
