// Operator entry point: ingest a corpus, run episode batches, aggregate
// reports, and export reward-labeled trajectories.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "elicit/analysis.hpp"
#include "elicit/corpus.hpp"
#include "elicit/gateway.hpp"
#include "elicit/reward.hpp"
#include "elicit/runner.hpp"

namespace {

std::atomic<bool> g_cancel{false};

void handle_interrupt(int) { g_cancel.store(true); }

// "kind" or "kind:model"
std::pair<std::string, std::string> split_role(const std::string& value) {
  std::size_t colon = value.find(':');
  if (colon == std::string::npos) return {value, ""};
  return {value.substr(0, colon), value.substr(colon + 1)};
}

int cmd_ingest(const std::string& corpus_path, const std::string& on_error,
               const std::string& dump_path) {
  elicit::LoadOptions options;
  options.on_error = on_error == "skip" ? elicit::IngestPolicy::skip_and_warn
                                        : elicit::IngestPolicy::abort_on_error;
  elicit::LoadReport report;
  auto instances = elicit::load_corpus(corpus_path, options, &report);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << instances.size() << " instances, " << elicit::distinct_domains(instances)
            << " domains";
  if (report.skipped > 0) std::cout << " (" << report.skipped << " skipped)";
  std::cout << "\n";
  if (instances.empty()) {
    std::cerr << "error: corpus is empty\n";
    return 1;
  }
  if (!dump_path.empty()) {
    std::vector<elicit::MaskedTask> tasks;
    tasks.reserve(instances.size());
    for (const auto& inst : instances) tasks.push_back(elicit::mask(inst));
    elicit::write_masked_dump(tasks, dump_path);
    std::cout << "masked dump written to " << dump_path << "\n";
  }
  return 0;
}

int cmd_run(elicit::RunConfig& config, const std::string& policy_arg,
            const std::string& oracle_arg, const std::string& writer_arg,
            const std::string& judge_arg) {
  auto [policy_kind, policy_model] = split_role(policy_arg);
  config.policy.kind = elicit::policy_kind_from_string(policy_kind);
  config.policy.model_name = policy_model;
  if (config.policy.kind == elicit::PolicyKind::random_asker) config.policy.seed = config.seed;

  auto [oracle_kind, oracle_model] = split_role(oracle_arg);
  if (oracle_kind == "scripted") {
    config.oracle.kind = elicit::OracleKind::scripted;
  } else if (oracle_kind == "llm") {
    config.oracle.kind = elicit::OracleKind::llm;
    config.oracle.model_name = oracle_model;
  } else {
    throw CLI::ValidationError("--oracle", "expected scripted or llm:MODEL");
  }

  auto [writer_kind, writer_model] = split_role(writer_arg);
  if (writer_kind == "mock") {
    config.writer.kind = elicit::WriterKind::mock_concat;
  } else if (writer_kind == "llm") {
    config.writer.kind = elicit::WriterKind::llm;
    config.writer.model_name = writer_model;
  } else {
    throw CLI::ValidationError("--writer", "expected mock or llm:MODEL");
  }

  auto [judge_kind, judge_model] = split_role(judge_arg);
  if (judge_kind == "none") {
    config.judge.kind = elicit::JudgeKind::none;
  } else if (judge_kind == "mock") {
    config.judge.kind = elicit::JudgeKind::mock;
  } else if (judge_kind == "llm") {
    config.judge.kind = elicit::JudgeKind::llm;
    config.judge.model_name = judge_model;
  } else {
    throw CLI::ValidationError("--judge", "expected none, mock, or llm:MODEL");
  }

  std::unique_ptr<elicit::LlmGateway> gateway;
  if (elicit::uses_llm_roles(config)) {
    elicit::GatewayConfig gw_config;
    if (!config.config_path.empty()) gw_config = elicit::load_gateway_config(config.config_path);
    gw_config.mode = config.mode;
    if (!config.cache_path.empty()) gw_config.cache_path = config.cache_path;
    gateway = std::make_unique<elicit::LlmGateway>(std::move(gw_config));
  }

  std::unique_ptr<elicit::PromptSet> prompts;
  if (!config.prompts_dir.empty())
    prompts = std::make_unique<elicit::PromptSet>(elicit::PromptSet::load_dir(config.prompts_dir));

  std::signal(SIGINT, handle_interrupt);
  elicit::RunSummary summary =
      elicit::run_batch_from_corpus(config, gateway.get(), &g_cancel, prompts.get());

  for (const auto& e : summary.errors) std::cerr << "error: " << e << "\n";
  std::cout << "store: " << summary.store_path << "\n"
            << "episodes: " << summary.episodes << "\n"
            << "failures: " << summary.failures << "\n"
            << "mean_score: " << elicit::format_double(summary.mean_score) << " (over "
            << summary.scored << " scored)\n"
            << "mean_return: " << elicit::format_double(summary.mean_return) << "\n";
  if (summary.interrupted) {
    std::cerr << "interrupted; partial results preserved in " << summary.store_path << "\n";
    return 130;
  }
  return (summary.failures > 0 || !summary.errors.empty()) ? 1 : 0;
}

int cmd_report(const std::string& store_path, const std::string& kind, int bins,
               const std::string& out_path) {
  elicit::TraceStore store = elicit::read_trace_store(store_path);
  if (store.traces.empty()) {
    std::cerr << "error: trace store has no traces\n";
    return 1;
  }
  if (kind == "domain") {
    std::vector<std::string> warnings;
    auto rows = elicit::domain_breakdown(store, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    elicit::write_report_csv(rows, out_path);
    std::cout << rows.size() << " rows -> " << out_path << "\n";
  } else if (kind == "by_turn") {
    auto rows = elicit::score_by_turn(store);
    elicit::write_report_csv(rows, out_path);
    std::cout << rows.size() << " rows -> " << out_path << "\n";
  } else if (kind == "positions") {
    auto density = elicit::evidence_position_histogram(store, bins);
    elicit::write_density_csv(density, out_path);
    std::cout << bins << " bins -> " << out_path << "\n";
  } else {
    std::cerr << "error: unknown report kind '" << kind << "'\n";
    return 2;
  }
  return 0;
}

int cmd_export(const std::string& store_path, const std::string& out_path) {
  elicit::TraceStore store = elicit::read_trace_store(store_path);
  std::size_t count = elicit::export_trajectories(store.traces, out_path);
  std::cout << count << " records -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proactive-clarification dialogue harness"};
  app.require_subcommand(1);
  // Global config file: [run] section holds run-flag defaults (flags still
  // win), [gateway] and [model.NAME] sections configure the llm gateway.
  app.set_config("--config", "", "INI config file");
  app.allow_config_extras(true);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load and validate a task corpus");
  std::string ingest_corpus, ingest_on_error = "abort", ingest_dump;
  ingest->add_option("--corpus", ingest_corpus, "Task corpus file (one record per line)")
      ->required();
  ingest->add_option("--on-error", ingest_on_error, "abort | skip")
      ->check(CLI::IsMember({"abort", "skip"}));
  ingest->add_option("--dump-masked", ingest_dump, "Write masked tasks with index table");

  // run
  auto* run = app.add_subcommand("run", "Run a batch of clarification episodes");
  elicit::RunConfig config;
  std::string policy_arg = "null", oracle_arg = "scripted", writer_arg = "mock",
              judge_arg = "mock", mode_arg = "replay";
  run->add_option("--corpus", config.corpus_path, "Task corpus file")->required();
  run->add_option("--out", config.out_store, "Trace store output path")->required();
  run->add_option("--policy", policy_arg, "null | random | perfect | llm:MODEL");
  run->add_option("--oracle", oracle_arg, "scripted | llm:MODEL");
  run->add_option("--writer", writer_arg, "mock | llm:MODEL");
  run->add_option("--judge", judge_arg, "none | mock | llm:MODEL");
  run->add_option("--budget", config.budget, "Turn budget (default 5)");
  run->add_option("--episodes", config.episodes, "Episode count (0: one per task)");
  run->add_option("--filter", config.task_filter, "Substring filter over id/domain");
  run->add_option("--seed", config.seed, "Top-level seed for all randomness");
  run->add_option("--mode", mode_arg, "live | record | replay")
      ->check(CLI::IsMember({"live", "record", "replay"}));
  run->add_option("--workers", config.workers, "Worker pool size");
  run->add_flag("--sweep-budgets", config.sweep_budgets, "Run budgets 0..budget in one batch");
  run->add_option("--overlap-threshold", config.oracle.overlap_threshold,
                  "Scripted-oracle Jaccard threshold in (0,1]");
  run->add_flag("--oracle-implicit-only", config.oracle.implicit_only,
                "Scripted oracle cites implicit sentences only");
  run->add_option("--verdicts", config.verdicts_out, "Judge verdict sidecar output");
  run->add_option("--distiller", config.distiller_model, "Checklist distiller model name");
  run->add_option("--prompts", config.prompts_dir, "Directory of prompt template overrides");
  run->add_option("--cache", config.cache_path, "Gateway record/replay cache file");

  // report
  auto* report = app.add_subcommand("report", "Aggregate a trace store into a table");
  std::string report_store, report_kind, report_out;
  int report_bins = 20;
  report->add_option("--store", report_store, "Trace store path")->required();
  report->add_option("--kind", report_kind, "domain | by_turn | positions")->required();
  report->add_option("--bins", report_bins, "Histogram bins (positions only)");
  report->add_option("--out", report_out, "Report file path")->required();

  // export
  auto* exp = app.add_subcommand("export", "Export reward-labeled trajectory records");
  std::string export_store, export_out;
  exp->add_option("--store", export_store, "Trace store path")->required();
  exp->add_option("--out", export_out, "Trajectory file path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(ingest_corpus, ingest_on_error, ingest_dump);
    if (*run) {
      config.mode = elicit::gateway_mode_from_string(mode_arg);
      const CLI::Option* config_opt = app.get_config_ptr();
      if (config_opt && config_opt->count() > 0)
        config.config_path = config_opt->as<std::string>();
      return cmd_run(config, policy_arg, oracle_arg, writer_arg, judge_arg);
    }
    if (*report) return cmd_report(report_store, report_kind, report_bins, report_out);
    if (*exp) return cmd_export(export_store, export_out);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
