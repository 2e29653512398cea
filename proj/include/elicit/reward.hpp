#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "elicit/trace.hpp"

namespace elicit {

inline constexpr const char* kTrajectorySchema = "elicit.trajectory.v1";

// ---------------------------------------------------------------------------
// Evidence-sentence reward
// ---------------------------------------------------------------------------

/// Binary per-question reward: 1 iff the cited indices reach into the hidden
/// set. Depends only on index sets, never on answer text.
inline int evidence_reward(const std::set<int>& cited, const std::set<int>& hidden) {
  if (hidden.empty())
    throw std::invalid_argument("evidence_reward: hidden set must be non-empty "
                                "(masking should have rejected this task)");
  for (int idx : cited)
    if (hidden.count(idx)) return 1;
  return 0;
}

/// Discounted sum of per-turn rewards; reporting convenience.
inline double episode_return(const EpisodeTrace& trace, double discount = 1.0) {
  if (discount <= 0.0 || discount > 1.0)
    throw std::invalid_argument("episode_return: discount must be in (0, 1]");
  double total = 0.0;
  double weight = 1.0;
  for (const auto& turn : trace.turns) {
    total += weight * turn.reward;
    weight *= discount;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Trajectory export (the boundary with an external RL trainer)
// ---------------------------------------------------------------------------

/// One exportable (context, action, reward) step. Field names are a wire
/// contract; do not rename.
struct TrajectoryRecord {
  std::string instance_id;
  int turn_index = 0;
  std::string context_snapshot;  // explicit context + transcript before this turn
  std::string action_text;       // question, or "STOP"
  int reward = 0;
  std::set<int> cited_indices;
  int hidden_size = 0;
  nlohmann::json metadata;  // policy, oracle, seeds, universe_size
};

inline void to_json(nlohmann::json& j, const TrajectoryRecord& r) {
  j = nlohmann::json{{"instance_id", r.instance_id},
                     {"turn_index", r.turn_index},
                     {"context_snapshot", r.context_snapshot},
                     {"action_text", r.action_text},
                     {"reward", r.reward},
                     {"cited_indices", r.cited_indices},
                     {"hidden_size", r.hidden_size},
                     {"metadata", r.metadata}};
}

inline void from_json(const nlohmann::json& j, TrajectoryRecord& r) {
  r.instance_id = j.at("instance_id").get<std::string>();
  r.turn_index = j.at("turn_index").get<int>();
  r.context_snapshot = j.at("context_snapshot").get<std::string>();
  r.action_text = j.at("action_text").get<std::string>();
  r.reward = j.at("reward").get<int>();
  r.cited_indices = j.at("cited_indices").get<std::set<int>>();
  r.hidden_size = j.at("hidden_size").get<int>();
  r.metadata = j.at("metadata");
}

/// Reference PPO settings carried in the export header as inert metadata for
/// the downstream trainer. Nothing in this artifact consumes them.
inline nlohmann::json reference_hyperparameters() {
  return nlohmann::json{{"ppo_clip", 0.2},      {"batch_size", 256},  {"minibatch_size", 16},
                        {"actor_lr", 2e-5},     {"critic_lr", 1e-4},  {"grad_norm_clip", 1.0},
                        {"turn_budget", 5}};
}

/// The context string the policy saw before asking turn `upto` (0-based count
/// of completed turns). Appending turn t's block yields turn t+1's context,
/// so snapshots form a prefix chain.
inline std::string render_context_snapshot(const std::string& explicit_rendering,
                                           const std::vector<Turn>& turns, std::size_t upto) {
  std::string out = explicit_rendering;
  for (std::size_t i = 0; i < upto && i < turns.size(); ++i) {
    out += "\nQ" + std::to_string(turns[i].turn_index) + ": " + turns[i].question;
    out += "\nA" + std::to_string(turns[i].turn_index) + ": " + turns[i].answer.answer_text;
  }
  return out;
}

inline std::vector<TrajectoryRecord> trajectory_records(const EpisodeTrace& trace,
                                                        const std::string& explicit_rendering) {
  std::vector<TrajectoryRecord> records;
  for (std::size_t i = 0; i < trace.turns.size(); ++i) {
    const Turn& turn = trace.turns[i];
    TrajectoryRecord r;
    r.instance_id = trace.instance_id;
    r.turn_index = turn.turn_index;
    r.context_snapshot = render_context_snapshot(explicit_rendering, trace.turns, i);
    r.action_text = turn.question;
    r.reward = turn.reward;
    r.cited_indices = turn.answer.cited_indices;
    r.hidden_size = trace.meta.universe_size - trace.meta.explicit_count;
    r.metadata = nlohmann::json{{"policy", trace.meta.policy_kind},
                                {"oracle", trace.meta.oracle_kind},
                                {"episode_seed", trace.seed},
                                {"policy_seed", trace.meta.policy_seed},
                                {"universe_size", trace.meta.universe_size}};
    records.push_back(std::move(r));
  }
  return records;
}

/// Write one record per ask-turn across all traces. STOP actions carry no
/// reward and are not exported. On any write failure the partial file is
/// removed before the error propagates.
inline std::size_t export_trajectories(const std::vector<EpisodeTrace>& traces,
                                       const std::string& path) {
  std::size_t count = 0;
  {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open trajectory file for writing: " + path);
    try {
      out << nlohmann::json{{"schema", kTrajectorySchema},
                            {"reference_hyperparameters", reference_hyperparameters()}}
                 .dump()
          << "\n";
      for (const auto& trace : traces) {
        for (auto& record : trajectory_records(trace, trace.explicit_context)) {
          out << nlohmann::json(record).dump() << "\n";
          ++count;
        }
      }
      out.flush();
      if (!out) throw std::runtime_error("trajectory write failed: " + path);
    } catch (...) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(path, ec);
      throw;
    }
  }
  return count;
}

struct TrajectoryFile {
  nlohmann::json header;
  std::vector<TrajectoryRecord> records;
};

inline TrajectoryFile parse_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  TrajectoryFile file;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectory file is empty: " + path);
  file.header = nlohmann::json::parse(line);
  if (file.header.value("schema", "") != kTrajectorySchema)
    throw std::runtime_error("unsupported trajectory schema in " + path);
  while (std::getline(in, line)) {
    if (normalize_ws(line).empty()) continue;
    file.records.push_back(nlohmann::json::parse(line).get<TrajectoryRecord>());
  }
  return file;
}

}  // namespace elicit
