#pragma once

#include <cstdint>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "elicit/oracle.hpp"

namespace elicit {

inline constexpr const char* kTraceSchema = "elicit.trace.v1";

// ---------------------------------------------------------------------------
// Episode types
// ---------------------------------------------------------------------------

struct AssistantAction {
  enum class Kind { ask, stop };
  Kind kind = Kind::stop;
  std::string question;  // ask only, non-empty

  static AssistantAction ask(std::string q) {
    if (q.empty()) throw std::invalid_argument("ask action requires a non-empty question");
    return AssistantAction{Kind::ask, std::move(q)};
  }
  static AssistantAction stop() { return AssistantAction{}; }
};

struct Turn {
  int turn_index = 0;  // 1-based
  std::string question;
  OracleAnswer answer;
  int reward = 0;             // 0 or 1
  bool oracle_failed = false;  // transient oracle fault; reward forced to 0
};

enum class StopReason { budget_exhausted, stop_issued, policy_error };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::budget_exhausted: return "budget_exhausted";
    case StopReason::stop_issued: return "stop_issued";
    case StopReason::policy_error: return "policy_error";
  }
  return "?";
}

inline StopReason stop_reason_from_string(const std::string& s) {
  if (s == "budget_exhausted") return StopReason::budget_exhausted;
  if (s == "stop_issued") return StopReason::stop_issued;
  if (s == "policy_error") return StopReason::policy_error;
  throw std::invalid_argument("unknown stop reason: " + s);
}

/// Everything a report needs that is not part of the dialogue itself.
/// The sentence-block counts let downstream consumers rebuild H
/// (indices explicit_count .. universe_size-1) and classify any cited
/// index by origin without re-reading the corpus.
struct EpisodeMeta {
  std::string policy_kind;
  std::string policy_model;
  std::uint64_t policy_seed = 0;
  std::string oracle_kind;
  std::string oracle_model;
  double overlap_threshold = 0.2;
  bool oracle_implicit_only = false;
  std::string writer_kind;
  std::string writer_model;
  std::string judge_kind;
  std::string judge_model;
  int explicit_count = 0;
  int procedure_count = 0;
  int universe_size = 0;
};

struct EpisodeTrace {
  std::string instance_id;
  std::string domain;
  int budget = 0;
  std::uint64_t seed = 0;
  std::string explicit_context;  // rendered E, the base of every prompt
  std::vector<Turn> turns;
  StopReason stop_reason = StopReason::budget_exhausted;
  std::string draft;
  std::optional<double> judge_score;
  std::int64_t started_ms = 0;
  std::int64_t finished_ms = 0;
  EpisodeMeta meta;

  std::set<int> hidden_indices() const {
    std::set<int> h;
    for (int i = meta.explicit_count; i < meta.universe_size; ++i) h.insert(i);
    return h;
  }
};

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const Turn& t) {
  j = nlohmann::json{{"turn_index", t.turn_index},
                     {"question", t.question},
                     {"answer_text", t.answer.answer_text},
                     {"cited_indices", t.answer.cited_indices},
                     {"reward", t.reward}};
  if (t.oracle_failed) j["oracle_failed"] = true;
}

inline void from_json(const nlohmann::json& j, Turn& t) {
  t.turn_index = j.at("turn_index").get<int>();
  t.question = j.at("question").get<std::string>();
  t.answer.answer_text = j.at("answer_text").get<std::string>();
  t.answer.cited_indices = j.at("cited_indices").get<std::set<int>>();
  t.reward = j.at("reward").get<int>();
  t.oracle_failed = j.value("oracle_failed", false);
}

inline void to_json(nlohmann::json& j, const EpisodeMeta& m) {
  j = nlohmann::json{{"policy_kind", m.policy_kind},
                     {"policy_model", m.policy_model},
                     {"policy_seed", m.policy_seed},
                     {"oracle_kind", m.oracle_kind},
                     {"oracle_model", m.oracle_model},
                     {"overlap_threshold", m.overlap_threshold},
                     {"oracle_implicit_only", m.oracle_implicit_only},
                     {"writer_kind", m.writer_kind},
                     {"writer_model", m.writer_model},
                     {"judge_kind", m.judge_kind},
                     {"judge_model", m.judge_model},
                     {"explicit_count", m.explicit_count},
                     {"procedure_count", m.procedure_count},
                     {"universe_size", m.universe_size}};
}

inline void from_json(const nlohmann::json& j, EpisodeMeta& m) {
  m.policy_kind = j.value("policy_kind", "");
  m.policy_model = j.value("policy_model", "");
  m.policy_seed = j.value("policy_seed", std::uint64_t{0});
  m.oracle_kind = j.value("oracle_kind", "");
  m.oracle_model = j.value("oracle_model", "");
  m.overlap_threshold = j.value("overlap_threshold", 0.2);
  m.oracle_implicit_only = j.value("oracle_implicit_only", false);
  m.writer_kind = j.value("writer_kind", "");
  m.writer_model = j.value("writer_model", "");
  m.judge_kind = j.value("judge_kind", "");
  m.judge_model = j.value("judge_model", "");
  m.explicit_count = j.value("explicit_count", 0);
  m.procedure_count = j.value("procedure_count", 0);
  m.universe_size = j.value("universe_size", 0);
}

inline void to_json(nlohmann::json& j, const EpisodeTrace& t) {
  j = nlohmann::json{{"instance_id", t.instance_id},
                     {"domain", t.domain},
                     {"budget", t.budget},
                     {"seed", t.seed},
                     {"explicit_context", t.explicit_context},
                     {"turns", t.turns},
                     {"stop_reason", to_string(t.stop_reason)},
                     {"draft", t.draft},
                     {"started_ms", t.started_ms},
                     {"finished_ms", t.finished_ms},
                     {"meta", t.meta}};
  if (t.judge_score) j["judge_score"] = *t.judge_score;
}

inline void from_json(const nlohmann::json& j, EpisodeTrace& t) {
  t.instance_id = j.at("instance_id").get<std::string>();
  t.domain = j.value("domain", "");
  t.budget = j.at("budget").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.explicit_context = j.value("explicit_context", "");
  t.turns = j.at("turns").get<std::vector<Turn>>();
  t.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
  t.draft = j.value("draft", "");
  if (j.contains("judge_score")) t.judge_score = j.at("judge_score").get<double>();
  t.started_ms = j.value("started_ms", std::int64_t{0});
  t.finished_ms = j.value("finished_ms", std::int64_t{0});
  t.meta = j.value("meta", EpisodeMeta{});
}

// ---------------------------------------------------------------------------
// Trace store: header line + one trace per line, append-only
// ---------------------------------------------------------------------------

class TraceStoreWriter {
 public:
  /// Creates the store and writes its header. `config_echo` is the effective
  /// run configuration, embedded so any stored run is reproducible.
  TraceStoreWriter(const std::string& path, const nlohmann::json& config_echo)
      : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open trace store for writing: " + path);
    out_ << nlohmann::json{{"schema", kTraceSchema}, {"config", config_echo}}.dump() << "\n";
    out_.flush();
  }

  /// Thread-safe; each trace lands as one complete line.
  void append(const EpisodeTrace& trace) {
    const std::string line = nlohmann::json(trace).dump();
    std::lock_guard<std::mutex> lock(mu_);
    out_ << line << "\n";
    out_.flush();
    if (!out_) throw std::runtime_error("trace store write failed: " + path_);
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::mutex mu_;
};

struct TraceStore {
  nlohmann::json header;
  std::vector<EpisodeTrace> traces;
};

inline TraceStore read_trace_store(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace store: " + path);
  TraceStore store;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace store is empty: " + path);
  store.header = nlohmann::json::parse(line);
  if (store.header.value("schema", "") != kTraceSchema)
    throw std::runtime_error("unsupported trace store schema in " + path);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_ws(line).empty()) continue;
    try {
      store.traces.push_back(nlohmann::json::parse(line).get<EpisodeTrace>());
    } catch (const std::exception& e) {
      throw std::runtime_error("trace store " + path + " line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return store;
}

}  // namespace elicit
