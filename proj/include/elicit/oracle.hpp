#pragma once

#include <atomic>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "elicit/corpus.hpp"
#include "elicit/gateway.hpp"
#include "elicit/prompts.hpp"
#include "elicit/text.hpp"

namespace elicit {

inline constexpr const char* kOracleRefusal = "I cannot answer that from what I know.";

enum class OracleKind { llm, scripted };

inline const char* to_string(OracleKind k) {
  return k == OracleKind::llm ? "llm" : "scripted";
}

struct OracleConfig {
  OracleKind kind = OracleKind::scripted;
  std::string model_name;       // llm only
  double temperature = 0.0;     // llm only
  double overlap_threshold = 0.2;  // scripted only, in (0, 1]
  bool implicit_only = false;   // scripted only: never cite explicit sentences
};

/// The simulated user's reply: prose plus the evidence sentences it cites.
struct OracleAnswer {
  std::string answer_text;
  std::set<int> cited_indices;
  std::int64_t latency_ms = 0;  // telemetry only, excluded from trace serialization
};

/// Extract the index list from a "CITATIONS: 3, 7" line (last occurrence
/// wins). Returns false when no parseable block exists.
inline bool parse_citation_block(const std::string& text, std::set<int>& out) {
  constexpr std::string_view marker = "CITATIONS:";
  std::size_t pos = text.rfind(marker);
  if (pos == std::string::npos) return false;
  std::string_view rest(text);
  rest.remove_prefix(pos + marker.size());
  std::size_t nl = rest.find('\n');
  if (nl != std::string_view::npos) rest = rest.substr(0, nl);
  rest = trim_view(rest);
  if (iequals(first_token(rest), "none")) return true;  // explicit empty set
  bool any = false;
  std::size_t i = 0;
  while (i < rest.size()) {
    if (std::isdigit(static_cast<unsigned char>(rest[i]))) {
      int value = 0;
      while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i])))
        value = value * 10 + (rest[i++] - '0');
      out.insert(value);
      any = true;
    } else {
      ++i;
    }
  }
  return any;
}

/// Simulated user holding both halves of the task. Answers questions and
/// returns the cited sentence indices over the unified index universe.
///
/// The scripted kind is deterministic: it cites every sentence whose Jaccard
/// token overlap with the question meets the configured threshold. The llm
/// kind makes one gateway call and parses the citation block; out-of-range
/// or duplicate indices are dropped, never invented.
class UserOracle {
 public:
  explicit UserOracle(OracleConfig config, LlmGateway* gateway = nullptr,
                      const PromptSet* prompts = nullptr)
      : config_(std::move(config)), gateway_(gateway), prompts_(prompts) {
    if (config_.overlap_threshold <= 0.0 || config_.overlap_threshold > 1.0)
      throw std::invalid_argument("oracle overlap_threshold must be in (0, 1]");
    if (config_.temperature < 0.0)
      throw std::invalid_argument("oracle temperature must be >= 0");
    if (config_.kind == OracleKind::llm && !gateway_)
      throw std::invalid_argument("llm oracle requires a gateway");
  }

  OracleAnswer answer(const std::string& question, const MaskedTask& task) const {
    if (question.empty()) throw std::invalid_argument("oracle: question must be non-empty");
    return config_.kind == OracleKind::scripted ? scripted_answer(question, task)
                                                : llm_answer(question, task);
  }

  /// Citation-only sub-call; for the scripted kind this is the reward's
  /// independent re-check path.
  std::set<int> cite(const std::string& question, const MaskedTask& task) const {
    if (config_.kind == OracleKind::scripted) return scripted_cite(question, task);
    return answer(question, task).cited_indices;
  }

  const OracleConfig& config() const { return config_; }
  std::int64_t out_of_range_dropped() const { return out_of_range_dropped_.load(); }
  std::int64_t parse_failures() const { return parse_failures_.load(); }

 private:
  std::set<int> scripted_cite(const std::string& question, const MaskedTask& task) const {
    const auto q_tokens = token_set(question);
    std::set<int> cited;
    auto consider = [&](const IndexedSentence& s) {
      if (jaccard(q_tokens, token_set(s.text)) >= config_.overlap_threshold)
        cited.insert(s.index);
    };
    if (!config_.implicit_only)
      for (const auto& s : task.explicit_sentences) consider(s);
    for (const auto& s : task.implicit_sentences) consider(s);
    return cited;
  }

  OracleAnswer scripted_answer(const std::string& question, const MaskedTask& task) const {
    OracleAnswer out;
    out.cited_indices = scripted_cite(question, task);
    std::string text;
    for (const auto& s : task.implicit_sentences) {
      if (!out.cited_indices.count(s.index)) continue;
      if (!text.empty()) text.push_back(' ');
      text += s.text;
    }
    // Only-explicit citations still need a non-empty reply; the user has
    // nothing new to add, so they refuse.
    out.answer_text = text.empty() ? kOracleRefusal : std::move(text);
    return out;
  }

  OracleAnswer llm_answer(const std::string& question, const MaskedTask& task) const {
    std::ostringstream indexed;
    for (const auto& s : task.implicit_sentences)
      indexed << "[" << s.index << "] " << s.text << "\n";

    ChatRequest request;
    request.role_tag = RoleTag::oracle;
    request.model_name = config_.model_name;
    request.temperature = config_.temperature;
    const PromptSet defaults;
    const PromptSet& prompts = prompts_ ? *prompts_ : defaults;
    request.messages.push_back(
        {Speaker::user, render_template(prompts.oracle, {{"explicit", task.explicit_ctx.rendered()},
                                                         {"indexed_implicit", indexed.str()},
                                                         {"question", question}})});

    ChatResponse response = gateway_->complete(request);

    OracleAnswer out;
    out.latency_ms = response.latency_ms;
    std::set<int> raw;
    if (!parse_citation_block(response.text, raw)) parse_failures_.fetch_add(1);
    const int universe = task.universe_size();
    for (int idx : raw) {
      if (idx >= 0 && idx < universe)
        out.cited_indices.insert(idx);
      else
        out_of_range_dropped_.fetch_add(1);
    }
    out.answer_text = response.text;
    if (out.answer_text.empty()) out.cited_indices.clear();
    return out;
  }

  OracleConfig config_;
  LlmGateway* gateway_;
  const PromptSet* prompts_;
  mutable std::atomic<std::int64_t> out_of_range_dropped_{0};
  mutable std::atomic<std::int64_t> parse_failures_{0};
};

}  // namespace elicit
