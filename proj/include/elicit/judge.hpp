#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "elicit/corpus.hpp"
#include "elicit/gateway.hpp"
#include "elicit/prompts.hpp"
#include "elicit/text.hpp"

namespace elicit {

enum class JudgeKind { none, mock, llm };

inline const char* to_string(JudgeKind k) {
  switch (k) {
    case JudgeKind::none: return "none";
    case JudgeKind::mock: return "mock";
    case JudgeKind::llm: return "llm";
  }
  return "?";
}

struct JudgeConfig {
  JudgeKind kind = JudgeKind::mock;
  std::string model_name;    // llm only
  double temperature = 0.0;  // llm only
};

struct ItemVerdict {
  int item_index = 0;
  int match = 0;  // 0 or 1
  std::string rationale;
  bool parse_failed = false;
};

struct JudgeVerdict {
  std::string instance_id;
  std::vector<ItemVerdict> per_item;
  double score = 0.0;  // (sum of matches) / m

  int match_sum() const {
    int s = 0;
    for (const auto& v : per_item) s += v.match;
    return s;
  }
};

/// Tokens too generic to count as checklist content.
inline const std::set<std::string>& judge_stopwords() {
  static const std::set<std::string> words = {
      "a",   "an",  "and", "are",  "as",   "at",   "be",  "by",   "for", "from",
      "in",  "is",  "it",  "its",  "of",   "on",   "or",  "that", "the", "their",
      "this", "to",  "was", "were", "will", "with", "must", "should"};
  return words;
}

/// Lowercased alphanumeric tokens of `text` minus the stopword list.
inline std::set<std::string> content_tokens(const std::string& text) {
  std::set<std::string> tokens = token_set(text);
  for (const auto& w : judge_stopwords()) tokens.erase(w);
  return tokens;
}

/// Deterministic stand-in for the llm judge: an item matches when at least
/// 60% of its content tokens appear in the draft. The threshold is arbitrary
/// but fixed. An item with no content tokens matches vacuously.
inline int mock_match(const ChecklistItem& item, const std::string& draft) {
  const auto needed = content_tokens(item.criterion);
  if (needed.empty()) return 1;
  const auto have = token_set(draft);
  std::size_t covered = 0;
  for (const auto& t : needed)
    if (have.count(t)) ++covered;
  return (static_cast<double>(covered) / static_cast<double>(needed.size())) >= 0.6 ? 1 : 0;
}

/// Pull a binary verdict out of judge model text. Accepts YES/NO (any case)
/// or a leading 1/0. Returns -1 when undecidable.
inline int parse_judge_verdict(const std::string& text) {
  for (std::string_view raw : split_lines(text)) {
    std::string_view tok = first_token(raw);
    if (tok.empty()) continue;
    while (!tok.empty() && (tok.back() == '.' || tok.back() == ',' || tok.back() == '!'))
      tok.remove_suffix(1);
    if (iequals(tok, "yes") || tok == "1") return 1;
    if (iequals(tok, "no") || tok == "0") return 0;
  }
  return -1;
}

/// Scores drafts against checklist items: binary Match per item, mean Score
/// per draft. Per-item llm calls are independent, so a parse failure stays
/// local to its item (one retry, then match = 0 with the flag set).
class DraftJudge {
 public:
  explicit DraftJudge(JudgeConfig config, LlmGateway* gateway = nullptr,
                      const PromptSet* prompts = nullptr)
      : config_(std::move(config)), gateway_(gateway), prompts_(prompts) {
    if (config_.kind == JudgeKind::llm && !gateway_)
      throw std::invalid_argument("llm judge requires a gateway");
  }

  ItemVerdict match(const ChecklistItem& item, const std::string& draft) const {
    if (draft.empty()) throw std::invalid_argument("judge: draft must be non-empty");
    ItemVerdict v;
    v.item_index = item.index;
    if (config_.kind == JudgeKind::mock) {
      v.match = mock_match(item, draft);
      return v;
    }
    for (int attempt = 0; attempt < 2; ++attempt) {
      ChatResponse response = gateway_->complete(make_request(item, draft));
      int verdict = parse_judge_verdict(response.text);
      if (verdict >= 0) {
        v.match = verdict;
        v.rationale = response.text;
        return v;
      }
    }
    v.match = 0;  // never default to credit
    v.parse_failed = true;
    return v;
  }

  JudgeVerdict score(const std::string& draft, const std::vector<ChecklistItem>& checklist,
                     const std::string& instance_id = {}) const {
    if (checklist.empty()) throw std::invalid_argument("judge: checklist must be non-empty");
    JudgeVerdict verdict;
    verdict.instance_id = instance_id;
    for (const auto& item : checklist) verdict.per_item.push_back(match(item, draft));
    verdict.score =
        static_cast<double>(verdict.match_sum()) / static_cast<double>(verdict.per_item.size());
    return verdict;
  }

  const JudgeConfig& config() const { return config_; }

 private:
  ChatRequest make_request(const ChecklistItem& item, const std::string& draft) const {
    ChatRequest request;
    request.role_tag = RoleTag::judge;
    request.model_name = config_.model_name;
    request.temperature = config_.temperature;
    const PromptSet defaults;
    const PromptSet& prompts = prompts_ ? *prompts_ : defaults;
    request.messages.push_back({Speaker::user, render_template(prompts.judge,
                                                               {{"criterion", item.criterion},
                                                                {"draft", draft}})});
    return request;
  }

  JudgeConfig config_;
  LlmGateway* gateway_;
  const PromptSet* prompts_;
};

// Verdict store: one JudgeVerdict per line.
inline void to_json(nlohmann::json& j, const ItemVerdict& v) {
  j = nlohmann::json{{"item_index", v.item_index}, {"match", v.match}};
  if (!v.rationale.empty()) j["rationale"] = v.rationale;
  if (v.parse_failed) j["parse_failed"] = true;
}

inline void to_json(nlohmann::json& j, const JudgeVerdict& v) {
  j = nlohmann::json{{"instance_id", v.instance_id}, {"per_item", v.per_item}, {"score", v.score}};
}

}  // namespace elicit
