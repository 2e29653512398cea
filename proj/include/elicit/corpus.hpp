#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "elicit/text.hpp"

namespace elicit {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// One writing task: objective, procedure, input section, output specification.
struct TaskInstance {
  std::string id;
  std::string domain;
  std::string objective;
  std::string procedure;
  std::string input_section;
  std::string output_spec;
};

enum class SentenceOrigin { objective, input_section, procedure, output_spec };

inline const char* to_string(SentenceOrigin o) {
  switch (o) {
    case SentenceOrigin::objective: return "objective";
    case SentenceOrigin::input_section: return "input_section";
    case SentenceOrigin::procedure: return "procedure";
    case SentenceOrigin::output_spec: return "output_spec";
  }
  return "?";
}

inline SentenceOrigin origin_from_string(std::string_view s) {
  if (s == "objective") return SentenceOrigin::objective;
  if (s == "input_section") return SentenceOrigin::input_section;
  if (s == "procedure") return SentenceOrigin::procedure;
  if (s == "output_spec") return SentenceOrigin::output_spec;
  throw std::invalid_argument("unknown sentence origin: " + std::string(s));
}

struct IndexedSentence {
  int index = 0;
  std::string text;
  SentenceOrigin origin = SentenceOrigin::procedure;
};

/// Character range into the normalized output_spec text.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct ChecklistItem {
  int index = 0;  // 1-based, contiguous
  std::string criterion;
  SourceSpan source_span;
};

/// What the simulated user states outright: objective plus input section.
struct ExplicitContext {
  std::string objective;
  std::string input_section;
  std::set<int> sentence_indices;

  std::string rendered() const {
    return normalize_ws(objective) + "\n" + normalize_ws(input_section);
  }
};

/// A task split into the visible half and the hidden, sentence-indexed half.
///
/// Sentence indices form one unified universe: explicit sentences come first
/// (0..k-1), implicit sentences follow (k..k+|I|-1), and hidden_indices is
/// exactly the implicit range. An answer citation therefore earns reward only
/// when it reaches past the explicit block.
struct MaskedTask {
  std::string instance_id;
  std::string domain;
  ExplicitContext explicit_ctx;
  std::vector<IndexedSentence> explicit_sentences;
  std::vector<IndexedSentence> implicit_sentences;
  std::set<int> hidden_indices;
  std::vector<ChecklistItem> checklist;

  int universe_size() const {
    return static_cast<int>(explicit_sentences.size() + implicit_sentences.size());
  }

  int procedure_sentence_count() const {
    int n = 0;
    for (const auto& s : implicit_sentences)
      if (s.origin == SentenceOrigin::procedure) ++n;
    return n;
  }

  const IndexedSentence* sentence(int index) const {
    const int k = static_cast<int>(explicit_sentences.size());
    if (index >= 0 && index < k) return &explicit_sentences[index];
    const int j = index - k;
    if (j >= 0 && j < static_cast<int>(implicit_sentences.size())) return &implicit_sentences[j];
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Sentence segmentation
// ---------------------------------------------------------------------------

inline bool is_terminal_punct(char c) { return c == '.' || c == '!' || c == '?'; }

/// Bullet/list markers recognized at the start of a (trimmed) line.
/// `line` must already be whitespace-normalized.
inline bool is_bullet_line(std::string_view line) {
  if (line.empty()) return false;
  if ((line[0] == '-' || line[0] == '*') &&
      (line.size() == 1 || line[1] == ' '))
    return true;
  // UTF-8 bullet characters: U+2022 (bullet), U+00B7 (middle dot)
  if (line.size() >= 3 && line.substr(0, 3) == "\xE2\x80\xA2") return true;
  if (line.size() >= 2 && line.substr(0, 2) == "\xC2\xB7") return true;
  // Numbered list item: digits then '.' or ')' then a space.
  std::size_t i = 0;
  while (i < line.size() && i < 4 && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')') &&
      (i + 1 == line.size() || line[i + 1] == ' '))
    return true;
  return false;
}

/// Split text into sentences.
///
/// Rules, in order of precedence:
///   - a line whose first token is a bullet/list marker is one sentence,
///     never split further;
///   - a blank line ends the current sentence;
///   - within running prose (newlines count as spaces), a terminal `.` `!`
///     or `?` followed by whitespace ends a sentence.
///
/// Each sentence is whitespace-normalized. Joining the result with single
/// spaces reproduces normalize_ws(text) exactly, which is what makes masking
/// lossless. Empty input yields an empty list.
inline std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string pending;

  auto flush = [&] {
    if (!pending.empty()) {
      out.push_back(pending);
      pending.clear();
    }
  };
  auto drain = [&] {
    std::size_t start = 0;
    for (std::size_t i = 0; i + 1 < pending.size(); ++i) {
      if (is_terminal_punct(pending[i]) && pending[i + 1] == ' ') {
        out.push_back(pending.substr(start, i + 1 - start));
        start = i + 2;
      }
    }
    pending.erase(0, start);
  };

  for (std::string_view line : split_lines(text)) {
    std::string norm = normalize_ws(line);
    if (norm.empty()) {
      flush();
      continue;
    }
    if (is_bullet_line(norm)) {
      flush();
      out.push_back(std::move(norm));
      continue;
    }
    if (!pending.empty()) pending.push_back(' ');
    pending += norm;
    drain();
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// Checklist extraction
// ---------------------------------------------------------------------------

/// Produces the model text a checklist distiller returns for an output spec.
/// Wired up to the llm gateway at the call site; corpus code only parses it.
using ChecklistDistiller = std::function<std::string(const std::string& output_spec)>;

struct ChecklistResult {
  std::vector<ChecklistItem> items;
  bool used_fallback = false;
  std::string warning;
};

/// Rule-based extraction: one item per segmented sentence/bullet of the spec.
inline std::vector<ChecklistItem> extract_checklist(const std::string& output_spec) {
  std::vector<ChecklistItem> items;
  const std::string norm = normalize_ws(output_spec);
  std::size_t cursor = 0;
  int idx = 1;
  for (auto& sentence : segment_sentences(output_spec)) {
    SourceSpan span;
    std::size_t pos = norm.find(sentence, cursor);
    if (pos != std::string::npos) {
      span.begin = pos;
      span.end = pos + sentence.size();
      cursor = span.end;
    }
    items.push_back(ChecklistItem{idx++, std::move(sentence), span});
  }
  return items;
}

/// Parse distiller output: numbered lines ("1. criterion" / "2) criterion")
/// or single-bullet lines. Returns empty when nothing parses.
inline std::vector<ChecklistItem> parse_distilled_checklist(const std::string& model_text,
                                                            const std::string& output_spec) {
  const std::string norm = normalize_ws(output_spec);
  std::vector<ChecklistItem> items;
  int idx = 1;
  for (std::string_view raw : split_lines(model_text)) {
    std::string line = normalize_ws(raw);
    if (line.empty()) continue;
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i >= line.size() || (line[i] != '.' && line[i] != ')')) continue;
    std::string criterion = std::string(trim_view(std::string_view(line).substr(i + 1)));
    if (criterion.empty()) continue;
    SourceSpan span;
    std::size_t pos = norm.find(criterion);
    if (pos != std::string::npos) {
      span.begin = pos;
      span.end = pos + criterion.size();
    }
    items.push_back(ChecklistItem{idx++, std::move(criterion), span});
  }
  return items;
}

/// Model-backed extraction with rule-based fallback on unparseable output.
inline ChecklistResult extract_checklist(const std::string& output_spec,
                                         const ChecklistDistiller& distiller) {
  ChecklistResult result;
  if (distiller) {
    std::string model_text;
    try {
      model_text = distiller(output_spec);
      result.items = parse_distilled_checklist(model_text, output_spec);
    } catch (const std::exception& e) {
      result.warning = std::string("distiller call failed: ") + e.what();
    }
    if (!result.items.empty()) return result;
    if (result.warning.empty())
      result.warning = "distiller output unparseable, using rule-based checklist";
  }
  result.items = extract_checklist(output_spec);
  result.used_fallback = true;
  return result;
}

// ---------------------------------------------------------------------------
// Masking
// ---------------------------------------------------------------------------

struct MaskingOptions {
  ChecklistDistiller distiller;  // empty: rule-based checklist
};

/// Partition an instance into the explicit half (objective + input section)
/// and the hidden half (procedure + output spec), with one unified sentence
/// index space. Throws when the implicit half segments to zero sentences:
/// such a task cannot carry the evidence reward.
inline MaskedTask mask(const TaskInstance& instance, const MaskingOptions& options = {}) {
  MaskedTask task;
  task.instance_id = instance.id;
  task.domain = instance.domain;
  task.explicit_ctx.objective = instance.objective;
  task.explicit_ctx.input_section = instance.input_section;

  int next = 0;
  auto append = [&](const std::string& text, SentenceOrigin origin,
                    std::vector<IndexedSentence>& dst) {
    for (auto& s : segment_sentences(text))
      dst.push_back(IndexedSentence{next++, std::move(s), origin});
  };

  append(instance.objective, SentenceOrigin::objective, task.explicit_sentences);
  append(instance.input_section, SentenceOrigin::input_section, task.explicit_sentences);
  for (const auto& s : task.explicit_sentences)
    task.explicit_ctx.sentence_indices.insert(s.index);

  append(instance.procedure, SentenceOrigin::procedure, task.implicit_sentences);
  append(instance.output_spec, SentenceOrigin::output_spec, task.implicit_sentences);
  for (const auto& s : task.implicit_sentences) task.hidden_indices.insert(s.index);

  if (task.implicit_sentences.empty())
    throw std::runtime_error("mask: instance '" + instance.id +
                             "' has no implicit sentences; task cannot support the reward");

  ChecklistResult checklist = extract_checklist(instance.output_spec, options.distiller);
  task.checklist = std::move(checklist.items);
  if (task.checklist.empty())
    throw std::runtime_error("mask: instance '" + instance.id + "' yields an empty checklist");
  return task;
}

// ---------------------------------------------------------------------------
// Corpus ingestion (line-delimited JSON records)
// ---------------------------------------------------------------------------

enum class IngestPolicy { abort_on_error, skip_and_warn };

struct LoadOptions {
  IngestPolicy on_error = IngestPolicy::abort_on_error;
};

struct LoadReport {
  std::size_t loaded = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

inline void to_json(nlohmann::json& j, const TaskInstance& t) {
  j = nlohmann::json{{"id", t.id},
                     {"domain", t.domain},
                     {"objective", t.objective},
                     {"procedure", t.procedure},
                     {"input_section", t.input_section},
                     {"output_spec", t.output_spec}};
}

inline TaskInstance parse_task_record(const nlohmann::json& j) {
  TaskInstance t;
  auto field = [&](const char* name, bool required_nonempty) {
    if (!j.contains(name) || !j.at(name).is_string())
      throw std::runtime_error(std::string("missing or non-string field '") + name + "'");
    std::string value = j.at(name).get<std::string>();
    if (required_nonempty && normalize_ws(value).empty())
      throw std::runtime_error(std::string("empty field '") + name + "'");
    return value;
  };
  t.id = field("id", true);
  t.domain = field("domain", false);
  t.objective = field("objective", true);
  t.procedure = field("procedure", true);
  t.input_section = field("input_section", true);
  t.output_spec = field("output_spec", true);
  return t;
}

/// Load one instance per line. Malformed records carry their line number;
/// duplicate ids always abort regardless of the error policy.
inline std::vector<TaskInstance> load_corpus(const std::string& path,
                                             const LoadOptions& options = {},
                                             LoadReport* report = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);

  std::vector<TaskInstance> instances;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  LoadReport local;
  LoadReport& rep = report ? *report : local;

  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_ws(line).empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      TaskInstance t = parse_task_record(j);
      if (!seen_ids.insert(t.id).second)
        throw std::runtime_error("duplicate id '" + t.id + "' at line " + std::to_string(line_no));
      instances.push_back(std::move(t));
      ++rep.loaded;
    } catch (const std::exception& e) {
      std::string msg = "line " + std::to_string(line_no) + ": " + e.what();
      if (msg.find("duplicate id") != std::string::npos ||
          options.on_error == IngestPolicy::abort_on_error)
        throw std::runtime_error("corpus load failed: " + msg);
      rep.warnings.push_back(msg);
      ++rep.skipped;
    }
  }
  return instances;
}

inline std::size_t distinct_domains(const std::vector<TaskInstance>& instances) {
  std::set<std::string> domains;
  for (const auto& t : instances) domains.insert(t.domain);
  return domains.size();
}

// ---------------------------------------------------------------------------
// Masked-task dump (inspection format)
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const IndexedSentence& s) {
  j = nlohmann::json{{"index", s.index}, {"text", s.text}, {"origin", to_string(s.origin)}};
}

inline void to_json(nlohmann::json& j, const ChecklistItem& c) {
  j = nlohmann::json{{"index", c.index},
                     {"criterion", c.criterion},
                     {"span", {{"begin", c.source_span.begin}, {"end", c.source_span.end}}}};
}

inline void to_json(nlohmann::json& j, const MaskedTask& t) {
  nlohmann::json sentences = nlohmann::json::array();
  for (const auto& s : t.explicit_sentences) sentences.push_back(s);
  for (const auto& s : t.implicit_sentences) sentences.push_back(s);
  j = nlohmann::json{{"instance_id", t.instance_id},
                     {"domain", t.domain},
                     {"objective", t.explicit_ctx.objective},
                     {"input_section", t.explicit_ctx.input_section},
                     {"sentences", std::move(sentences)},
                     {"hidden_indices", t.hidden_indices},
                     {"checklist", t.checklist}};
}

inline void write_masked_dump(const std::vector<MaskedTask>& tasks, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open dump file for writing: " + path);
  for (const auto& t : tasks) out << nlohmann::json(t).dump() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace elicit
