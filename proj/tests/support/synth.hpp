#pragma once

// Deterministic synthetic corpora and question generators used by unit and
// acceptance tests. Everything here is seeded; no wall-clock or global state.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "elicit/corpus.hpp"

namespace testsup {

inline const std::vector<std::string>& vocab() {
  static const std::vector<std::string> words = {
      "alpha",   "bravo",   "charlie", "delta",  "echo",    "foxtrot", "golf",    "hotel",
      "india",   "juliet",  "kilo",    "lima",   "mike",    "november", "oscar",  "papa",
      "quebec",  "romeo",   "sierra",  "tango",  "uniform", "victor",  "whiskey", "xray",
      "yankee",  "zulu",    "budget",  "plan",   "review",  "draft",   "section", "detail",
      "metric",  "survey",  "client",  "audit",  "model",   "report",  "scope",   "policy"};
  return words;
}

inline std::string rand_sentence(std::mt19937_64& rng, int min_words = 3, int max_words = 8) {
  std::uniform_int_distribution<int> n_words(min_words, max_words);
  std::uniform_int_distribution<std::size_t> pick(0, vocab().size() - 1);
  std::uniform_int_distribution<int> punct(0, 9);
  const int n = n_words(rng);
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (!s.empty()) s.push_back(' ');
    s += vocab()[pick(rng)];
  }
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  const int p = punct(rng);
  s.push_back(p < 7 ? '.' : (p < 9 ? '!' : '?'));
  return s;
}

/// A paragraph with messy whitespace and occasional bullet lines; exercises
/// segmentation and normalization.
inline std::string rand_text(std::mt19937_64& rng, int min_sentences, int max_sentences) {
  std::uniform_int_distribution<int> n_s(min_sentences, max_sentences);
  std::uniform_int_distribution<int> style(0, 9);
  const int n = n_s(rng);
  std::string text;
  for (int i = 0; i < n; ++i) {
    const int sty = style(rng);
    if (!text.empty()) {
      if (sty < 5) text += " ";
      else if (sty < 7) text += "  ";
      else if (sty < 8) text += "\t";
      else text += "\n";
    }
    if (sty == 9) {
      text += "- " + rand_sentence(rng, 2, 5);
    } else {
      text += rand_sentence(rng);
    }
  }
  return text;
}

inline elicit::TaskInstance rand_instance(std::mt19937_64& rng, const std::string& id,
                                          const std::string& domain) {
  elicit::TaskInstance t;
  t.id = id;
  t.domain = domain;
  t.objective = rand_text(rng, 1, 2);
  t.input_section = rand_text(rng, 1, 4);
  t.procedure = rand_text(rng, 1, 4);
  t.output_spec = rand_text(rng, 1, 3);
  return t;
}

inline std::vector<elicit::TaskInstance> rand_corpus(std::uint64_t seed, std::size_t n,
                                                     int n_domains = 3) {
  std::mt19937_64 rng(seed);
  std::vector<elicit::TaskInstance> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(rand_instance(rng, "task-" + std::to_string(i),
                                "domain-" + std::to_string(i % static_cast<std::size_t>(n_domains))));
  return out;
}

/// Question mix: implicit echoes, explicit echoes, token subsets, vocab soup,
/// and text sharing nothing with the task.
inline std::string rand_question(std::mt19937_64& rng, const elicit::MaskedTask& task) {
  std::uniform_int_distribution<int> kind(0, 4);
  switch (kind(rng)) {
    case 0: {
      std::uniform_int_distribution<std::size_t> pick(0, task.implicit_sentences.size() - 1);
      return task.implicit_sentences[pick(rng)].text;
    }
    case 1: {
      if (!task.explicit_sentences.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, task.explicit_sentences.size() - 1);
        return task.explicit_sentences[pick(rng)].text;
      }
      return rand_sentence(rng);
    }
    case 2: {
      // subset of an implicit sentence's words, phrased as a question
      std::uniform_int_distribution<std::size_t> pick(0, task.implicit_sentences.size() - 1);
      const auto tokens = elicit::token_set(task.implicit_sentences[pick(rng)].text);
      std::string q = "What about";
      for (const auto& t : tokens) {
        q += " " + t;
        if (q.size() > 40) break;
      }
      return q + "?";
    }
    case 3:
      return rand_sentence(rng, 3, 7);
    default:
      return "Zzqx vvwp jjkl mmnn?";
  }
}

// ---------------------------------------------------------------------------
// Structured corpora with known coverage / position properties
// ---------------------------------------------------------------------------

/// Tasks whose explicit half supports exactly 2 of 5 checklist items (spec
/// sentences 4 and 5 are repeated in the input section); the other 3 items
/// appear only in the output spec. Token sets are unique per item so judge
/// coverage is exact. One procedure sentence precedes the 5 spec sentences
/// in the implicit block.
inline std::vector<elicit::TaskInstance> coverage_corpus(std::size_t n_tasks, int n_domains = 3) {
  std::vector<elicit::TaskInstance> out;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    const std::string tid = std::to_string(t);
    auto item = [&](int j) {
      std::string s = "Ensure";
      for (int w = 1; w <= 4; ++w)
        s += " req" + tid + "x" + std::to_string(j) + "w" + std::to_string(w);
      return s + ".";
    };
    elicit::TaskInstance inst;
    inst.id = "cov-" + tid;
    inst.domain = "domain-" + std::to_string(t % static_cast<std::size_t>(n_domains));
    inst.objective = "Prepare deliverable obj" + tid + "a for client obj" + tid + "b.";
    inst.input_section =
        "Background fact ctx" + tid + "a with ctx" + tid + "b. " + item(4) + " " + item(5);
    inst.procedure = "Follow internal blueprint proc" + tid + "a and proc" + tid + "b.";
    inst.output_spec = item(1) + " " + item(2) + " " + item(3) + " " + item(4) + " " + item(5);
    out.push_back(std::move(inst));
  }
  return out;
}

/// Tasks with 10 explicit sentences, 7 procedure sentences, and 4 spec
/// sentences: universe size 21, so procedure indices 10..16 sit at normalized
/// positions 0.50..0.80 exactly. All sentences use disjoint token sets.
inline std::vector<elicit::TaskInstance> position_corpus(std::size_t n_tasks) {
  std::vector<elicit::TaskInstance> out;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    const std::string tid = std::to_string(t);
    auto block = [&](const char* tag, int count) {
      // three tokens per sentence, globally unique: no cross-sentence overlap
      std::string text;
      for (int i = 0; i < count; ++i) {
        const std::string stem = std::string(tag) + tid + "n" + std::to_string(i);
        if (!text.empty()) text += " ";
        text += stem + "a " + stem + "b " + stem + "c.";
      }
      return text;
    };
    elicit::TaskInstance inst;
    inst.id = "pos-" + tid;
    inst.domain = "positions";
    inst.objective = block("obj", 2);
    inst.input_section = block("inp", 8);
    inst.procedure = block("proc", 7);
    inst.output_spec = block("spec", 4);
    out.push_back(std::move(inst));
  }
  return out;
}

inline std::string corpus_to_jsonl(const std::vector<elicit::TaskInstance>& instances) {
  std::ostringstream out;
  for (const auto& t : instances) out << nlohmann::json(t).dump() << "\n";
  return out.str();
}

}  // namespace testsup
