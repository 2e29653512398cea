#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace elicit {

namespace default_prompts {

// Shipped under prompts/ as editable files; these are the built-in copies
// used when no prompt directory is configured.

inline constexpr const char* kOracle =
    "You are the user: a domain expert who wrote the task below and knows every detail of it.\n"
    "An assistant is drafting the deliverable for you and has asked a question.\n"
    "\n"
    "Task as the assistant sees it:\n"
    "{explicit}\n"
    "\n"
    "Your private notes, one numbered reference sentence per line:\n"
    "{indexed_implicit}\n"
    "\n"
    "Assistant's question:\n"
    "{question}\n"
    "\n"
    "Answer the question using only the reference sentences above. Be concise.\n"
    "Then, on the final line, list the sentence numbers you used, exactly in the form:\n"
    "CITATIONS: 3, 7\n"
    "If no reference sentence answers the question, reply that you cannot help with that\n"
    "and end with:\n"
    "CITATIONS: none\n";

inline constexpr const char* kQuestioning =
    "You are an assistant working on the writing task below. The user gave you only a\n"
    "partial brief; important requirements and domain know-how are still unstated.\n"
    "\n"
    "Task brief:\n"
    "{explicit}\n"
    "\n"
    "Conversation so far:\n"
    "{transcript}\n"
    "\n"
    "Ask ONE short clarification question that uncovers information the brief does not\n"
    "already contain, such as required structure, style, or expert procedure. Do not ask\n"
    "about anything stated above. If you have enough information to write the deliverable,\n"
    "reply with the single word STOP.\n";

inline constexpr const char* kJudge =
    "You are grading a draft against one requirement.\n"
    "\n"
    "Requirement:\n"
    "{criterion}\n"
    "\n"
    "Draft:\n"
    "{draft}\n"
    "\n"
    "Does the draft satisfy the requirement, in both content and presentation?\n"
    "Reply with a single word: YES or NO.\n";

inline constexpr const char* kDistiller =
    "Turn the output specification below into a numbered checklist of binary criteria.\n"
    "Each line must look like \"1. <criterion>\". Cover every stated requirement and\n"
    "invent nothing.\n"
    "\n"
    "Output specification:\n"
    "{output_spec}\n";

}  // namespace default_prompts

/// The editable prompt templates for the model-backed roles.
struct PromptSet {
  std::string oracle = default_prompts::kOracle;            // {explicit} {indexed_implicit} {question}
  std::string questioning = default_prompts::kQuestioning;  // {explicit} {transcript}
  std::string judge = default_prompts::kJudge;              // {criterion} {draft}
  std::string distiller = default_prompts::kDistiller;      // {output_spec}

  /// Override any template from <dir>/{oracle,questioning,judge,distiller}.txt.
  static PromptSet load_dir(const std::string& dir) {
    PromptSet set;
    auto maybe = [&](const char* name, std::string& slot) {
      std::filesystem::path p = std::filesystem::path(dir) / (std::string(name) + ".txt");
      if (!std::filesystem::exists(p)) return;
      std::ifstream in(p);
      if (!in) throw std::runtime_error("cannot read prompt template: " + p.string());
      std::ostringstream buf;
      buf << in.rdbuf();
      slot = buf.str();
    };
    maybe("oracle", set.oracle);
    maybe("questioning", set.questioning);
    maybe("judge", set.judge);
    maybe("distiller", set.distiller);
    return set;
  }
};

}  // namespace elicit
