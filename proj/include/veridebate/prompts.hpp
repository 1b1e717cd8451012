#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "veridebate/domain.hpp"

namespace veridebate {

enum class TemplateId { Opening, CrossExam, Rebuttal, Closing, Synthesis };

std::string_view to_string(TemplateId id);

struct PromptTemplate {
  TemplateId id = TemplateId::Opening;
  std::string system;
  std::string user;
};

using PromptValues = std::map<std::string, std::string, std::less<>>;

/// Substitutes {news}, {stance}, {role}, {history}, {team}, {opponent_team} and
/// {criteria}. A known placeholder with no value raises PreconditionError; other
/// brace groups (and braces inside substituted values) pass through untouched.
std::string render_template(std::string_view text, const PromptValues& values);

/// Templates keyed by (language, id). Ships with the assets compiled in; a
/// directory laid out as <dir>/<lang>/<id>.txt overrides individual entries.
class PromptLibrary {
 public:
  static const PromptLibrary& builtin();
  static PromptLibrary with_overrides(const std::filesystem::path& dir);

  const PromptTemplate& get(TemplateId id, Language language) const;

 private:
  void load(std::string_view key, std::string_view text);

  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

/// Parses the "[system]" / "[user]" sectioned asset format.
PromptTemplate parse_prompt_asset(TemplateId id, std::string_view text);

/// One line per turn: "[Turn i] Team Role: <opening words>...".
std::string turn_abstract(const DebateTurn& turn, std::size_t max_chars = 100);

/// Renders turns as a transcript. When the full rendering exceeds budget_chars,
/// the oldest turns are replaced by their one-line abstracts until it fits (or
/// every turn is abstracted).
std::string render_history(std::span<const DebateTurn> turns, std::size_t budget_chars, Language language);

namespace detail {
const std::map<std::string, std::string, std::less<>>& builtin_prompt_assets();
}

}  // namespace veridebate
