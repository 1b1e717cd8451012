#pragma once

#include <array>
#include <string_view>

#include "veridebate/domain.hpp"
#include "veridebate/llm_gateway.hpp"
#include "veridebate/prompts.hpp"

namespace veridebate {

/// The five-point authenticity checklist the Synthesis Agent evaluates against.
inline constexpr std::array<std::string_view, 5> kSynthesisCriteriaEn{
    "Whether the news contains specific details and verifiable information.",
    "Whether the news cites reliable sources or news organizations.",
    "The tone and style of the news, with real news generally being more objective and neutral.",
    "Any use of emotional language, which might be a characteristic of fake news.",
    "Whether the information in the news can be confirmed through other reliable channels.",
};

inline constexpr std::array<std::string_view, 5> kSynthesisCriteriaCn{
    "新闻是否包含具体细节和可核实的信息。",
    "新闻是否引用了可靠的来源或新闻机构。",
    "新闻的语气和风格，真实新闻通常更加客观和中立。",
    "是否使用了情绪化的语言，这可能是虚假新闻的特征。",
    "新闻中的信息能否通过其他可靠渠道得到证实。",
};

const std::array<std::string_view, 5>& synthesis_criteria(Language language);

struct SynthesisOptions {
  Language language = Language::En;
  GenerationSettings generation;
  std::size_t history_budget_chars = 24000;
};

/// Renders the synthesis prompt: news, the full transcript and the numbered checklist.
GenerationRequest build_synthesis_prompt(const NewsItem& news, const DebateLog& log, const SynthesisOptions& options,
                                         const PromptLibrary& library = PromptLibrary::builtin());

/// Precondition: log passes validate_log and belongs to the news item.
SummaryReport synthesize(const NewsItem& news, const DebateLog& log, TextGenerator& generator,
                         const SynthesisOptions& options = {},
                         const PromptLibrary& library = PromptLibrary::builtin());

/// Keyword heuristic over the report text. Conflicting or absent signals give Undecided.
VerdictHint parse_verdict_hint_from_text(std::string_view report_text);

}  // namespace veridebate
