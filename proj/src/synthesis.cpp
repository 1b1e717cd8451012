#include "veridebate/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <fmt/format.h>

#include "veridebate/errors.hpp"

namespace veridebate {

namespace {

constexpr std::array<std::string_view, 12> kRealSignals{
    "likely true", "likely real", "likely authentic", "leans real", "leans true", "is credible",
    "appears authentic", "appears genuine", "is authentic", "可能是真实的", "倾向于真实", "新闻是真实的",
};

constexpr std::array<std::string_view, 13> kFakeSignals{
    "likely fake", "likely false", "likely fabricated", "leans fake", "is fabricated", "not credible",
    "is misinformation", "appears fabricated", "not authentic", "is fake", "可能是虚假的", "倾向于虚假",
    "新闻是虚假的",
};

std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
  });
  return out;
}

template <std::size_t N>
bool contains_any(const std::string& text, const std::array<std::string_view, N>& phrases) {
  return std::any_of(phrases.begin(), phrases.end(),
                     [&](std::string_view p) { return text.find(p) != std::string::npos; });
}

}  // namespace

const std::array<std::string_view, 5>& synthesis_criteria(Language language) {
  return language == Language::Cn ? kSynthesisCriteriaCn : kSynthesisCriteriaEn;
}

GenerationRequest build_synthesis_prompt(const NewsItem& news, const DebateLog& log, const SynthesisOptions& options,
                                         const PromptLibrary& library) {
  require_valid(news);
  std::string criteria;
  const auto& items = synthesis_criteria(options.language);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) criteria += '\n';
    criteria += fmt::format("{}. {}", i + 1, items[i]);
  }
  PromptValues values{{"news", news.content},
                      {"history", render_history(log.turns, options.history_budget_chars, options.language)},
                      {"criteria", criteria}};
  const auto& tmpl = library.get(TemplateId::Synthesis, options.language);
  GenerationRequest req;
  if (!tmpl.system.empty()) req.messages.push_back({SpeakerKind::System, render_template(tmpl.system, values)});
  req.messages.push_back({SpeakerKind::User, render_template(tmpl.user, values)});
  req.settings = options.generation;
  return req;
}

SummaryReport synthesize(const NewsItem& news, const DebateLog& log, TextGenerator& generator,
                         const SynthesisOptions& options, const PromptLibrary& library) {
  if (auto check = validate_log(log); !check.ok()) {
    throw PreconditionError(fmt::format("cannot synthesize invalid log '{}': {}", log.news_id, check.summary()));
  }
  if (log.news_id != news.id) {
    throw PreconditionError(fmt::format("log '{}' does not belong to news item '{}'", log.news_id, news.id));
  }
  GenerationResponse resp = generator.generate(build_synthesis_prompt(news, log, options, library));
  if (is_blank(resp.text)) {
    throw GatewayError(GatewayErrorKind::Malformed, fmt::format("empty synthesis report for '{}'", news.id));
  }
  SummaryReport report;
  report.news_id = news.id;
  report.verdict_hint = parse_verdict_hint_from_text(resp.text);
  report.text = std::move(resp.text);
  return report;
}

VerdictHint parse_verdict_hint_from_text(std::string_view report_text) {
  const std::string text = lowercase_ascii(report_text);
  const bool real = contains_any(text, kRealSignals);
  const bool fake = contains_any(text, kFakeSignals);
  if (real == fake) return VerdictHint::Undecided;
  return real ? VerdictHint::LeansReal : VerdictHint::LeansFake;
}

}  // namespace veridebate
