#include "veridebate/debate_engine.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace veridebate {

namespace {

std::string_view stance_phrase(Stance s, Language lang) {
  if (lang == Language::Cn) return s == Stance::True ? "该新闻是真实的" : "该新闻是虚假的";
  return s == Stance::True ? "the news item is TRUE (real and accurate)"
                           : "the news item is FAKE (fabricated or misleading)";
}

std::string_view localized_team(Stance s, Language lang) {
  if (lang == Language::Cn) return s == Stance::True ? "正方" : "反方";
  return team_name(s);
}

std::string_view localized_role(DebateRole r, Language lang) {
  if (lang == Language::En) return display_name(r);
  switch (r) {
    case DebateRole::OpeningSpeaker: return "开篇陈词人";
    case DebateRole::Questioner: return "质询人";
    case DebateRole::Responder: return "回应人";
    case DebateRole::Rebutter: return "反驳人";
    case DebateRole::ClosingSpeaker: return "总结陈词人";
  }
  return "?";
}

DebateRole role_for(DebateStage stage) {
  switch (stage) {
    case DebateStage::Opening: return DebateRole::OpeningSpeaker;
    case DebateStage::CrossExamination: return DebateRole::Questioner;
    case DebateStage::Rebuttal: return DebateRole::Rebutter;
    case DebateStage::Closing: return DebateRole::ClosingSpeaker;
  }
  return DebateRole::OpeningSpeaker;
}

bool stage_complete(std::span<const DebateTurn> history, DebateStage stage) {
  bool pro = false;
  bool opp = false;
  for (const auto& t : history) {
    if (t.stage != stage) continue;
    (t.stance == Stance::True ? pro : opp) = true;
  }
  return pro && opp;
}

void require_stages(std::span<const DebateTurn> history, std::initializer_list<DebateStage> stages,
                    std::string_view prompt_name) {
  for (DebateStage stage : stages) {
    if (!stage_complete(history, stage)) {
      throw MissingStageError(fmt::format("{} prompt requires both teams' {} turns", prompt_name, to_string(stage)));
    }
  }
}

std::vector<DebateTurn> select(std::span<const DebateTurn> history, auto&& pred) {
  std::vector<DebateTurn> out;
  std::copy_if(history.begin(), history.end(), std::back_inserter(out), pred);
  return out;
}

GenerationRequest make_request(const PromptTemplate& tmpl, const NewsItem& news, Stance stance, DebateRole role,
                               const std::string& history, const DebateConfig& config) {
  const Language lang = config.language;
  PromptValues values{{"news", news.content},
                      {"stance", std::string(stance_phrase(stance, lang))},
                      {"role", std::string(localized_role(role, lang))},
                      {"team", std::string(localized_team(stance, lang))},
                      {"opponent_team", std::string(localized_team(opposing(stance), lang))},
                      {"history", history}};
  GenerationRequest req;
  if (!tmpl.system.empty()) req.messages.push_back({SpeakerKind::System, render_template(tmpl.system, values)});
  req.messages.push_back({SpeakerKind::User, render_template(tmpl.user, values)});
  req.settings = config.generation;
  return req;
}

}  // namespace

std::string SpeakingSlot::agent_id() const {
  return fmt::format("{}-{}", stance == Stance::True ? "pro" : "opp", agent_slot);
}

std::vector<StagePlan> plan_debate(const DebateConfig& config) {
  config.validate();
  std::vector<StagePlan> plans;
  for (DebateStage stage : kAllStages) {
    const auto slot = static_cast<std::size_t>(stage_index(stage) % config.agents_per_team);
    const DebateRole role = role_for(stage);
    StagePlan plan{stage, {}};
    const Stance first = config.order == SpeakingOrder::ProponentFirst ? Stance::True : Stance::Fake;
    plan.order.push_back({first, role, slot});
    plan.order.push_back({opposing(first), role, slot});
    plans.push_back(std::move(plan));
  }
  return plans;
}

GenerationRequest build_opening_prompt(const NewsItem& news, Stance stance, const DebateConfig& config,
                                       const PromptLibrary& library) {
  require_valid(news);
  const auto& tmpl = library.get(TemplateId::Opening, config.language);
  return make_request(tmpl, news, stance, DebateRole::OpeningSpeaker, "", config);
}

GenerationRequest build_cross_exam_prompt(const NewsItem& news, std::span<const DebateTurn> history, Stance stance,
                                          const DebateConfig& config, const PromptLibrary& library) {
  require_valid(news);
  require_stages(history, {DebateStage::Opening}, "cross-examination");
  const auto quoted = select(history, [&](const DebateTurn& t) {
    return t.stage == DebateStage::Opening && t.stance == opposing(stance);
  });
  const auto& tmpl = library.get(TemplateId::CrossExam, config.language);
  return make_request(tmpl, news, stance, DebateRole::Questioner,
                      render_history(quoted, config.history_budget_chars, config.language), config);
}

GenerationRequest build_rebuttal_prompt(const NewsItem& news, std::span<const DebateTurn> history, Stance stance,
                                        const DebateConfig& config, const PromptLibrary& library) {
  require_valid(news);
  require_stages(history, {DebateStage::Opening, DebateStage::CrossExamination}, "rebuttal");
  const auto quoted = select(history, [&](const DebateTurn& t) {
    return t.stage == DebateStage::CrossExamination && t.stance == opposing(stance);
  });
  const auto& tmpl = library.get(TemplateId::Rebuttal, config.language);
  return make_request(tmpl, news, stance, DebateRole::Rebutter,
                      render_history(quoted, config.history_budget_chars, config.language), config);
}

GenerationRequest build_closing_prompt(const NewsItem& news, std::span<const DebateTurn> history, Stance stance,
                                       const DebateConfig& config, const PromptLibrary& library) {
  require_valid(news);
  require_stages(history, {DebateStage::Opening, DebateStage::CrossExamination, DebateStage::Rebuttal}, "closing");
  const auto quoted = select(history, [](const DebateTurn& t) { return t.stage != DebateStage::Closing; });
  const auto& tmpl = library.get(TemplateId::Closing, config.language);
  return make_request(tmpl, news, stance, DebateRole::ClosingSpeaker,
                      render_history(quoted, config.history_budget_chars, config.language), config);
}

std::vector<std::size_t> reference_targets(DebateStage stage, Stance stance, std::span<const DebateTurn> prior) {
  std::vector<std::size_t> out;
  auto collect = [&](DebateStage from, Stance team) {
    for (const auto& t : prior) {
      if (t.stage == from && t.stance == team) out.push_back(t.turn_index);
    }
  };
  if (stage == DebateStage::CrossExamination) collect(DebateStage::Opening, stance);
  if (stage == DebateStage::Rebuttal) collect(DebateStage::CrossExamination, opposing(stance));
  return out;
}

DebateLog run_debate(const NewsItem& news, const DebateConfig& config, TextGenerator& generator,
                     const PromptLibrary& library) {
  require_valid(news);
  const auto plans = plan_debate(config);

  DebateLog log;
  log.news_id = news.id;
  for (const auto& plan : plans) {
    // Speakers within a stage see only earlier stages.
    const std::size_t stage_start = log.turns.size();
    for (const auto& slot : plan.order) {
      const std::span<const DebateTurn> earlier(log.turns.data(), stage_start);
      GenerationRequest req;
      switch (plan.stage) {
        case DebateStage::Opening: req = build_opening_prompt(news, slot.stance, config, library); break;
        case DebateStage::CrossExamination:
          req = build_cross_exam_prompt(news, earlier, slot.stance, config, library);
          break;
        case DebateStage::Rebuttal: req = build_rebuttal_prompt(news, earlier, slot.stance, config, library); break;
        case DebateStage::Closing: req = build_closing_prompt(news, earlier, slot.stance, config, library); break;
      }
      GenerationResponse resp = generator.generate(req);
      if (is_blank(resp.text)) {
        throw GatewayError(GatewayErrorKind::Malformed, fmt::format("empty utterance for {}", slot.agent_id()));
      }
      DebateTurn turn;
      turn.turn_index = log.turns.size();
      turn.agent_id = slot.agent_id();
      turn.stance = slot.stance;
      turn.role = slot.role;
      turn.stage = plan.stage;
      turn.text = std::move(resp.text);
      turn.targets = reference_targets(plan.stage, slot.stance, earlier);
      log.turns.push_back(std::move(turn));
    }
  }

  if (auto check = validate_log(log); !check.ok()) {
    throw std::logic_error(fmt::format("debate for '{}' produced an invalid log: {}", news.id, check.summary()));
  }
  return log;
}

}  // namespace veridebate
