#pragma once

#include <span>
#include <string>
#include <vector>

#include "veridebate/domain.hpp"
#include "veridebate/errors.hpp"
#include "veridebate/llm_gateway.hpp"
#include "veridebate/prompts.hpp"

namespace veridebate {

/// A stage prompt was requested before the history it quotes exists.
class MissingStageError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

struct SpeakingSlot {
  Stance stance = Stance::True;
  DebateRole role = DebateRole::OpeningSpeaker;
  std::size_t agent_slot = 0;

  std::string agent_id() const;
  bool operator==(const SpeakingSlot&) const = default;
};

struct StagePlan {
  DebateStage stage = DebateStage::Opening;
  std::vector<SpeakingSlot> order;
};

/// Four stage plans, one speaking slot per team per stage. The agent for stage k
/// is team slot k mod agents_per_team.
std::vector<StagePlan> plan_debate(const DebateConfig& config);

/// Stage-specific prompt builders. Each embeds the news content; history-based
/// builders only ever quote turns from strictly earlier stages.
GenerationRequest build_opening_prompt(const NewsItem& news, Stance stance, const DebateConfig& config = {},
                                       const PromptLibrary& library = PromptLibrary::builtin());
GenerationRequest build_cross_exam_prompt(const NewsItem& news, std::span<const DebateTurn> history, Stance stance,
                                          const DebateConfig& config = {},
                                          const PromptLibrary& library = PromptLibrary::builtin());
GenerationRequest build_rebuttal_prompt(const NewsItem& news, std::span<const DebateTurn> history, Stance stance,
                                        const DebateConfig& config = {},
                                        const PromptLibrary& library = PromptLibrary::builtin());
GenerationRequest build_closing_prompt(const NewsItem& news, std::span<const DebateTurn> history, Stance stance,
                                       const DebateConfig& config = {},
                                       const PromptLibrary& library = PromptLibrary::builtin());

/// Turns a new turn responds to: cross-examination points at the speaker's own
/// team's opening, rebuttal at the opposing team's cross-examination, others at nothing.
std::vector<std::size_t> reference_targets(DebateStage stage, Stance stance, std::span<const DebateTurn> prior);

/// Runs the full four-stage debate. Strictly sequential; either returns a log
/// that passes validate_log or throws (no partial logs).
DebateLog run_debate(const NewsItem& news, const DebateConfig& config, TextGenerator& generator,
                     const PromptLibrary& library = PromptLibrary::builtin());

}  // namespace veridebate
