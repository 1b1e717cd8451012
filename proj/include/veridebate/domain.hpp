#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace veridebate {

/// Class labels. The integer values are the classifier's output order.
enum class Label : int { Real = 0, Fake = 1 };

/// Team stance: Proponents argue True, Opponents argue Fake.
enum class Stance { True, Fake };

enum class DebateRole { OpeningSpeaker, Questioner, Responder, Rebutter, ClosingSpeaker };

enum class DebateStage { Opening = 0, CrossExamination = 1, Rebuttal = 2, Closing = 3 };

enum class Split { Train, Val, Test };

enum class VerdictHint { LeansReal, LeansFake, Undecided };

enum class Language { En, Cn };

inline constexpr std::array<DebateStage, 4> kAllStages{DebateStage::Opening, DebateStage::CrossExamination,
                                                       DebateStage::Rebuttal, DebateStage::Closing};
inline constexpr std::array<DebateRole, 5> kAllRoles{DebateRole::OpeningSpeaker, DebateRole::Questioner,
                                                     DebateRole::Responder, DebateRole::Rebutter,
                                                     DebateRole::ClosingSpeaker};
inline constexpr std::array<Stance, 2> kAllStances{Stance::True, Stance::Fake};

constexpr int stage_index(DebateStage s) { return static_cast<int>(s); }
constexpr int label_index(Label l) { return static_cast<int>(l); }
constexpr Stance opposing(Stance s) { return s == Stance::True ? Stance::Fake : Stance::True; }

/// Whether a role may speak in a stage. Rebuttal admits both Rebutter and Responder.
bool role_legal_in_stage(DebateRole role, DebateStage stage);

std::string_view to_string(Stance s);
std::string_view to_string(DebateRole r);
std::string_view to_string(DebateStage s);
std::string_view to_string(Label l);
std::string_view to_string(Split s);
std::string_view to_string(VerdictHint v);
std::string_view to_string(Language l);

/// Human-readable forms used inside prompts ("Proponent", "Opening Speaker", ...).
std::string_view team_name(Stance s);
std::string_view display_name(DebateRole r);
std::string_view display_name(DebateStage s);

// Parsers throw PreconditionError on unknown spellings.
Stance parse_stance(std::string_view s);
DebateRole parse_role(std::string_view s);
DebateStage parse_stage(std::string_view s);
Label parse_label(std::string_view s);
Split parse_split(std::string_view s);
VerdictHint parse_verdict_hint(std::string_view s);
Language parse_language(std::string_view s);

bool is_blank(std::string_view text);

struct NewsItem {
  std::string id;
  std::string content;
  std::optional<Label> label;
  std::optional<Split> split;
};

/// Throws PreconditionError when the content is blank.
void require_valid(const NewsItem& news);

struct DebateTurn {
  std::size_t turn_index = 0;
  std::string agent_id;
  Stance stance = Stance::True;
  DebateRole role = DebateRole::OpeningSpeaker;
  DebateStage stage = DebateStage::Opening;
  std::string text;
  std::vector<std::size_t> targets;

  bool operator==(const DebateTurn&) const = default;
};

struct DebateLog {
  std::string news_id;
  std::vector<DebateTurn> turns;

  bool operator==(const DebateLog&) const = default;
};

struct SummaryReport {
  std::string news_id;
  std::string text;
  std::optional<VerdictHint> verdict_hint;
};

struct GenerationSettings {
  double temperature = 0.7;
  int max_tokens = 512;
  std::uint64_t seed = 0;

  bool operator==(const GenerationSettings&) const = default;
};

enum class SpeakingOrder { ProponentFirst, OpponentFirst };

struct DebateConfig {
  int agents_per_team = 2;
  GenerationSettings generation;
  SpeakingOrder order = SpeakingOrder::ProponentFirst;
  // Rendered history longer than this is abstracted oldest-first.
  std::size_t history_budget_chars = 16000;
  Language language = Language::En;

  void validate() const;
};

struct Violation {
  std::optional<std::size_t> turn_index;
  std::string rule;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool mentions(std::string_view message) const;
  std::string summary() const;
};

/// Checks every DebateLog invariant. Violations are reported, never thrown.
ValidationResult validate_log(const DebateLog& log);

}  // namespace veridebate
