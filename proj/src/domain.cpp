#include "veridebate/domain.hpp"

#include <algorithm>
#include <cctype>
#include <fmt/format.h>

#include "veridebate/errors.hpp"

namespace veridebate {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<std::pair<std::string_view, Enum>, N>& table,
                std::string_view what) {
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  throw PreconditionError(fmt::format("unknown {} '{}'", what, text));
}

constexpr std::array<std::pair<std::string_view, Stance>, 2> kStanceNames{{
    {"True", Stance::True},
    {"Fake", Stance::Fake},
}};

constexpr std::array<std::pair<std::string_view, DebateRole>, 5> kRoleNames{{
    {"OpeningSpeaker", DebateRole::OpeningSpeaker},
    {"Questioner", DebateRole::Questioner},
    {"Responder", DebateRole::Responder},
    {"Rebutter", DebateRole::Rebutter},
    {"ClosingSpeaker", DebateRole::ClosingSpeaker},
}};

constexpr std::array<std::pair<std::string_view, DebateStage>, 4> kStageNames{{
    {"Opening", DebateStage::Opening},
    {"CrossExamination", DebateStage::CrossExamination},
    {"Rebuttal", DebateStage::Rebuttal},
    {"Closing", DebateStage::Closing},
}};

constexpr std::array<std::pair<std::string_view, Label>, 2> kLabelNames{{
    {"real", Label::Real},
    {"fake", Label::Fake},
}};

constexpr std::array<std::pair<std::string_view, Split>, 3> kSplitNames{{
    {"train", Split::Train},
    {"val", Split::Val},
    {"test", Split::Test},
}};

constexpr std::array<std::pair<std::string_view, VerdictHint>, 3> kHintNames{{
    {"leans_real", VerdictHint::LeansReal},
    {"leans_fake", VerdictHint::LeansFake},
    {"undecided", VerdictHint::Undecided},
}};

constexpr std::array<std::pair<std::string_view, Language>, 2> kLanguageNames{{
    {"en", Language::En},
    {"cn", Language::Cn},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum value, const std::array<std::pair<std::string_view, Enum>, N>& table) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

}  // namespace

bool role_legal_in_stage(DebateRole role, DebateStage stage) {
  switch (stage) {
    case DebateStage::Opening:
      return role == DebateRole::OpeningSpeaker;
    case DebateStage::CrossExamination:
      return role == DebateRole::Questioner;
    case DebateStage::Rebuttal:
      return role == DebateRole::Rebutter || role == DebateRole::Responder;
    case DebateStage::Closing:
      return role == DebateRole::ClosingSpeaker;
  }
  return false;
}

std::string_view to_string(Stance s) { return name_of(s, kStanceNames); }
std::string_view to_string(DebateRole r) { return name_of(r, kRoleNames); }
std::string_view to_string(DebateStage s) { return name_of(s, kStageNames); }
std::string_view to_string(Label l) { return name_of(l, kLabelNames); }
std::string_view to_string(Split s) { return name_of(s, kSplitNames); }
std::string_view to_string(VerdictHint v) { return name_of(v, kHintNames); }
std::string_view to_string(Language l) { return name_of(l, kLanguageNames); }

std::string_view team_name(Stance s) { return s == Stance::True ? "Proponent" : "Opponent"; }

std::string_view display_name(DebateRole r) {
  switch (r) {
    case DebateRole::OpeningSpeaker: return "Opening Speaker";
    case DebateRole::Questioner: return "Questioner";
    case DebateRole::Responder: return "Responder";
    case DebateRole::Rebutter: return "Rebutter";
    case DebateRole::ClosingSpeaker: return "Closing Speaker";
  }
  return "?";
}

std::string_view display_name(DebateStage s) {
  switch (s) {
    case DebateStage::Opening: return "Opening Statement";
    case DebateStage::CrossExamination: return "Cross-examination";
    case DebateStage::Rebuttal: return "Rebuttal";
    case DebateStage::Closing: return "Closing Statement";
  }
  return "?";
}

Stance parse_stance(std::string_view s) { return parse_enum(s, kStanceNames, "stance"); }
DebateRole parse_role(std::string_view s) { return parse_enum(s, kRoleNames, "role"); }
DebateStage parse_stage(std::string_view s) { return parse_enum(s, kStageNames, "stage"); }
Label parse_label(std::string_view s) { return parse_enum(s, kLabelNames, "label"); }
Split parse_split(std::string_view s) { return parse_enum(s, kSplitNames, "split"); }
VerdictHint parse_verdict_hint(std::string_view s) { return parse_enum(s, kHintNames, "verdict hint"); }
Language parse_language(std::string_view s) { return parse_enum(s, kLanguageNames, "language"); }

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

void require_valid(const NewsItem& news) {
  if (is_blank(news.content)) {
    throw PreconditionError(fmt::format("news item '{}' has empty content", news.id));
  }
}

void DebateConfig::validate() const {
  if (agents_per_team < 1) {
    throw PreconditionError(fmt::format("agents_per_team must be >= 1, got {}", agents_per_team));
  }
  if (!(generation.temperature >= 0.0)) {
    throw PreconditionError("temperature must be >= 0");
  }
  if (generation.max_tokens < 1) {
    throw PreconditionError("max_tokens must be >= 1");
  }
}

bool ValidationResult::mentions(std::string_view message) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.message == message; });
}

std::string ValidationResult::summary() const {
  if (ok()) return "ok";
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.message;
  }
  return out;
}

ValidationResult validate_log(const DebateLog& log) {
  ValidationResult result;
  auto report = [&](std::optional<std::size_t> turn, std::string rule, std::string message) {
    result.violations.push_back({turn, std::move(rule), std::move(message)});
  };

  int previous_stage = -1;
  std::array<std::array<bool, 2>, 4> seen{};
  for (std::size_t pos = 0; pos < log.turns.size(); ++pos) {
    const DebateTurn& turn = log.turns[pos];
    const std::size_t idx = turn.turn_index;
    if (idx != pos) {
      report(idx, "contiguous_index", fmt::format("turn_index {} at position {}", idx, pos));
    }
    if (is_blank(turn.text)) {
      report(idx, "non_empty_text", fmt::format("empty text at turn {}", idx));
    }
    if (!role_legal_in_stage(turn.role, turn.stage)) {
      report(idx, "role_stage",
             fmt::format("role {} illegal in stage {} at turn {}", to_string(turn.role), to_string(turn.stage), idx));
    }
    for (std::size_t t : turn.targets) {
      if (t >= idx) {
        report(idx, "backward_targets", fmt::format("forward reference at turn {}", idx));
        break;
      }
    }
    const int s = stage_index(turn.stage);
    if (s < previous_stage) {
      report(idx, "stage_order", fmt::format("stage regression at turn {}", idx));
    }
    previous_stage = std::max(previous_stage, s);
    seen[s][turn.stance == Stance::True ? 0 : 1] = true;
  }

  for (DebateStage stage : kAllStages) {
    const auto& both = seen[stage_index(stage)];
    if (!both[0] && !both[1]) {
      report(std::nullopt, "stage_present", fmt::format("missing stage {}", to_string(stage)));
      continue;
    }
    for (Stance stance : kAllStances) {
      if (!both[stance == Stance::True ? 0 : 1]) {
        report(std::nullopt, "stance_balance",
               fmt::format("stage {} has no {} turn", to_string(stage), team_name(stance)));
      }
    }
  }
  return result;
}

}  // namespace veridebate
