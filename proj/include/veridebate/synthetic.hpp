#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "veridebate/domain.hpp"

namespace veridebate {

enum class SyntheticVariant {
  // Label-correlated cue words appear mostly in the turns of the team whose
  // stance matches the label.
  Lexical,
  // One neutral marker word sits in a single random turn; the label is that
  // turn's stance. Text carries no stance information and the speaking order
  // is randomized, so only the role/stance encoding can solve it.
  RoleDependent,
};

struct SyntheticOptions {
  SyntheticVariant variant = SyntheticVariant::Lexical;
  std::size_t train = 500;
  std::size_t val = 0;
  std::size_t test = 200;
  std::uint64_t seed = 0;
  int agents_per_team = 2;
  double strong_cue_rate = 0.8;  // per turn of the label-aligned team
  double weak_cue_rate = 0.1;    // per turn of the other team
  double noise_cue_rate = 0.05;  // per turn, cue of the wrong label
  std::size_t filler_words = 8;
};

struct SyntheticCorpus {
  std::vector<NewsItem> items;                 // train, then val, then test
  std::map<std::string, DebateLog> debates;    // keyed by news id
};

/// Debate logs follow the real protocol plan (stages, roles, targets) and pass validate_log.
SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& options);

}  // namespace veridebate
