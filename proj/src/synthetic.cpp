#include "veridebate/synthetic.hpp"

#include <array>
#include <random>
#include <string_view>

#include <fmt/format.h>

#include "veridebate/debate_engine.hpp"
#include "veridebate/hashing.hpp"

namespace veridebate {

namespace {

constexpr std::array<std::string_view, 40> kFiller{
    "report",  "council", "weather", "market",  "season",   "river",    "station", "harbor",  "budget",  "vote",
    "meeting", "school",  "bridge",  "festival", "airport", "museum",   "village", "factory", "highway", "garden",
    "league",  "theater", "clinic",  "library", "courier",  "province", "ferry",   "orchard", "tunnel",  "stadium",
    "canal",   "summit",  "quarter", "harvest", "railway",  "plaza",    "archive", "forum",   "mill",    "depot"};

constexpr std::array<std::string_view, 4> kRealCues{"verified", "documented", "corroborated", "confirmed"};
constexpr std::array<std::string_view, 4> kFakeCues{"fabricated", "doctored", "hoax", "debunked"};
constexpr std::string_view kMarker = "notably";

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double uniform() { return unit_interval(rng_()); }
  std::size_t index(std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n))); }
  bool coin(double p) { return uniform() < p; }

 private:
  std::mt19937_64 rng_;
};

std::vector<std::string> filler(Draw& d, std::size_t n) {
  std::vector<std::string> words;
  for (std::size_t k = 0; k < n; ++k) words.emplace_back(kFiller[d.index(kFiller.size())]);
  return words;
}

void insert_word(Draw& d, std::vector<std::string>& words, std::string_view w) {
  words.insert(words.begin() + static_cast<long>(d.index(words.size() + 1)), std::string(w));
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out + ".";
}

DebateLog skeleton(const std::string& id, SpeakingOrder order, int agents_per_team) {
  DebateConfig cfg;
  cfg.agents_per_team = agents_per_team;
  cfg.order = order;
  DebateLog log;
  log.news_id = id;
  for (const auto& plan : plan_debate(cfg)) {
    const std::size_t stage_start = log.turns.size();
    for (const auto& slot : plan.order) {
      DebateTurn t;
      t.turn_index = log.turns.size();
      t.agent_id = slot.agent_id();
      t.stance = slot.stance;
      t.role = slot.role;
      t.stage = plan.stage;
      t.targets = reference_targets(plan.stage, slot.stance, std::span<const DebateTurn>(log.turns.data(), stage_start));
      log.turns.push_back(std::move(t));
    }
  }
  return log;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& o) {
  SyntheticCorpus corpus;
  Draw d(splitmix64(o.seed ^ 0x5eed5eed5eedULL));
  const std::size_t total = o.train + o.val + o.test;
  for (std::size_t k = 0; k < total; ++k) {
    NewsItem item;
    item.id = fmt::format("syn-{:04d}", k);
    item.split = k < o.train ? Split::Train : (k < o.train + o.val ? Split::Val : Split::Test);
    const Label label = d.coin(0.5) ? Label::Fake : Label::Real;
    item.label = label;
    item.content = "news " + join(filler(d, o.filler_words));

    if (o.variant == SyntheticVariant::Lexical) {
      const Stance aligned = label == Label::Real ? Stance::True : Stance::Fake;
      const auto& right = label == Label::Real ? kRealCues : kFakeCues;
      const auto& wrong = label == Label::Real ? kFakeCues : kRealCues;
      DebateLog log = skeleton(item.id, SpeakingOrder::ProponentFirst, o.agents_per_team);
      for (auto& t : log.turns) {
        auto words = filler(d, o.filler_words);
        if (d.coin(t.stance == aligned ? o.strong_cue_rate : o.weak_cue_rate)) {
          insert_word(d, words, right[d.index(right.size())]);
        }
        if (d.coin(o.noise_cue_rate)) insert_word(d, words, wrong[d.index(wrong.size())]);
        t.text = join(words);
      }
      corpus.debates.emplace(item.id, std::move(log));
    } else {
      const auto order = d.coin(0.5) ? SpeakingOrder::ProponentFirst : SpeakingOrder::OpponentFirst;
      DebateLog log = skeleton(item.id, order, o.agents_per_team);
      // Pick the marked turn among the turns of the team matching the label.
      const Stance wanted = label == Label::Real ? Stance::True : Stance::Fake;
      std::vector<std::size_t> candidates;
      for (const auto& t : log.turns) {
        if (t.stance == wanted) candidates.push_back(t.turn_index);
      }
      const std::size_t marked = candidates[d.index(candidates.size())];
      for (auto& t : log.turns) {
        auto words = filler(d, o.filler_words);
        if (t.turn_index == marked) insert_word(d, words, kMarker);
        t.text = join(words);
      }
      corpus.debates.emplace(item.id, std::move(log));
    }
    corpus.items.push_back(std::move(item));
  }
  return corpus;
}

}  // namespace veridebate
