#include <algorithm>
#include <array>
#include <cctype>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "veridebate/hashing.hpp"
#include "veridebate/llm_gateway.hpp"

namespace veridebate {

namespace {

constexpr std::array<std::string_view, 8> kOpeners{
    "Let me address the claim directly.",
    "Consider the evidence carefully.",
    "The record deserves a close reading.",
    "We should start from what the article actually says.",
    "Several points stand out on inspection.",
    "A careful reader will notice a few things.",
    "The argument turns on a handful of details.",
    "It helps to separate assertion from evidence.",
};

// "%" is replaced by a quoted content word from the prompt.
constexpr std::array<std::string_view, 12> kArguments{
    "The reference to % deserves scrutiny.",
    "Reports about % can be checked against other outlets.",
    "The mention of % reads like a specific, verifiable detail.",
    "Nothing about % is attributed to a named source.",
    "The framing around % is notably emotional.",
    "Independent coverage of % would settle the question.",
    "The claim regarding % is consistent with prior reporting.",
    "The passage on % leans on anonymous insiders.",
    "The tone when discussing % stays fairly neutral.",
    "The account of % lacks dates and locations.",
    "Official statements on % are cited only vaguely.",
    "The story of % matches what a wire service would publish.",
};

constexpr std::array<std::string_view, 6> kClosers{
    "On balance, the news is likely true.",
    "On balance, the news is likely fake.",
    "The evidence remains inconclusive.",
    "Further verification is needed before drawing conclusions.",
    "Both sides raised points worth weighing.",
    "The strongest arguments should carry the day.",
};

constexpr std::array<std::string_view, 24> kStopwords{
    "about", "above", "after", "again", "their", "there", "these", "those", "which", "while",
    "would", "should", "could", "where", "other", "being", "debate", "stance", "opponent", "proponent",
    "argue", "team", "turn", "news",
};

std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 5 &&
        std::find(kStopwords.begin(), kStopwords.end(), current) == kStopwords.end() && seen.insert(current).second) {
      out.push_back(current);
    }
    current.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace

std::string MockBackend::complete(const GenerationRequest& req) {
  req.validate();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& m : req.messages) {
    h = fnv1a64(m.text, h);
    h = fnv1a64("\x1f", h);
  }
  std::mt19937_64 rng(splitmix64(h ^ splitmix64(req.settings.seed)));
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  std::string_view last_user;
  for (const auto& m : req.messages) {
    if (m.kind == SpeakerKind::User) last_user = m.text;
  }
  const auto words = content_words(last_user.empty() ? std::string_view(req.messages.back().text) : last_user);

  std::string out(kOpeners[pick(kOpeners.size())]);
  const std::size_t n_args = 3 + pick(3);
  for (std::size_t i = 0; i < n_args; ++i) {
    std::string sentence(kArguments[pick(kArguments.size())]);
    const std::string word = words.empty() ? std::string("the story") : words[pick(words.size())];
    sentence.replace(sentence.find('%'), 1, word);
    out += ' ';
    out += sentence;
  }
  out += ' ';
  out += kClosers[pick(kClosers.size())];
  return out;
}

}  // namespace veridebate
