#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "generators.hpp"
#include "veridebate/debate_engine.hpp"
#include "veridebate/prompts.hpp"
#include "veridebate/serialization.hpp"

using namespace veridebate;
namespace fs = std::filesystem;

namespace {

NewsItem news(std::string content = "The city council approved a new bridge on Monday, officials said.") {
  return {"news-7", std::move(content), Label::Real, Split::Test};
}

// Returns a unique marker per call and keeps every request.
class RecordingGenerator : public TextGenerator {
 public:
  GenerationResponse generate(const GenerationRequest& req) override {
    requests.push_back(req);
    return {fmt::format("UTTERANCE-{:02d} with some argument text", requests.size() - 1), "recording", false};
  }
  std::vector<GenerationRequest> requests;
};

class FailingGenerator : public TextGenerator {
 public:
  explicit FailingGenerator(int fail_at) : fail_at_(fail_at) {}
  GenerationResponse generate(const GenerationRequest&) override {
    if (calls++ == fail_at_) throw GatewayError(GatewayErrorKind::Transport, "backend down");
    return {"fine", "failing", false};
  }
  int calls = 0;

 private:
  int fail_at_;
};

std::string all_text(const GenerationRequest& req) {
  std::string out;
  for (const auto& m : req.messages) out += m.text + "\n";
  return out;
}

std::string user_text(const GenerationRequest& req) { return req.messages.back().text; }

bool contains(const std::string& hay, std::string_view needle) { return hay.find(needle) != std::string::npos; }

DebateTurn make_turn(std::size_t i, Stance s, DebateRole r, DebateStage st, std::string text) {
  return {i, s == Stance::True ? "pro-0" : "opp-0", s, r, st, std::move(text), {}};
}

std::vector<DebateTurn> history(std::size_t turns) {
  const std::vector<DebateTurn> all{
      make_turn(0, Stance::True, DebateRole::OpeningSpeaker, DebateStage::Opening, "PRO-OPEN the bridge is real"),
      make_turn(1, Stance::Fake, DebateRole::OpeningSpeaker, DebateStage::Opening, "OPP-OPEN no record exists"),
      make_turn(2, Stance::True, DebateRole::Questioner, DebateStage::CrossExamination, "PRO-ASK which record?"),
      make_turn(3, Stance::Fake, DebateRole::Questioner, DebateStage::CrossExamination, "OPP-ASK who said so?"),
      make_turn(4, Stance::True, DebateRole::Rebutter, DebateStage::Rebuttal, "PRO-REB officials did"),
      make_turn(5, Stance::Fake, DebateRole::Rebutter, DebateStage::Rebuttal, "OPP-REB unnamed officials"),
  };
  return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(turns)};
}

}  // namespace

TEST_CASE("default plan is eight slots, Proponent first") {
  const auto plans = plan_debate(DebateConfig{});
  REQUIRE(plans.size() == 4);
  const std::vector<std::pair<Stance, DebateRole>> expected{
      {Stance::True, DebateRole::OpeningSpeaker}, {Stance::Fake, DebateRole::OpeningSpeaker},
      {Stance::True, DebateRole::Questioner},     {Stance::Fake, DebateRole::Questioner},
      {Stance::True, DebateRole::Rebutter},       {Stance::Fake, DebateRole::Rebutter},
      {Stance::True, DebateRole::ClosingSpeaker}, {Stance::Fake, DebateRole::ClosingSpeaker},
  };
  std::size_t k = 0;
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(plans[s].stage == kAllStages[s]);
    for (const auto& slot : plans[s].order) {
      REQUIRE(k < expected.size());
      CHECK(slot.stance == expected[k].first);
      CHECK(slot.role == expected[k].second);
      CHECK(role_legal_in_stage(slot.role, plans[s].stage));
      ++k;
    }
  }
  CHECK(k == 8);
  // two agents per team alternate across stages
  CHECK(plans[0].order[0].agent_id() == "pro-0");
  CHECK(plans[1].order[0].agent_id() == "pro-1");
  CHECK(plans[2].order[1].agent_id() == "opp-0");
}

TEST_CASE("agent count changes agents, not slots") {
  for (int agents : {1, 2, 3, 5}) {
    DebateConfig c;
    c.agents_per_team = agents;
    std::size_t slots = 0;
    for (const auto& p : plan_debate(c)) {
      slots += p.order.size();
      for (const auto& s : p.order) CHECK(s.agent_slot < static_cast<std::size_t>(agents));
    }
    CHECK(slots == 8);
  }
  DebateConfig bad;
  bad.agents_per_team = 0;
  CHECK_THROWS_AS(plan_debate(bad), PreconditionError);
  DebateConfig opp_first;
  opp_first.order = SpeakingOrder::OpponentFirst;
  CHECK(plan_debate(opp_first)[0].order[0].stance == Stance::Fake);
}

TEST_CASE("opening prompt carries the news and the assigned stance") {
  const auto n = news();
  const auto pro = build_opening_prompt(n, Stance::True);
  const auto opp = build_opening_prompt(n, Stance::Fake);
  CHECK(contains(user_text(pro), n.content));
  CHECK(contains(all_text(pro), "TRUE"));
  CHECK_FALSE(contains(all_text(pro), "FAKE"));
  CHECK(contains(all_text(opp), "FAKE"));
  CHECK(contains(user_text(opp), n.content));
  CHECK_THROWS_AS(build_opening_prompt(news("   "), Stance::True), PreconditionError);
}

TEST_CASE("cross-examination quotes only the opposing team's openings") {
  const auto n = news();
  const auto full = history(2);
  const auto as_opp = all_text(build_cross_exam_prompt(n, full, Stance::Fake));
  CHECK(contains(as_opp, "PRO-OPEN"));
  CHECK_FALSE(contains(as_opp, "OPP-OPEN"));
  const auto as_pro = all_text(build_cross_exam_prompt(n, full, Stance::True));
  CHECK(contains(as_pro, "OPP-OPEN"));
  CHECK_FALSE(contains(as_pro, "PRO-OPEN"));
  CHECK_THROWS_AS(build_cross_exam_prompt(n, history(1), Stance::True), MissingStageError);
}

TEST_CASE("rebuttal quotes the opposing questioner") {
  const auto n = news();
  const auto four = history(4);
  const auto as_pro = all_text(build_rebuttal_prompt(n, four, Stance::True));
  CHECK(contains(as_pro, "OPP-ASK"));
  CHECK_FALSE(contains(as_pro, "PRO-ASK"));
  const auto as_opp = all_text(build_rebuttal_prompt(n, four, Stance::Fake));
  CHECK(contains(as_opp, "PRO-ASK"));
  CHECK_FALSE(contains(as_opp, "OPP-ASK"));
  CHECK_THROWS_AS(build_rebuttal_prompt(n, history(2), Stance::True), MissingStageError);
}

TEST_CASE("closing embeds the whole prior history and differs only by stance") {
  const auto n = news();
  const auto six = history(6);
  const auto pro = build_closing_prompt(n, six, Stance::True);
  const auto opp = build_closing_prompt(n, six, Stance::Fake);
  for (const auto& t : six) {
    CHECK(contains(all_text(pro), t.text));
    CHECK(contains(all_text(opp), t.text));
  }
  CHECK(all_text(pro) != all_text(opp));
  CHECK(pro.settings == opp.settings);
  CHECK(pro.messages.size() == opp.messages.size());
  CHECK_THROWS_AS(build_closing_prompt(n, {}, Stance::True), MissingStageError);
}

TEST_CASE("long histories fall back to per-turn abstracts, oldest first") {
  auto turns = history(6);
  for (auto& t : turns) t.text += " " + std::string(400, 'x');
  const std::string full = render_history(turns, 1000000, Language::En);
  const std::string squeezed = render_history(turns, 1500, Language::En);
  CHECK(squeezed.size() < full.size());
  CHECK(contains(squeezed, turn_abstract(turns[0])));
  CHECK(contains(squeezed, turns[5].text));
  CHECK(turn_abstract(turns[0]).size() < 200);
  CHECK(render_history({}, 10, Language::En) == "(none)");
}

TEST_CASE("template rendering") {
  CHECK(render_template("a {news} b {unknown}", {{"news", "N"}}) == "a N b {unknown}");
  CHECK(render_template("{news}", {{"news", "{history}"}}) == "{history}");
  CHECK_THROWS_AS(render_template("{stance}", {}), PreconditionError);
  const auto t = parse_prompt_asset(TemplateId::Opening, "[system]\nS line\n[user]\nU {news}\n");
  CHECK(t.system == "S line");
  CHECK(t.user == "U {news}");
  for (auto lang : {Language::En, Language::Cn}) {
    for (auto id : {TemplateId::Opening, TemplateId::CrossExam, TemplateId::Rebuttal, TemplateId::Closing,
                    TemplateId::Synthesis}) {
      CHECK_FALSE(PromptLibrary::builtin().get(id, lang).user.empty());
    }
  }
}

TEST_CASE("prompt overrides replace single templates") {
  const auto dir = fs::temp_directory_path() / "veridebate-prompts";
  fs::remove_all(dir);
  fs::create_directories(dir / "en");
  std::ofstream(dir / "en" / "opening.txt") << "[system]\nCustom system.\n[user]\nARGUE {stance} ABOUT {news}\n";
  const auto lib = PromptLibrary::with_overrides(dir);
  const auto req = build_opening_prompt(news(), Stance::True, {}, lib);
  CHECK(contains(user_text(req), "ARGUE the news item is TRUE"));
  CHECK(lib.get(TemplateId::Closing, Language::En).user == PromptLibrary::builtin().get(TemplateId::Closing, Language::En).user);
  CHECK_THROWS_AS(PromptLibrary::with_overrides(dir / "missing"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("mock debate follows the protocol exactly") {
  Gateway gw(std::make_shared<MockBackend>());
  const auto log = run_debate(news(), DebateConfig{}, gw);
  REQUIRE(log.turns.size() == 8);
  CHECK(validate_log(log).ok());
  const std::vector<DebateStage> stages{DebateStage::Opening,  DebateStage::Opening,  DebateStage::CrossExamination,
                                        DebateStage::CrossExamination, DebateStage::Rebuttal, DebateStage::Rebuttal,
                                        DebateStage::Closing,  DebateStage::Closing};
  const std::vector<std::vector<std::size_t>> targets{{}, {}, {0}, {1}, {3}, {2}, {}, {}};
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(log.turns[i].turn_index == i);
    CHECK(log.turns[i].stage == stages[i]);
    CHECK(log.turns[i].targets == targets[i]);
    CHECK(log.turns[i].stance == (i % 2 == 0 ? Stance::True : Stance::Fake));
  }
  CHECK(log.news_id == "news-7");

  Gateway again(std::make_shared<MockBackend>());
  const auto rerun = run_debate(news(), DebateConfig{}, again);
  CHECK(nlohmann::json(rerun).dump() == nlohmann::json(log).dump());

  DebateConfig seeded;
  seeded.generation.seed = 99;
  CHECK(run_debate(news(), seeded, again).turns[0].text != log.turns[0].text);
}

TEST_CASE("a failing generator yields no log at all") {
  for (int fail_at : {0, 3, 7}) {
    FailingGenerator gen(fail_at);
    CHECK_THROWS_AS(run_debate(news(), DebateConfig{}, gen), GatewayError);
    CHECK(gen.calls == fail_at + 1);
  }
}

TEST_CASE("prompts only ever quote earlier stages") {
  gen::Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    DebateConfig c;
    c.agents_per_team = static_cast<int>(rng.range(1, 3));
    c.order = rng.coin() ? SpeakingOrder::ProponentFirst : SpeakingOrder::OpponentFirst;
    c.generation.seed = rng.bits();
    RecordingGenerator gen;
    const auto log = run_debate(news("Story number " + std::to_string(trial)), c, gen);
    REQUIRE(gen.requests.size() == log.turns.size());
    CHECK(validate_log(log).ok());
    for (std::size_t i = 0; i < log.turns.size(); ++i) {
      const std::string prompt = all_text(gen.requests[i]);
      for (const auto& other : log.turns) {
        const bool earlier_stage = stage_index(other.stage) < stage_index(log.turns[i].stage);
        if (!earlier_stage) CHECK_FALSE(contains(prompt, other.text));
      }
    }
    for (auto stage : kAllStages) {
      int pro = 0, opp = 0;
      for (const auto& t : log.turns) {
        if (t.stage == stage) (t.stance == Stance::True ? pro : opp)++;
      }
      CHECK(pro == opp);
      CHECK(pro >= 1);
    }
  }
}

TEST_CASE("reference rule on arbitrary prior turns") {
  const auto six = history(6);
  CHECK(reference_targets(DebateStage::Opening, Stance::True, six).empty());
  CHECK(reference_targets(DebateStage::CrossExamination, Stance::True, six) == std::vector<std::size_t>{0});
  CHECK(reference_targets(DebateStage::CrossExamination, Stance::Fake, six) == std::vector<std::size_t>{1});
  CHECK(reference_targets(DebateStage::Rebuttal, Stance::True, six) == std::vector<std::size_t>{3});
  CHECK(reference_targets(DebateStage::Rebuttal, Stance::Fake, six) == std::vector<std::size_t>{2});
  CHECK(reference_targets(DebateStage::Closing, Stance::Fake, six).empty());
}

TEST_CASE("Chinese prompts use the Chinese templates") {
  DebateConfig c;
  c.language = Language::Cn;
  const auto req = build_opening_prompt(news("市议会周一批准了一座新桥。"), Stance::True, c);
  CHECK(contains(all_text(req), "该新闻是真实的"));
  CHECK(contains(all_text(req), "市议会周一批准了一座新桥。"));
}
