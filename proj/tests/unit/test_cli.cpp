#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "veridebate/app.hpp"
#include "veridebate/dataset.hpp"
#include "veridebate/errors.hpp"
#include "veridebate/serialization.hpp"
#include "veridebate/synthetic.hpp"

using namespace veridebate;
namespace fs = std::filesystem;

namespace {

fs::path fresh(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "veridebate-cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path three_items(const fs::path& dir) {
  const std::vector<NewsItem> items{
      {"alpha", "The mayor opened a new library on Tuesday.", Label::Real, Split::Train},
      {"beta", "Aliens endorsed a local candidate, sources claim.", Label::Fake, Split::Train},
      {"gamma", "Rainfall this spring matched the ten-year average.", Label::Real, Split::Test},
  };
  const auto path = dir / "three.jsonl";
  write_dataset_jsonl(path, items);
  return path;
}

fs::path synthetic_dataset(const fs::path& dir, std::size_t train, std::size_t test) {
  SyntheticOptions o;
  o.train = train;
  o.test = test;
  o.seed = 12;
  const auto corpus = make_synthetic_corpus(o);
  const auto path = dir / "synthetic.jsonl";
  write_dataset_jsonl(path, corpus.items);
  return path;
}

PipelineConfig base_config(const fs::path& root, const fs::path& dataset, const std::string& run_id) {
  PipelineConfig c;
  c.paths.dataset = dataset;
  c.paths.out = root / "runs";
  c.run_id = run_id;
  c.embedding.dim = 16;
  c.model.text_dim = 16;
  c.model.role_dim = 4;
  c.model.gat_layers = 1;
  c.model.gat_hidden = 8;
  c.model.proj_dim = 8;
  c.model.heads = 2;
  c.training.epochs = 3;
  c.training.batch_size = 8;
  c.set_seed(7);
  return c;
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext ? 1 : 0;
  return n;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VERIDEBATE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("debate writes one transcript per item and resumes for free") {
  const auto root = fresh("debate");
  const auto data = three_items(root);
  const auto first = cmd_debate(base_config(root, data, "one"));
  CHECK(first.exit_code == 0);
  CHECK(first.processed == 3);
  CHECK(first.gateway.backend_calls == 24);
  const auto tx = root / "runs" / "one" / "transcripts";
  CHECK(count_files(tx, ".json") == 3);
  for (const char* id : {"alpha", "beta", "gamma"}) CHECK(fs::exists(tx / (std::string(id) + ".json")));

  const auto rerun = cmd_debate(base_config(root, data, "one"));
  CHECK(rerun.gateway.backend_calls == 0);
  CHECK(rerun.skipped == 3);
  CHECK(rerun.processed == 0);

  // Same inputs in a fresh workspace: byte-identical transcripts.
  cmd_debate(base_config(root, data, "two"));
  for (const char* id : {"alpha", "beta", "gamma"}) {
    const std::string name = std::string(id) + ".json";
    CHECK(read_text(tx / name) == read_text(root / "runs" / "two" / "transcripts" / name));
  }
  const auto log = nlohmann::json::parse(read_text(tx / "alpha.json")).get<DebateLog>();
  CHECK(validate_log(log).ok());
}

TEST_CASE("an unwritable transcripts directory fails at startup") {
  const auto root = fresh("unwritable");
  const auto data = three_items(root);
  std::ofstream(root / "blocker") << "a file, not a directory";
  auto c = base_config(root, data, "x");
  c.paths.transcripts = root / "blocker" / "transcripts";
  CHECK_THROWS_AS(cmd_debate(c), ConfigError);
}

TEST_CASE("per-item failures set the exit code only in strict mode") {
  const auto root = fresh("strict");
  const auto data = three_items(root);
  auto c = base_config(root, data, "s");
  cmd_debate(c);
  fs::remove(root / "runs" / "s" / "transcripts" / "beta.json");
  auto strict = cmd_synthesize(c);
  CHECK(strict.failed == 1);
  CHECK(strict.processed == 2);
  CHECK(strict.exit_code != 0);
  c.dataset.strict = false;
  const auto lenient = cmd_synthesize(c);
  CHECK(lenient.failed == 1);
  CHECK(lenient.skipped == 2);
  CHECK(lenient.exit_code == 0);
}

TEST_CASE("pipeline is deterministic and writes the explanation bundle") {
  const auto root = fresh("pipeline");
  const auto data = synthetic_dataset(root, 40, 12);
  const auto a = cmd_pipeline(base_config(root, data, "a"));
  const auto b = cmd_pipeline(base_config(root, data, "b"));
  REQUIRE(a.output.has_value());
  REQUIRE(b.output.has_value());
  CHECK(read_text(*a.output) == read_text(*b.output));
  const auto metrics = nlohmann::json::parse(read_text(*a.output));
  const double mac = metrics.at("metrics").at("macF1").get<double>();
  CHECK(mac >= 0.0);
  CHECK(mac <= 1.0);
  CHECK(metrics.at("variant") == "full");
  CHECK(metrics.at("training").at("loss_history").size() == 3);

  const auto dir = root / "runs" / "a" / "full";
  for (const char* f : {"predictions.jsonl", "explanations.jsonl", "metrics.txt", "model.ckpt"}) {
    CHECK(fs::exists(dir / f));
  }
  std::ifstream in(dir / "explanations.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(fs::exists(j.at("transcript").get<std::string>()));
    CHECK(fs::exists(j.at("report").get<std::string>()));
    ++lines;
  }
  CHECK(lines == 12);
}

TEST_CASE("pipeline without a train split names the stage") {
  const auto root = fresh("notrain");
  const auto path = root / "test-only.jsonl";
  write_dataset_jsonl(path, std::vector<NewsItem>{{"t1", "Only a test item.", Label::Real, Split::Test}});
  try {
    cmd_pipeline(base_config(root, path, "x"));
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find("no training items") != std::string::npos);
  }
}

TEST_CASE("train, predict and evaluate chain through files") {
  const auto root = fresh("chain");
  const auto data = synthetic_dataset(root, 30, 10);
  const auto c = base_config(root, data, "r");
  const auto trained = cmd_train(c);
  REQUIRE(trained.output.has_value());
  CHECK(fs::exists(*trained.output));
  const auto preds = root / "out" / "preds.jsonl";
  const auto predicted = cmd_predict(c, *trained.output, preds);
  CHECK(predicted.processed == 10);
  CHECK(predicted.gateway.backend_calls == 80);  // test debates are new
  CHECK(cmd_predict(c, *trained.output, preds).gateway.backend_calls == 0);
  const auto evaluated = cmd_evaluate(preds);
  REQUIRE(evaluated.output.has_value());
  const auto m = nlohmann::json::parse(read_text(*evaluated.output));
  CHECK(m.at("total") == 10);
  CHECK(fs::exists(root / "out" / "preds.metrics.txt"));

  auto mismatched = c;
  mismatched.embedding.dim = 12;
  mismatched.model.text_dim = 12;
  CHECK_THROWS_AS(cmd_predict(mismatched, *trained.output, preds), ConfigError);
}

TEST_CASE("ablate writes one row per variant") {
  const auto root = fresh("ablate");
  const auto data = synthetic_dataset(root, 20, 8);
  const auto out = cmd_ablate(base_config(root, data, "ab"),
                              {AblationToggle::Full, AblationToggle::NoDebate, AblationToggle::NoAnalysis});
  REQUIRE(out.output.has_value());
  const auto j = nlohmann::json::parse(read_text(*out.output));
  REQUIRE(j.size() == 3);
  CHECK(j[1].at("variant") == "no_debate");
  const std::string table = read_text(root / "runs" / "ab" / "ablation.txt");
  CHECK(table.find("no_analysis") != std::string::npos);
  CHECK(fs::exists(root / "runs" / "ab" / "no_debate" / "metrics.json"));
}

TEST_CASE("remote backend needs the key from the environment") {
  const auto root = fresh("remote");
  auto c = base_config(root, three_items(root), "r");
  c.gateway.backend = "remote";
  unsetenv(kApiKeyEnv);
  CHECK_THROWS_AS(make_backend(c), ConfigError);
  setenv(kApiKeyEnv, "dummy", 1);
  CHECK(make_backend(c)->id().rfind("remote:", 0) == 0);
  unsetenv(kApiKeyEnv);
}

TEST_CASE("default run ids carry the seed") {
  const auto id = default_run_id(42);
  CHECK(id.size() > 4);
  CHECK(id.substr(id.size() - 4) == "-s42");
}

TEST_CASE("command-line front end") {
  const auto root = fresh("binary");
  const auto data = three_items(root);
  const std::string common = "--dataset " + data.string() + " --out " + (root / "runs").string();
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") != 0);
  CHECK(run_cli("debate --backend carrier-pigeon " + common) != 0);
  CHECK(run_cli("debate --run-id cli --seed 3 " + common) == 0);
  CHECK(count_files(root / "runs" / "cli" / "transcripts", ".json") == 3);
  CHECK(run_cli("ablate --variants full,bogus --run-id cli " + common) != 0);

  const auto notrain = root / "notrain.jsonl";
  write_dataset_jsonl(notrain, std::vector<NewsItem>{{"t1", "Only a test item.", Label::Real, Split::Test}});
  CHECK(run_cli("pipeline --dataset " + notrain.string() + " --out " + (root / "runs").string()) != 0);

  const auto ini = root / "bad.ini";
  std::ofstream(ini) << "[nonsense]\nkey = 1\n";
  CHECK(run_cli("debate --config " + ini.string() + " " + common) != 0);
}
